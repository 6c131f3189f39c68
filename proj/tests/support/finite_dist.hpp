#pragma once

// Exact finite distributions over (x, a, y) for oracle checks. The support
// is a list of feature points with integer counts per (point, group, label)
// cell, so every conditional probability, conditional mean, and definitional
// unfairness value is an exact rational computed with a handful of doubles.
// The definitional unfairness here is written directly from the rate-based
// definitions (positive rates, true/false positive rates), independent of
// the library's event/weight encodings.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fairpost/core.hpp"
#include "fairpost/estimators.hpp"
#include "fairpost/unfairness.hpp"

namespace testsupport {

class FiniteDist {
  public:
    // A decision rule as a function of the support: f(point index, group).
    using Rule = std::function<int(std::size_t, int)>;

    FiniteDist(int d, int k) : d_(d), k_(k) {}

    std::size_t add_point(std::vector<double> x) {
        if (static_cast<int>(x.size()) != d_)
            throw std::invalid_argument("point dimension mismatch");
        points_.push_back(std::move(x));
        counts_.resize(points_.size() * static_cast<std::size_t>(k_) * 2, 0);
        return points_.size() - 1;
    }

    void set_count(std::size_t i, int a, int y, std::size_t c) {
        counts_.at(slot(i, a, y)) = c;
        total_ = 0;
        for (std::size_t v : counts_) total_ += v;
    }

    int d() const { return d_; }
    int k() const { return k_; }
    std::size_t n_points() const { return points_.size(); }
    std::size_t total() const { return total_; }
    const std::vector<double>& point(std::size_t i) const {
        return points_.at(i);
    }

    double mass(std::size_t i, int a, int y) const {
        return static_cast<double>(counts_.at(slot(i, a, y))) /
               static_cast<double>(total_);
    }

    // ---- exact conditionals -------------------------------------------
    double eta_aware(std::size_t i, int a) const {
        const double p1 = mass(i, a, 1);
        const double p0 = mass(i, a, 0);
        return p1 / (p0 + p1);
    }

    double eta_blind(std::size_t i) const {
        double pos = 0.0, all = 0.0;
        for (int a = 1; a <= k_; ++a) {
            pos += mass(i, a, 1);
            all += mass(i, a, 0) + mass(i, a, 1);
        }
        return pos / all;
    }

    double rho_given_label(std::size_t i, int a, int y) const {
        double denom = 0.0;
        for (int g = 1; g <= k_; ++g) denom += mass(i, g, y);
        return mass(i, a, y) / denom;
    }

    double rho_marginal(std::size_t i, int a) const {
        double num = mass(i, a, 0) + mass(i, a, 1);
        double denom = 0.0;
        for (int g = 1; g <= k_; ++g)
            denom += mass(i, g, 0) + mass(i, g, 1);
        return num / denom;
    }

    double cell_prob(int y, int a) const {
        double p = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) p += mass(i, a, y);
        return p;
    }

    double group_prob(int a) const {
        return cell_prob(0, a) + cell_prob(1, a);
    }

    double positive_prob() const {
        double p = 0.0;
        for (int a = 1; a <= k_; ++a) p += cell_prob(1, a);
        return p;
    }

    fairpost::Marginals marginals() const {
        fairpost::Marginals m;
        m.k_groups = k_;
        m.p_cell.resize(static_cast<std::size_t>(2 * k_));
        for (int y = 0; y <= 1; ++y)
            for (int a = 1; a <= k_; ++a)
                m.p_cell[static_cast<std::size_t>(y * k_ + a - 1)] =
                    cell_prob(y, a);
        return m;
    }

    // ---- expectations --------------------------------------------------
    // E[f | A in a?, Y in y?]; absent filters mean no conditioning.
    double cond_mean(const Rule& f, std::optional<int> a,
                     std::optional<int> y) const {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            for (int g = 1; g <= k_; ++g) {
                if (a && *a != g) continue;
                for (int lab = 0; lab <= 1; ++lab) {
                    if (y && *y != lab) continue;
                    const double p = mass(i, g, lab);
                    den += p;
                    if (f(i, g) != 0) num += p;
                }
            }
        }
        return num / den;
    }

    // E[g(point, a, y)] over the joint distribution.
    double expectation(
        const std::function<double(std::size_t, int, int)>& g) const {
        double e = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (int a = 1; a <= k_; ++a)
                for (int y = 0; y <= 1; ++y)
                    e += mass(i, a, y) * g(i, a, y);
        return e;
    }

    double risk(const Rule& f) const {
        return expectation([&](std::size_t i, int a, int y) {
            return f(i, a) != y ? 1.0 : 0.0;
        });
    }

    // ---- definitional unfairness ----------------------------------------
    // Rates: positive rate PR_a = P(f=1|A=a), TPR_a = P(f=1|A=a,Y=1),
    // FPR_a = P(f=1|A=a,Y=0), TNR_a = 1 - FPR_a; population versions
    // condition on Y only. The binary forms contrast group 1 against group
    // 2; the grouped forms contrast every group against the population.
    double definitional_unfairness(fairpost::Notion notion, const Rule& f,
                                   bool grouped) const {
        using fairpost::Notion;
        auto pr = [&](std::optional<int> a) { return cond_mean(f, a, {}); };
        auto tpr = [&](std::optional<int> a) { return cond_mean(f, a, 1); };
        auto fpr = [&](std::optional<int> a) { return cond_mean(f, a, 0); };
        if (!grouped) {
            if (k_ != 2)
                throw std::invalid_argument(
                    "binary definitions need exactly 2 groups");
            switch (notion) {
                case Notion::DemographicParity:
                    return std::abs(pr(1) - pr(2));
                case Notion::EqualOpportunity:
                    return std::abs(tpr(1) - tpr(2));
                case Notion::PredictiveEquality:
                    return std::abs(fpr(1) - fpr(2));
                case Notion::OverallAccuracyEquality: {
                    const double bal1 = tpr(1) + (1.0 - fpr(1));
                    const double bal2 = tpr(2) + (1.0 - fpr(2));
                    return std::abs(bal1 - bal2);
                }
                case Notion::EqualizedOdds:
                    return std::max(std::abs(tpr(1) - tpr(2)),
                                    std::abs(fpr(1) - fpr(2)));
            }
        }
        double worst = 0.0;
        for (int a = 1; a <= k_; ++a) {
            double value = 0.0;
            switch (notion) {
                case Notion::DemographicParity:
                    value = std::abs(pr(a) - pr({}));
                    break;
                case Notion::EqualOpportunity:
                    value = std::abs(tpr(a) - tpr({}));
                    break;
                case Notion::PredictiveEquality:
                    value = std::abs(fpr(a) - fpr({}));
                    break;
                case Notion::OverallAccuracyEquality:
                    value = std::abs((tpr(a) - tpr({})) -
                                     (fpr(a) - fpr({})));
                    break;
                case Notion::EqualizedOdds:
                    value = std::max(std::abs(tpr(a) - tpr({})),
                                     std::abs(fpr(a) - fpr({})));
                    break;
            }
            worst = std::max(worst, value);
        }
        return worst;
    }

    // ---- bridges to library types --------------------------------------
    // Dataset with each (point, a, y) row repeated exactly count times, so
    // empirical quantities on it equal the population values here.
    fairpost::Dataset to_dataset() const {
        fairpost::Dataset data(d_, k_);
        data.reserve(total_);
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (int a = 1; a <= k_; ++a)
                for (int y = 0; y <= 1; ++y)
                    for (std::size_t c = 0; c < counts_.at(slot(i, a, y));
                         ++c)
                        data.add(points_[i], a, y);
        return data;
    }

    std::size_t index_of(std::span<const double> x) const {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            bool same = points_[i].size() == x.size();
            for (std::size_t j = 0; same && j < x.size(); ++j)
                same = points_[i][j] == x[j];
            if (same) return i;
        }
        throw std::invalid_argument("feature vector is not a support point");
    }

    fairpost::EtaFn eta_fn(fairpost::Scenario scenario) const {
        if (scenario == fairpost::Scenario::Aware) {
            return [this](std::span<const double> x, int a) {
                return eta_aware(index_of(x), a);
            };
        }
        return [this](std::span<const double> x, int a) {
            (void)a;
            return eta_blind(index_of(x));
        };
    }

    // Closure with an arbitrary per-(point, group) value table.
    fairpost::PhiFn table_fn(std::vector<std::vector<double>> table) const {
        return [this, table = std::move(table)](std::span<const double> x,
                                                int a) {
            return table.at(index_of(x)).at(static_cast<std::size_t>(a - 1));
        };
    }

    std::vector<std::uint8_t> predictions(const Rule& f) const {
        // Prediction vector aligned with to_dataset() row order.
        std::vector<std::uint8_t> out;
        out.reserve(total_);
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (int a = 1; a <= k_; ++a)
                for (int y = 0; y <= 1; ++y)
                    for (std::size_t c = 0; c < counts_.at(slot(i, a, y));
                         ++c)
                        out.push_back(static_cast<std::uint8_t>(f(i, a)));
        return out;
    }

  private:
    std::size_t slot(std::size_t i, int a, int y) const {
        if (a < 1 || a > k_ || (y != 0 && y != 1))
            throw std::invalid_argument("cell index out of range");
        return (i * static_cast<std::size_t>(k_) +
                static_cast<std::size_t>(a - 1)) *
                   2 +
               static_cast<std::size_t>(y);
    }

    int d_;
    int k_;
    std::vector<std::vector<double>> points_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

}  // namespace testsupport
