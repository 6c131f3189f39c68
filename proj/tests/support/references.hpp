#pragma once

// Independent reference implementations for the calibration searches. Same
// algorithmic contract as the library, written with direct loops and its own
// candidate enumeration so agreement is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace testsupport {

struct ReferenceScan {
    bool feasible = false;
    int s_hat = 1;
    double lambda = 0.0;       // signed final multiplier s * lambda_plus
    double value = 0.0;        // signed constraint value at the solution
    double best_value = 0.0;   // minimum signed value seen (infeasible case)
};

// Single-component scan: pick s from the sign of the plug-in constraint
// value, walk candidate thresholds 0, midpoints, breakpoints, last+1 in
// ascending order, and accept the first whose signed weighted indicator sum
// drops to the target.
inline ReferenceScan reference_scan(const std::vector<double>& margin,
                                    const std::vector<double>& phi,
                                    const std::vector<double>& weight,
                                    double target) {
    const std::size_t n = margin.size();
    // Oriented value: weights and slopes both carry the chosen sign, so the
    // scan starts at |plug-in| and walks downward toward the target.
    auto value_at = [&](double lam, int s) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (margin[i] > lam * (s * phi[i])) v += s * weight[i];
        return v;
    };

    double plug_in = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (margin[i] > 0.0) plug_in += weight[i];
    const int s = plug_in >= 0.0 ? 1 : -1;

    std::vector<double> bps;
    for (std::size_t i = 0; i < n; ++i) {
        const double slope = s * phi[i];
        if (slope == 0.0) continue;
        const double r = margin[i] / slope;
        if (std::isfinite(r) && r > 0.0) bps.push_back(r);
    }
    std::sort(bps.begin(), bps.end());
    std::vector<double> dedup;
    for (double r : bps)
        if (dedup.empty() || r - dedup.back() > 1e-12) dedup.push_back(r);

    // Piece interiors only: a threshold exactly at a kink is not float
    // reproducible (the boundary indicator depends on product rounding) and
    // its exact value matches an adjacent piece, so midpoints suffice.
    std::vector<double> candidates;
    candidates.push_back(0.0);
    double prev = 0.0;
    for (double r : dedup) {
        const double mid = 0.5 * (prev + r);
        if (mid > prev && mid < r) candidates.push_back(mid);
        prev = r;
    }
    if (!dedup.empty()) candidates.push_back(dedup.back() + 1.0);

    ReferenceScan out;
    out.s_hat = s;
    out.best_value = std::numeric_limits<double>::infinity();
    for (double lam : candidates) {
        const double v = value_at(lam, s);
        if (v < out.best_value) out.best_value = v;
        if (v <= target) {
            out.feasible = true;
            out.lambda = s * lam;
            out.value = v;
            return out;
        }
    }
    return out;
}

struct GridBest {
    bool feasible = false;
    double error = 0.0;
    double l1 = 0.0;
    std::vector<double> lambda;
};

// Exhaustive cross-product grid search over per-coordinate candidate sets
// for the multi-component problem. margin[i]; phi[i*k + c]; weight[c][i]
// signed per-sample constraint weights; label[i] in {0,1}. Feasible means
// every component's |weighted indicator sum| <= target; ties on error break
// by l1 norm, then lexicographically.
inline GridBest grid_reference(const std::vector<double>& margin,
                               const std::vector<double>& phi,
                               const std::vector<std::vector<double>>& weight,
                               const std::vector<std::uint8_t>& label,
                               double target) {
    const std::size_t n = margin.size();
    const std::size_t k = weight.size();

    std::vector<std::vector<double>> axis(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> rs;
        for (std::size_t i = 0; i < n; ++i) {
            const double slope = phi[i * k + c];
            if (slope == 0.0) continue;
            const double r = margin[i] / slope;
            if (std::isfinite(r)) rs.push_back(r);
        }
        std::sort(rs.begin(), rs.end());
        rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
        std::vector<double> cand;
        cand.push_back(0.0);
        for (std::size_t j = 0; j < rs.size(); ++j) {
            cand.push_back(rs[j]);
            if (j + 1 < rs.size()) cand.push_back(0.5 * (rs[j] + rs[j + 1]));
        }
        if (!rs.empty()) {
            cand.push_back(rs.front() - 1.0);
            cand.push_back(rs.back() + 1.0);
        }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        axis[c] = std::move(cand);
    }

    auto evaluate = [&](const std::vector<double>& lam, GridBest& best) {
        double worst = 0.0;
        std::vector<double> comp(k, 0.0);
        double wrong = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double threshold = 0.0;
            for (std::size_t c = 0; c < k; ++c)
                threshold += lam[c] * phi[i * k + c];
            const bool pred = margin[i] > threshold;
            if (pred)
                for (std::size_t c = 0; c < k; ++c) comp[c] += weight[c][i];
            if (static_cast<int>(pred) != static_cast<int>(label[i]))
                wrong += 1.0;
        }
        for (std::size_t c = 0; c < k; ++c)
            worst = std::max(worst, std::abs(comp[c]));
        if (worst > target) return;
        const double error = wrong / static_cast<double>(n);
        double l1 = 0.0;
        for (double v : lam) l1 += std::abs(v);
        if (!best.feasible || error < best.error ||
            (error == best.error &&
             (l1 < best.l1 ||
              (l1 == best.l1 &&
               std::lexicographical_compare(lam.begin(), lam.end(),
                                            best.lambda.begin(),
                                            best.lambda.end()))))) {
            best.feasible = true;
            best.error = error;
            best.l1 = l1;
            best.lambda = lam;
        }
    };

    GridBest best;
    std::vector<std::size_t> idx(k, 0);
    std::vector<double> lam(k, 0.0);
    while (true) {
        for (std::size_t c = 0; c < k; ++c) lam[c] = axis[c][idx[c]];
        evaluate(lam, best);
        std::size_t c = 0;
        while (c < k && ++idx[c] == axis[c].size()) {
            idx[c] = 0;
            ++c;
        }
        if (c == k) break;
    }
    return best;
}

}  // namespace testsupport
