#include "fairpost/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fairpost/kernels.hpp"

namespace fairpost {

namespace {
constexpr double kProbFloor = 1e-12;
}

void Marginals::validate() const {
    if (k_groups < 2) throw ValidationError("marginals need >= 2 groups");
    if (p_cell.size() != static_cast<std::size_t>(2 * k_groups))
        throw ValidationError("marginals cell count mismatch");
    double sum = 0.0;
    for (double p : p_cell) {
        if (!(p > 0.0))
            throw DataError(
                "every (y,a) cell needs positive probability; got a zero "
                "cell");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-8)
        throw DataError("cell probabilities must sum to 1");
}

Marginals empirical_marginals(const Dataset& data) {
    Marginals m;
    m.k_groups = data.k_groups();
    m.p_cell.resize(static_cast<std::size_t>(2 * m.k_groups));
    for (int y = 0; y <= 1; ++y) {
        for (int a = 1; a <= m.k_groups; ++a) {
            m.p_cell[static_cast<std::size_t>(y * m.k_groups + a - 1)] =
                static_cast<double>(data.cell_count(y, a)) /
                static_cast<double>(data.n());
        }
    }
    m.validate();
    return m;
}

std::vector<double> LogitModel::cell_probs(std::span<const double> x) const {
    const int c = cells();
    const std::size_t stride = static_cast<std::size_t>(d) + 1;
    std::vector<double> scores(static_cast<std::size_t>(c));
    for (int cell = 0; cell < c; ++cell) {
        const double* row = weights.data() + cell * stride;
        scores[static_cast<std::size_t>(cell)] =
            kernels::dot(row, x.data(), static_cast<std::size_t>(d)) +
            row[static_cast<std::size_t>(d)];
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    for (double& s : scores) {
        s = std::exp(s - top);
        denom += s;
    }
    double total = 0.0;
    for (double& s : scores) {
        s = std::max(s / denom, kProbFloor);
        total += s;
    }
    for (double& s : scores) s /= total;
    return scores;
}

double logit_loss_and_gradient(const Dataset& train,
                               const std::vector<double>& weights,
                               int k_groups, double reg,
                               std::vector<double>* gradient) {
    const int d = train.d();
    const int c = 2 * k_groups;
    const std::size_t stride = static_cast<std::size_t>(d) + 1;
    if (weights.size() != static_cast<std::size_t>(c) * stride)
        throw ValidationError("weight matrix size mismatch");
    const std::size_t n = train.n();
    if (gradient != nullptr) gradient->assign(weights.size(), 0.0);

    double loss = 0.0;
    std::vector<double> scores(static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = train.x(i);
        for (int cell = 0; cell < c; ++cell) {
            const double* row = weights.data() + cell * stride;
            scores[static_cast<std::size_t>(cell)] =
                kernels::dot(row, xi.data(), static_cast<std::size_t>(d)) +
                row[static_cast<std::size_t>(d)];
        }
        const double top = *std::max_element(scores.begin(), scores.end());
        double denom = 0.0;
        for (double s : scores) denom += std::exp(s - top);
        const double lse = top + std::log(denom);
        const int target = train.y(i) * k_groups + (train.a(i) - 1);
        loss += lse - scores[static_cast<std::size_t>(target)];
        if (gradient != nullptr) {
            for (int cell = 0; cell < c; ++cell) {
                double coef =
                    std::exp(scores[static_cast<std::size_t>(cell)] - lse);
                if (cell == target) coef -= 1.0;
                double* grow = gradient->data() + cell * stride;
                kernels::axpy(coef, xi.data(), grow,
                              static_cast<std::size_t>(d));
                grow[static_cast<std::size_t>(d)] += coef;
            }
        }
    }
    loss /= static_cast<double>(n);

    double penalty = 0.0;
    for (int cell = 0; cell < c; ++cell) {
        const double* row = weights.data() + cell * stride;
        for (int j = 0; j < d; ++j) penalty += row[j] * row[j];
    }
    loss += 0.5 * reg * penalty;
    if (gradient != nullptr) {
        for (double& g : *gradient) g /= static_cast<double>(n);
        for (int cell = 0; cell < c; ++cell) {
            double* grow = gradient->data() + cell * stride;
            const double* row = weights.data() + cell * stride;
            for (int j = 0; j < d; ++j) grow[j] += reg * row[j];
        }
    }
    return loss;
}

namespace {

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

LogitModel fit_multinomial_logit(const Dataset& train,
                                 const LogitConfig& config) {
    if (train.n() == 0) throw ValidationError("empty training set");
    if (config.reg < 0.0) throw ValidationError("ridge strength must be >= 0");
    LogitModel model;
    model.d = train.d();
    model.k_groups = train.k_groups();
    model.marginals = empirical_marginals(train);
    const std::size_t stride = static_cast<std::size_t>(model.d) + 1;
    const std::size_t size = static_cast<std::size_t>(model.cells()) * stride;
    std::vector<double> w(size, 0.0), grad(size), prev_w, prev_grad;

    double loss = logit_loss_and_gradient(train, w, model.k_groups, config.reg,
                                          &grad);
    double grad_norm = inf_norm(grad);
    int iter = 0;
    std::vector<double> trial(size), trial_grad(size);
    while (grad_norm > config.tol && iter < config.max_iterations) {
        // Barzilai-Borwein step with an Armijo backtracking safeguard.
        double step = 1.0;
        if (!prev_w.empty()) {
            double sy = 0.0, yy = 0.0;
            for (std::size_t j = 0; j < size; ++j) {
                const double sj = w[j] - prev_w[j];
                const double yj = grad[j] - prev_grad[j];
                sy += sj * yj;
                yy += yj * yj;
            }
            if (sy > 0.0 && yy > 0.0) step = sy / yy;
            step = std::clamp(step, 1e-10, 1e6);
        }
        double gg = 0.0;
        for (double g : grad) gg += g * g;
        double trial_loss = std::numeric_limits<double>::infinity();
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t j = 0; j < size; ++j)
                trial[j] = w[j] - step * grad[j];
            trial_loss = logit_loss_and_gradient(train, trial, model.k_groups,
                                                 config.reg, &trial_grad);
            if (trial_loss <= loss - 1e-4 * step * gg) break;
            step *= 0.5;
        }
        if (!(trial_loss < loss)) break;  // no descent possible at any step
        prev_w.swap(w);
        prev_grad.swap(grad);
        w.swap(trial);
        grad.swap(trial_grad);
        trial.resize(size);  // the first swap chain empties the scratch
        loss = trial_loss;
        grad_norm = inf_norm(grad);
        ++iter;
    }
    model.weights = std::move(w);
    model.iterations = iter;
    model.grad_inf_norm = grad_norm;
    model.converged = grad_norm <= config.tol;
    return model;
}

double eta_value(const LogitModel& model, Scenario scenario,
                 std::span<const double> x, int a) {
    const std::vector<double> p = model.cell_probs(x);
    const int k = model.k_groups;
    if (scenario == Scenario::Aware) {
        if (a < 1 || a > k) throw ValidationError("group index out of range");
        const double p1 = p[static_cast<std::size_t>(k + a - 1)];
        const double p0 = p[static_cast<std::size_t>(a - 1)];
        return p1 / (p0 + p1);
    }
    double s = 0.0;
    for (int g = 1; g <= k; ++g) s += p[static_cast<std::size_t>(k + g - 1)];
    return s;
}

double rho_given_label(const LogitModel& model, std::span<const double> x,
                       int a, int y) {
    const int k = model.k_groups;
    if (a < 1 || a > k || (y != 0 && y != 1))
        throw ValidationError("cell index out of range");
    const std::vector<double> p = model.cell_probs(x);
    double denom = 0.0;
    for (int g = 1; g <= k; ++g)
        denom += p[static_cast<std::size_t>(y * k + g - 1)];
    return p[static_cast<std::size_t>(y * k + a - 1)] / denom;
}

double rho_marginal(const LogitModel& model, std::span<const double> x,
                    int a) {
    const int k = model.k_groups;
    if (a < 1 || a > k) throw ValidationError("group index out of range");
    const std::vector<double> p = model.cell_probs(x);
    return p[static_cast<std::size_t>(a - 1)] +
           p[static_cast<std::size_t>(k + a - 1)];
}

double phi_binary_aware(Notion notion, int a, double eta_aware,
                        const Marginals& m) {
    if (m.k_groups != 2)
        throw ValidationError("the K=2 phi forms require exactly 2 groups");
    if (a != 1 && a != 2) throw ValidationError("group index out of range");
    const double sign = static_cast<double>(3 - 2 * a);
    switch (notion) {
        case Notion::DemographicParity:
            return sign / m.group(a);
        case Notion::EqualOpportunity:
            return sign * eta_aware / m.cell(1, a);
        case Notion::OverallAccuracyEquality:
            return sign * (m.group(a) * eta_aware - m.cell(1, a)) /
                   (m.cell(1, a) * m.cell(0, a));
        case Notion::PredictiveEquality:
            return sign * (1.0 - eta_aware) / m.cell(0, a);
        case Notion::EqualizedOdds:
            break;
    }
    throw ValidationError("equalized odds has no single-component phi");
}

double phi_binary_blind(Notion notion, double eta_blind, double rho1_given_y1,
                        double rho1_given_y0, double rho1_marginal,
                        const Marginals& m) {
    if (m.k_groups != 2)
        throw ValidationError("the K=2 phi forms require exactly 2 groups");
    const double p_y = m.positive();
    switch (notion) {
        case Notion::DemographicParity:
            return (rho1_marginal - m.group(1)) / (m.group(1) * m.group(2));
        case Notion::EqualOpportunity:
            return (p_y * rho1_given_y1 - m.cell(1, 1)) /
                   (m.cell(1, 1) * m.cell(1, 2)) * eta_blind;
        case Notion::OverallAccuracyEquality: {
            const double pos = rho1_given_y1 / m.cell(1, 1) -
                               (1.0 - rho1_given_y1) / m.cell(1, 2);
            const double neg = rho1_given_y0 / m.cell(0, 1) -
                               (1.0 - rho1_given_y0) / m.cell(0, 2);
            return pos * eta_blind - neg * (1.0 - eta_blind);
        }
        case Notion::PredictiveEquality:
            return ((1.0 - p_y) * rho1_given_y0 - m.cell(0, 1)) /
                   (m.cell(0, 1) * m.cell(0, 2)) * (1.0 - eta_blind);
        case Notion::EqualizedOdds:
            break;
    }
    throw ValidationError("equalized odds has no single-component phi");
}

std::vector<double> phi_multi_aware(Notion notion, int k_groups, int a,
                                    double eta_aware, const Marginals& m) {
    if (a < 1 || a > k_groups)
        throw ValidationError("group index out of range");
    const double p_y = m.positive();
    std::vector<double> out;
    auto indicator = [a](int k) { return a == k ? 1.0 : 0.0; };
    switch (notion) {
        case Notion::DemographicParity:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back(indicator(k) / m.group(k) - 1.0);
            return out;
        case Notion::EqualOpportunity:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back((indicator(k) / m.cell(1, k) - 1.0 / p_y) *
                              eta_aware);
            return out;
        case Notion::PredictiveEquality:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back(
                    (indicator(k) / m.cell(0, k) - 1.0 / (1.0 - p_y)) *
                    (1.0 - eta_aware));
            return out;
        case Notion::OverallAccuracyEquality:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back(
                    (indicator(k) / m.cell(1, k) - 1.0 / p_y) * eta_aware -
                    (indicator(k) / m.cell(0, k) - 1.0 / (1.0 - p_y)) *
                        (1.0 - eta_aware));
            return out;
        case Notion::EqualizedOdds:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back((indicator(k) / m.cell(1, k) - 1.0 / p_y) *
                              eta_aware);
            for (int k = 1; k <= k_groups; ++k)
                out.push_back(
                    (1.0 / (1.0 - p_y) - indicator(k) / m.cell(0, k)) *
                    (1.0 - eta_aware));
            return out;
    }
    throw ValidationError("unknown notion");
}

std::vector<double> phi_multi_blind(Notion notion, int k_groups,
                                    double eta_blind,
                                    const std::vector<double>& rho_given_y1,
                                    const std::vector<double>& rho_given_y0,
                                    const std::vector<double>& rho_marginal,
                                    const Marginals& m) {
    const double p_y = m.positive();
    std::vector<double> out;
    auto rho1 = [&](int k) { return rho_given_y1[static_cast<std::size_t>(k - 1)]; };
    auto rho0 = [&](int k) { return rho_given_y0[static_cast<std::size_t>(k - 1)]; };
    auto rhom = [&](int k) { return rho_marginal[static_cast<std::size_t>(k - 1)]; };
    switch (notion) {
        case Notion::DemographicParity:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back(rhom(k) / m.group(k) - 1.0);
            return out;
        case Notion::EqualOpportunity:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back((rho1(k) / m.cell(1, k) - 1.0 / p_y) * eta_blind);
            return out;
        case Notion::PredictiveEquality:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back((rho0(k) / m.cell(0, k) - 1.0 / (1.0 - p_y)) *
                              (1.0 - eta_blind));
            return out;
        case Notion::OverallAccuracyEquality:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back(
                    (rho1(k) / m.cell(1, k) - 1.0 / p_y) * eta_blind -
                    (rho0(k) / m.cell(0, k) - 1.0 / (1.0 - p_y)) *
                        (1.0 - eta_blind));
            return out;
        case Notion::EqualizedOdds:
            for (int k = 1; k <= k_groups; ++k)
                out.push_back((rho1(k) / m.cell(1, k) - 1.0 / p_y) * eta_blind);
            for (int k = 1; k <= k_groups; ++k)
                out.push_back((1.0 / (1.0 - p_y) - rho0(k) / m.cell(0, k)) *
                              (1.0 - eta_blind));
            return out;
    }
    throw ValidationError("unknown notion");
}

EtaFn make_eta(std::shared_ptr<const LogitModel> model, Scenario scenario) {
    return [model, scenario](std::span<const double> x, int a) {
        return eta_value(*model, scenario, x, a);
    };
}

PhiFn make_phi(std::shared_ptr<const LogitModel> model, Notion notion,
               Scenario scenario) {
    if (scenario == Scenario::Aware) {
        return [model, notion](std::span<const double> x, int a) {
            const double eta = eta_value(*model, Scenario::Aware, x, a);
            return phi_binary_aware(notion, a, eta, model->marginals);
        };
    }
    return [model, notion](std::span<const double> x, int a) {
        (void)a;  // blind weights depend on the features only
        const double eta = eta_value(*model, Scenario::Blind, x, 1);
        const double r11 = rho_given_label(*model, x, 1, 1);
        const double r10 = rho_given_label(*model, x, 1, 0);
        const double r1 = rho_marginal(*model, x, 1);
        return phi_binary_blind(notion, eta, r11, r10, r1, model->marginals);
    };
}

PhiVecFn make_phi_vec(std::shared_ptr<const LogitModel> model, Notion notion,
                      Scenario scenario) {
    const int k = model->k_groups;
    if (scenario == Scenario::Aware) {
        return [model, notion, k](std::span<const double> x, int a) {
            const double eta = eta_value(*model, Scenario::Aware, x, a);
            return phi_multi_aware(notion, k, a, eta, model->marginals);
        };
    }
    return [model, notion, k](std::span<const double> x, int a) {
        (void)a;
        const double eta = eta_value(*model, Scenario::Blind, x, 1);
        std::vector<double> r1(static_cast<std::size_t>(k));
        std::vector<double> r0(static_cast<std::size_t>(k));
        std::vector<double> rm(static_cast<std::size_t>(k));
        for (int g = 1; g <= k; ++g) {
            r1[static_cast<std::size_t>(g - 1)] =
                rho_given_label(*model, x, g, 1);
            r0[static_cast<std::size_t>(g - 1)] =
                rho_given_label(*model, x, g, 0);
            rm[static_cast<std::size_t>(g - 1)] = rho_marginal(*model, x, g);
        }
        return phi_multi_blind(notion, k, eta, r1, r0, rm, model->marginals);
    };
}

namespace {

// Multi-indices over d variables with total degree <= degree, constant
// first, then ordered by total degree.
std::vector<std::vector<int>> monomial_exponents(int d, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(d), 0);
    std::function<void(int, int, int)> rec = [&](int pos, int used,
                                                 int target) {
        if (pos == d) {
            if (used == target) out.push_back(current);
            return;
        }
        for (int e = 0; e + used <= target; ++e) {
            current[static_cast<std::size_t>(pos)] = e;
            rec(pos + 1, used + e, target);
        }
        current[static_cast<std::size_t>(pos)] = 0;
    };
    for (int total = 0; total <= degree; ++total) rec(0, 0, total);
    return out;
}

// Solves (M + ridge*I) beta = rhs in place by Gaussian elimination with
// partial pivoting; M is small (monomial count squared).
std::vector<double> solve_normal_equations(std::vector<double> M,
                                           std::vector<double> rhs,
                                           std::size_t p, double ridge) {
    for (std::size_t i = 0; i < p; ++i) M[i * p + i] += ridge;
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r) {
            if (std::abs(M[r * p + col]) > std::abs(M[pivot * p + col]))
                pivot = r;
        }
        if (M[pivot * p + col] == 0.0)
            throw DataError("local polynomial design matrix is singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < p; ++c)
                std::swap(M[pivot * p + c], M[col * p + c]);
            std::swap(rhs[pivot], rhs[col]);
        }
        const double diag = M[col * p + col];
        for (std::size_t r = col + 1; r < p; ++r) {
            const double factor = M[r * p + col] / diag;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < p; ++c)
                M[r * p + c] -= factor * M[col * p + c];
            rhs[r] -= factor * rhs[col];
        }
    }
    std::vector<double> beta(p, 0.0);
    for (std::size_t ri = p; ri-- > 0;) {
        double acc = rhs[ri];
        for (std::size_t c = ri + 1; c < p; ++c)
            acc -= M[ri * p + c] * beta[c];
        beta[ri] = acc / M[ri * p + ri];
    }
    return beta;
}

}  // namespace

double fit_local_polynomial(const Dataset& train, LocalPolyTarget target,
                            const LocalPolyConfig& config,
                            std::span<const double> query) {
    if (!(config.bandwidth > 0.0))
        throw ValidationError("bandwidth must be > 0");
    if (config.degree < 0 || config.degree > 2)
        throw ValidationError("degree must be 0, 1, or 2");
    if (static_cast<int>(query.size()) != train.d())
        throw ValidationError("query dimension mismatch");

    const int d = train.d();
    const auto exponents = monomial_exponents(d, config.degree);
    const std::size_t p = exponents.size();
    std::vector<double> M(p * p, 0.0), rhs(p, 0.0), v(p);
    std::size_t active = 0;
    for (std::size_t i = 0; i < train.n(); ++i) {
        double t;
        if (target == LocalPolyTarget::Label) {
            t = static_cast<double>(train.y(i));
        } else {
            if (train.y(i) != 1) continue;
            t = train.a(i) == 1 ? 1.0 : 0.0;
        }
        const auto xi = train.x(i);
        double norm2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double u = (xi[static_cast<std::size_t>(j)] -
                              query[static_cast<std::size_t>(j)]) /
                             config.bandwidth;
            norm2 += u * u;
        }
        const double r = std::sqrt(norm2);
        const double w = std::clamp(2.0 * (1.0 - r), 0.0, 1.0);
        if (w == 0.0) continue;
        ++active;
        for (std::size_t m = 0; m < p; ++m) {
            double term = 1.0;
            for (int j = 0; j < d; ++j) {
                const int e = exponents[m][static_cast<std::size_t>(j)];
                if (e == 0) continue;
                const double u = (xi[static_cast<std::size_t>(j)] -
                                  query[static_cast<std::size_t>(j)]) /
                                 config.bandwidth;
                for (int rep = 0; rep < e; ++rep) term *= u;
            }
            v[m] = term;
        }
        for (std::size_t r1 = 0; r1 < p; ++r1) {
            rhs[r1] += w * v[r1] * t;
            for (std::size_t c = 0; c < p; ++c) M[r1 * p + c] += w * v[r1] * v[c];
        }
    }
    if (active == 0)
        throw DataError(
            "no sample has positive kernel weight at the query point");
    const std::vector<double> beta =
        solve_normal_equations(std::move(M), std::move(rhs), p, config.ridge);
    return std::clamp(beta[0], 0.0, 1.0);
}

}  // namespace fairpost
