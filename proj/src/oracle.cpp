#include "fairpost/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fairpost/kernels.hpp"
#include "fairpost/rng.hpp"
#include "fairpost/serialize.hpp"
#include "fairpost/unfairness.hpp"

namespace fairpost::oracle {

std::string to_string(Noise n) {
    return n == Noise::Gaussian ? "gaussian" : "student_t";
}

Noise noise_from_string(const std::string& s) {
    if (s == "gaussian") return Noise::Gaussian;
    if (s == "student_t") return Noise::StudentT;
    throw ValidationError("unknown noise kind: " + s);
}

Marginals OracleModel::marginals() const {
    Marginals m;
    m.k_groups = 2;
    m.p_cell.assign(cell_probs.begin(), cell_probs.end());
    m.validate();
    return m;
}

void OracleModel::validate() const {
    if (d < 1) throw ValidationError("oracle model needs d >= 1");
    double sum = 0.0;
    for (double p : cell_probs) {
        if (!(p > 0.0))
            throw ValidationError("oracle cell probabilities must be > 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-8)
        throw ValidationError("oracle cell probabilities must sum to 1");
    for (const auto& mu : means) {
        if (static_cast<int>(mu.size()) != d)
            throw ValidationError("oracle mean dimension mismatch");
        for (double v : mu) {
            if (!std::isfinite(v))
                throw ValidationError("oracle means must be finite");
        }
    }
    if (noise == Noise::StudentT && t_dof < 1)
        throw ValidationError("student-t noise needs dof >= 1");
}

OracleModel make_fixture(int d, double separation, Noise noise, int t_dof,
                         std::uint64_t seed) {
    OracleModel model;
    model.d = d;
    model.noise = noise;
    model.t_dof = t_dof;
    model.seed = seed;
    model.cell_probs = {0.21, 0.18, 0.49, 0.12};
    for (int c = 0; c < 4; ++c) {
        rng::Stream stream(rng::derive(seed, static_cast<std::uint64_t>(c)));
        const double lo = c == 2 ? separation : 0.0;  // (y=1,a=1) is shifted
        auto& mu = model.means[static_cast<std::size_t>(c)];
        mu.resize(static_cast<std::size_t>(d));
        for (double& v : mu) v = stream.next_uniform(lo, lo + 1.0);
    }
    model.validate();
    return model;
}

OracleModel load_fixture(const std::string& path) {
    return serialize::oracle_from_json(serialize::read_json_file(path));
}

void save_fixture(const OracleModel& model, const std::string& path) {
    serialize::write_json_file(serialize::oracle_to_json(model), path);
}

Dataset sample(const OracleModel& model, std::size_t n, std::uint64_t seed) {
    model.validate();
    Dataset data(model.d, 2);
    data.reserve(n);
    std::vector<double> x(static_cast<std::size_t>(model.d));
    for (std::size_t i = 0; i < n; ++i) {
        rng::Stream stream(rng::derive(seed, i));
        const int cell = stream.next_categorical(model.cell_probs.data(), 4);
        const int y = cell / 2;
        const int a = cell % 2 + 1;
        const auto& mu = model.means[static_cast<std::size_t>(cell)];
        for (int jdx = 0; jdx < model.d; ++jdx) {
            const double noise = model.noise == Noise::Gaussian
                                     ? stream.next_normal()
                                     : stream.next_student_t(model.t_dof);
            x[static_cast<std::size_t>(jdx)] =
                mu[static_cast<std::size_t>(jdx)] + noise;
        }
        data.add(x, a, y);
    }
    return data;
}

namespace {

double log_density(const OracleModel& model, double u) {
    if (model.noise == Noise::Gaussian)
        return -0.5 * u * u - 0.5 * std::log(2.0 * std::numbers::pi);
    const double v = static_cast<double>(model.t_dof);
    return std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
           0.5 * std::log(v * std::numbers::pi) -
           0.5 * (v + 1.0) * std::log1p(u * u / v);
}

double logsumexp2(double a, double b) {
    const double top = std::max(a, b);
    return top + std::log(std::exp(a - top) + std::exp(b - top));
}

double logsumexp4(const std::array<double, 4>& w) {
    const double top = *std::max_element(w.begin(), w.end());
    double s = 0.0;
    for (double v : w) s += std::exp(v - top);
    return top + std::log(s);
}

}  // namespace

std::array<double, 4> log_cell_weights(const OracleModel& model,
                                       std::span<const double> x) {
    std::array<double, 4> w{};
    for (int c = 0; c < 4; ++c) {
        double lw = std::log(model.cell_probs[static_cast<std::size_t>(c)]);
        const auto& mu = model.means[static_cast<std::size_t>(c)];
        for (int j = 0; j < model.d; ++j)
            lw += log_density(model, x[static_cast<std::size_t>(j)] -
                                         mu[static_cast<std::size_t>(j)]);
        w[static_cast<std::size_t>(c)] = lw;
    }
    return w;
}

double true_eta_aware(const OracleModel& model, std::span<const double> x,
                      int a) {
    if (a != 1 && a != 2) throw ValidationError("group index out of range");
    const auto w = log_cell_weights(model, x);
    const double l0 = w[static_cast<std::size_t>(a - 1)];
    const double l1 = w[static_cast<std::size_t>(2 + a - 1)];
    // 1 / (1 + exp(l0 - l1)), computed without overflow.
    const double diff = l0 - l1;
    if (diff > 0.0) {
        const double e = std::exp(-diff);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(diff));
}

double true_eta_blind(const OracleModel& model, std::span<const double> x) {
    const auto w = log_cell_weights(model, x);
    return std::exp(logsumexp2(w[2], w[3]) - logsumexp4(w));
}

double true_rho_given_label(const OracleModel& model,
                            std::span<const double> x, int a, int y) {
    if ((a != 1 && a != 2) || (y != 0 && y != 1))
        throw ValidationError("cell index out of range");
    const auto w = log_cell_weights(model, x);
    const double num = w[static_cast<std::size_t>(2 * y + a - 1)];
    const double den = logsumexp2(w[static_cast<std::size_t>(2 * y)],
                                  w[static_cast<std::size_t>(2 * y + 1)]);
    return std::exp(num - den);
}

double true_rho_marginal(const OracleModel& model, std::span<const double> x,
                         int a) {
    if (a != 1 && a != 2) throw ValidationError("group index out of range");
    const auto w = log_cell_weights(model, x);
    return std::exp(logsumexp2(w[static_cast<std::size_t>(a - 1)],
                               w[static_cast<std::size_t>(2 + a - 1)]) -
                    logsumexp4(w));
}

EtaFn true_eta(const OracleModel& model, Scenario scenario) {
    if (scenario == Scenario::Aware) {
        return [model](std::span<const double> x, int a) {
            return true_eta_aware(model, x, a);
        };
    }
    return [model](std::span<const double> x, int a) {
        (void)a;
        return true_eta_blind(model, x);
    };
}

PhiFn true_phi(const OracleModel& model, Notion notion, Scenario scenario) {
    const Marginals m = model.marginals();
    if (scenario == Scenario::Aware) {
        return [model, notion, m](std::span<const double> x, int a) {
            return phi_binary_aware(notion, a, true_eta_aware(model, x, a), m);
        };
    }
    return [model, notion, m](std::span<const double> x, int a) {
        (void)a;
        return phi_binary_blind(notion, true_eta_blind(model, x),
                                true_rho_given_label(model, x, 1, 1),
                                true_rho_given_label(model, x, 1, 0),
                                true_rho_marginal(model, x, 1), m);
    };
}

PhiVecFn true_phi_vec(const OracleModel& model, Notion notion,
                      Scenario scenario) {
    const Marginals m = model.marginals();
    if (scenario == Scenario::Aware) {
        return [model, notion, m](std::span<const double> x, int a) {
            return phi_multi_aware(notion, 2, a, true_eta_aware(model, x, a),
                                   m);
        };
    }
    return [model, notion, m](std::span<const double> x, int a) {
        (void)a;
        std::vector<double> r1(2), r0(2), rm(2);
        for (int g = 1; g <= 2; ++g) {
            r1[static_cast<std::size_t>(g - 1)] =
                true_rho_given_label(model, x, g, 1);
            r0[static_cast<std::size_t>(g - 1)] =
                true_rho_given_label(model, x, g, 0);
            rm[static_cast<std::size_t>(g - 1)] =
                true_rho_marginal(model, x, g);
        }
        return phi_multi_blind(notion, 2, true_eta_blind(model, x), r1, r0,
                               rm, m);
    };
}

HingeSolution min_hinge_plus_abs(std::span<const double> margin,
                                 std::span<const double> phi,
                                 std::span<const double> weight,
                                 double alpha) {
    const std::size_t n = margin.size();
    if (n == 0) throw ValidationError("empty hinge objective");
    if (phi.size() != n || (!weight.empty() && weight.size() != n))
        throw ValidationError("hinge objective size mismatch");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be > 0");

    struct Kink {
        double r;
        double wm;
        double wphi;
    };
    std::vector<Kink> kinks;
    kinks.reserve(n);
    long double constant = 0.0L;  // terms with phi == 0 never switch
    long double active_m = 0.0L;  // sum of w*m over currently active terms
    long double active_p = 0.0L;  // sum of w*phi over currently active terms
    const double uniform = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weight.empty() ? uniform : weight[i];
        if (phi[i] == 0.0) {
            constant += static_cast<long double>(w) * std::max(margin[i], 0.0);
            continue;
        }
        kinks.push_back({margin[i] / phi[i], w * margin[i], w * phi[i]});
        if (phi[i] > 0.0) {  // active left of every kink
            active_m += static_cast<long double>(w) * margin[i];
            active_p += static_cast<long double>(w) * phi[i];
        }
    }

    std::sort(kinks.begin(), kinks.end(),
              [](const Kink& a, const Kink& b) { return a.r < b.r; });
    std::vector<double> candidates;
    candidates.reserve(kinks.size() + 1);
    candidates.push_back(0.0);
    for (const Kink& k : kinks) candidates.push_back(k.r);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    const long double tie_tol =
        1e-12L * (1.0L + std::abs(constant + active_m));
    long double best_j = std::numeric_limits<long double>::infinity();
    double best_lambda = 0.0;
    std::size_t next = 0;
    for (double v : candidates) {
        // Activate/deactivate every kink strictly left of v; terms whose kink
        // sits exactly at v contribute zero there under either state.
        while (next < kinks.size() && kinks[next].r < v) {
            if (kinks[next].wphi > 0.0) {
                active_m -= kinks[next].wm;
                active_p -= kinks[next].wphi;
            } else {
                active_m += kinks[next].wm;
                active_p += kinks[next].wphi;
            }
            ++next;
        }
        const long double j = constant + active_m -
                              static_cast<long double>(v) * active_p +
                              static_cast<long double>(alpha) * std::abs(v);
        if (j < best_j - tie_tol ||
            (j < best_j + tie_tol && std::abs(v) < std::abs(best_lambda))) {
            best_j = j;
            best_lambda = v;
        }
    }

    // Report the objective recomputed directly at the chosen point.
    long double exact = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weight.empty() ? uniform : weight[i];
        exact += static_cast<long double>(w) *
                 std::max(margin[i] - best_lambda * phi[i], 0.0);
    }
    exact += static_cast<long double>(alpha) * std::abs(best_lambda);
    return {best_lambda, static_cast<double>(exact)};
}

namespace {

struct DrawArrays {
    Dataset data;
    std::vector<double> margin;
    std::vector<double> phi;
    std::vector<double> eta_aware;
};

DrawArrays draw_arrays(const OracleModel& model, Notion notion,
                       Scenario scenario, std::size_t mc_draws,
                       std::uint64_t seed) {
    DrawArrays out{sample(model, mc_draws, seed), {}, {}, {}};
    const EtaFn eta = true_eta(model, scenario);
    const PhiFn phi = true_phi(model, notion, scenario);
    out.margin.resize(mc_draws);
    out.phi.resize(mc_draws);
    out.eta_aware.resize(mc_draws);
    for (std::size_t i = 0; i < mc_draws; ++i) {
        const auto xi = out.data.x(i);
        const int ai = out.data.a(i);
        out.margin[i] = 2.0 * eta(xi, ai) - 1.0;
        out.phi[i] = phi(xi, ai);
        out.eta_aware[i] = true_eta_aware(model, xi, ai);
    }
    return out;
}

}  // namespace

HingeSolution bayes_lambda(const OracleModel& model, Notion notion,
                           Scenario scenario, double alpha,
                           std::size_t mc_draws, std::uint64_t seed) {
    const DrawArrays arrays = draw_arrays(model, notion, scenario, mc_draws,
                                          seed);
    return min_hinge_plus_abs(arrays.margin, arrays.phi, {}, alpha);
}

VectorHingeSolution bayes_lambda_vec(const OracleModel& model, Notion notion,
                                     Scenario scenario, double alpha,
                                     std::size_t mc_draws, std::uint64_t seed,
                                     int iterations) {
    if (!(alpha > 0.0)) throw ValidationError("alpha must be > 0");
    const Dataset data = sample(model, mc_draws, seed);
    const EtaFn eta = true_eta(model, scenario);
    const PhiVecFn phi = true_phi_vec(model, notion, scenario);
    const std::size_t n = data.n();
    std::vector<double> margin(n);
    std::vector<double> comps;  // n x K row-major
    std::size_t K = 0;
    double phi_norm_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = data.x(i);
        margin[i] = 2.0 * eta(xi, data.a(i)) - 1.0;
        const std::vector<double> p = phi(xi, data.a(i));
        if (i == 0) {
            K = p.size();
            comps.resize(n * K);
        }
        double norm2 = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            comps[i * K + k] = p[k];
            norm2 += p[k] * p[k];
        }
        phi_norm_sum += std::sqrt(norm2);
    }

    auto objective = [&](const std::vector<double>& lam,
                         std::vector<double>* grad) {
        if (grad != nullptr) grad->assign(K, 0.0);
        long double total = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            const double t =
                margin[i] - kernels::dot(lam.data(), comps.data() + i * K, K);
            if (t > 0.0) {
                total += t;
                if (grad != nullptr) {
                    for (std::size_t k = 0; k < K; ++k)
                        (*grad)[k] -= comps[i * K + k];
                }
            }
        }
        double j = static_cast<double>(total) / static_cast<double>(n);
        for (std::size_t k = 0; k < K; ++k) {
            j += alpha * std::abs(lam[k]);
            if (grad != nullptr) {
                (*grad)[k] /= static_cast<double>(n);
                (*grad)[k] += alpha * (lam[k] > 0.0   ? 1.0
                                       : lam[k] < 0.0 ? -1.0
                                                      : 0.0);
            }
        }
        return j;
    };

    const double box = 1.0 / alpha;
    const double scale =
        std::max(phi_norm_sum / static_cast<double>(n), 1e-9);
    const double c = box / scale;
    std::vector<double> lam(K, 0.0), grad(K);
    VectorHingeSolution best;
    best.lambda = lam;
    best.objective = objective(lam, nullptr);
    double best_l1 = 0.0;
    for (int t = 1; t <= iterations; ++t) {
        const double j = objective(lam, &grad);
        double l1 = 0.0;
        for (double v : lam) l1 += std::abs(v);
        const double tol = 1e-12 * (1.0 + std::abs(best.objective));
        if (j < best.objective - tol ||
            (j < best.objective + tol && l1 < best_l1)) {
            best.objective = j;
            best.lambda = lam;
            best_l1 = l1;
        }
        const double step = c / std::sqrt(static_cast<double>(t));
        for (std::size_t k = 0; k < K; ++k)
            lam[k] = std::clamp(lam[k] - step * grad[k], -box, box);
    }
    return best;
}

RiskReport bayes_risk(const OracleModel& model, Notion notion,
                      Scenario scenario, double alpha, std::size_t mc_draws,
                      std::uint64_t seed) {
    const DrawArrays arrays = draw_arrays(model, notion, scenario, mc_draws,
                                          seed);
    const HingeSolution sol =
        min_hinge_plus_abs(arrays.margin, arrays.phi, {}, alpha);
    const std::size_t n = arrays.data.n();
    std::vector<std::uint8_t> preds(n);
    long double sum = 0.0L, sum_sq = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const int f = arrays.margin[i] > sol.lambda * arrays.phi[i] ? 1 : 0;
        preds[i] = static_cast<std::uint8_t>(f);
        const double r = f == 1 ? 1.0 - arrays.eta_aware[i]
                                : arrays.eta_aware[i];
        sum += r;
        sum_sq += static_cast<long double>(r) * r;
    }
    const double mean = static_cast<double>(sum) / static_cast<double>(n);
    const double var =
        std::max(0.0, static_cast<double>(sum_sq) / static_cast<double>(n) -
                          mean * mean);
    RiskReport report;
    report.risk = mean;
    report.std_error = std::sqrt(var / static_cast<double>(n));
    report.lambda = sol.lambda;
    report.unfairness =
        empirical_unfairness(notion_spec(notion, 2), preds, arrays.data);
    return report;
}

std::vector<LambdaPoint> lambda_curve(const OracleModel& model, Notion notion,
                                      Scenario scenario,
                                      std::span<const double> alphas,
                                      std::size_t mc_draws,
                                      std::uint64_t seed) {
    const DrawArrays arrays = draw_arrays(model, notion, scenario, mc_draws,
                                          seed);
    std::vector<LambdaPoint> curve;
    curve.reserve(alphas.size());
    for (double a : alphas) {
        const HingeSolution sol =
            min_hinge_plus_abs(arrays.margin, arrays.phi, {}, a);
        curve.push_back({a, sol.lambda, sol.objective});
    }
    return curve;
}

}  // namespace fairpost::oracle
