#include "fairpost/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fairpost/kernels.hpp"
#include "fairpost/rng.hpp"

namespace fairpost {

namespace {

constexpr double kBreakpointTol = 1e-12;

void check_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw DataError(std::string(what) + " produced a non-finite value");
}

// Sorted, deduplicated breakpoints (values closer than kBreakpointTol are
// collapsed to the first representative).
std::vector<double> dedup_sorted(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) {
        if (out.empty() || v - out.back() > kBreakpointTol) out.push_back(v);
    }
    return out;
}

// Candidate thresholds covering every constancy piece of a piecewise
// constant function of lambda on [0, inf): 0, the midpoint of each gap
// (including between 0 and the first breakpoint), and a point past the last
// breakpoint. Breakpoints themselves are never evaluated: exactly at a kink
// the boundary sample's indicator depends on how the product lambda * phi
// rounds, so a threshold there would not reproduce at prediction time. The
// kink's exact value always equals an adjacent piece's value anyway (the
// boundary sample is strictly off there), so midpoints lose nothing.
std::vector<double> scan_candidates(const std::vector<double>& breakpoints) {
    std::vector<double> cands;
    cands.reserve(breakpoints.size() + 2);
    cands.push_back(0.0);
    double prev = 0.0;
    for (double r : breakpoints) {
        const double mid = 0.5 * (prev + r);
        if (mid > prev && mid < r) cands.push_back(mid);
        prev = r;
    }
    if (!breakpoints.empty()) cands.push_back(breakpoints.back() + 1.0);
    return cands;
}

struct BinaryProblem {
    std::vector<double> margin;       // 2 eta - 1
    std::vector<double> phi;
    std::vector<double> cell_weight;  // kappa_j / n_j of the matching event
};

BinaryProblem evaluate_scores(const Dataset& calib, const EtaFn& eta,
                              const PhiFn& phi, const Component& comp) {
    BinaryProblem p;
    const std::size_t n = calib.n();
    p.margin.resize(n);
    p.phi.resize(n);
    p.cell_weight.assign(n, 0.0);
    std::vector<double> counts(comp.size());
    for (std::size_t j = 0; j < comp.size(); ++j) {
        const std::size_t c = event_count(comp[j].event, calib);
        if (c == 0)
            throw DataError("calibration set has no samples in event " +
                            comp[j].event.name());
        counts[j] = static_cast<double>(c);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double e = eta(calib.x(i), calib.a(i));
        const double f = phi(calib.x(i), calib.a(i));
        check_finite(e, "eta");
        check_finite(f, "phi");
        p.margin[i] = 2.0 * e - 1.0;
        p.phi[i] = f;
        for (std::size_t j = 0; j < comp.size(); ++j) {
            if (comp[j].event.matches(calib.a(i), calib.y(i)))
                p.cell_weight[i] += comp[j].kappa / counts[j];
        }
    }
    return p;
}

double error_at(const Dataset& calib, const std::vector<double>& margin,
                const std::vector<double>& threshold_values) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < calib.n(); ++i) {
        const int pred = margin[i] > threshold_values[i] ? 1 : 0;
        if (pred != calib.y(i)) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(calib.n());
}

struct ScanResult {
    int s_hat = 1;
    double lambda_plus = 0.0;
    double constraint_value = 0.0;
    double epsilon = 0.0;
    std::size_t candidates = 0;
    bool feasible = false;
    double best_value = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
};

// The sign-then-scan core shared by fit_binary and the single-component
// delegation from fit_multiclass.
ScanResult run_scan(const BinaryProblem& p, double alpha, double epsilon) {
    const std::size_t n = p.margin.size();
    ScanResult res;
    res.epsilon = epsilon;

    const double plug_in = kernels::indicator_weighted_sum(
        p.margin.data(), p.phi.data(), p.cell_weight.data(), 0.0, n);
    // indicator_weighted_sum at lambda=0 tests margin > 0, which is the
    // plug-in rule 2 eta > 1.
    res.s_hat = plug_in >= 0.0 ? 1 : -1;
    const double s = static_cast<double>(res.s_hat);

    std::vector<double> slope(n), signed_weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        slope[i] = s * p.phi[i];
        signed_weight[i] = s * p.cell_weight[i];
    }
    std::vector<double> raw;
    raw.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (slope[i] != 0.0) {
            const double r = p.margin[i] / slope[i];
            if (r > 0.0 && std::isfinite(r)) raw.push_back(r);
        }
    }
    const std::vector<double> breakpoints = dedup_sorted(std::move(raw));
    const std::vector<double> candidates = scan_candidates(breakpoints);
    res.candidates = candidates.size();

    const double target = alpha - epsilon;
    for (double c : candidates) {
        const double value = kernels::indicator_weighted_sum(
            p.margin.data(), slope.data(), signed_weight.data(), c, n);
        if (value < res.best_value) {
            res.best_value = value;
            res.best_lambda = c;
        }
        if (value <= target) {
            res.lambda_plus = c;
            res.constraint_value = value;
            res.feasible = true;
            break;
        }
    }
    return res;
}

BinaryFitResult assemble_binary(const Dataset& calib, const EtaFn& eta,
                                const PhiFn& phi, const FairnessSpec& spec,
                                const BinaryProblem& p, const ScanResult& scan,
                                double epsilon) {
    if (!scan.feasible) {
        std::ostringstream msg;
        msg << "no threshold shift satisfies the constraint: best signed "
               "value "
            << scan.best_value << " (at lambda_plus=" << scan.best_lambda
            << ") > alpha - epsilon = " << spec.alpha - epsilon;
        throw InfeasibleError(msg.str(), scan.best_value);
    }
    const double lambda = static_cast<double>(scan.s_hat) * scan.lambda_plus;

    BinaryFitResult out;
    out.classifier.scenario = spec.scenario;
    out.classifier.notion = spec.notion;
    out.classifier.alpha = spec.alpha;
    out.classifier.delta_post = spec.delta_post;
    out.classifier.epsilon_alpha = epsilon;
    out.classifier.s_hat = scan.s_hat;
    out.classifier.lambda = {lambda};
    out.classifier.eta = eta;
    out.classifier.phi = phi;

    out.report.s_hat = scan.s_hat;
    out.report.lambda = {lambda};
    out.report.epsilon_alpha = epsilon;
    out.report.threshold = spec.alpha - epsilon;
    out.report.constraint_value = scan.constraint_value;
    out.report.candidates_evaluated = scan.candidates;
    std::vector<double> thresholds(calib.n());
    for (std::size_t i = 0; i < calib.n(); ++i)
        thresholds[i] = lambda * p.phi[i];
    out.report.empirical_error = error_at(calib, p.margin, thresholds);
    return out;
}

}  // namespace

BinaryFitResult fit_binary(const Dataset& calib, const EtaFn& eta,
                           const PhiFn& phi, const FairnessSpec& spec) {
    spec.validate();
    if (calib.n() == 0) throw ValidationError("empty calibration set");
    const ConditionalMeanSpec mean_spec =
        notion_spec(spec.notion, calib.k_groups());
    const double epsilon =
        epsilon_alpha(mean_spec, calib, spec.delta_post, spec.epsilon);
    const BinaryProblem p =
        evaluate_scores(calib, eta, phi, mean_spec.components[0]);
    const ScanResult scan = run_scan(p, spec.alpha, epsilon);
    return assemble_binary(calib, eta, phi, spec, p, scan, epsilon);
}

namespace {

struct MultiProblem {
    std::size_t n = 0;
    std::size_t n_components = 0;
    std::vector<double> margin;   // n
    std::vector<double> phi;      // n x K~ row-major
    std::vector<double> weights;  // K~ x n row-major, kappa/n_event sums
};

MultiProblem evaluate_multi(const Dataset& calib, const EtaFn& eta,
                            const PhiVecFn& phi,
                            const ConditionalMeanSpec& spec) {
    MultiProblem p;
    p.n = calib.n();
    p.n_components = spec.components.size();
    p.margin.resize(p.n);
    p.phi.resize(p.n * p.n_components);
    p.weights.assign(p.n_components * p.n, 0.0);
    std::vector<std::vector<double>> counts(p.n_components);
    for (std::size_t k = 0; k < p.n_components; ++k) {
        const Component& comp = spec.components[k];
        counts[k].resize(comp.size());
        for (std::size_t j = 0; j < comp.size(); ++j) {
            const std::size_t c = event_count(comp[j].event, calib);
            if (c == 0)
                throw DataError("calibration set has no samples in event " +
                                comp[j].event.name());
            counts[k][j] = static_cast<double>(c);
        }
    }
    for (std::size_t i = 0; i < p.n; ++i) {
        const double e = eta(calib.x(i), calib.a(i));
        check_finite(e, "eta");
        p.margin[i] = 2.0 * e - 1.0;
        const std::vector<double> comps = phi(calib.x(i), calib.a(i));
        if (comps.size() != p.n_components)
            throw ValidationError(
                "phi returned " + std::to_string(comps.size()) +
                " components, spec has " + std::to_string(p.n_components));
        for (std::size_t k = 0; k < p.n_components; ++k) {
            check_finite(comps[k], "phi");
            p.phi[i * p.n_components + k] = comps[k];
        }
        for (std::size_t k = 0; k < p.n_components; ++k) {
            const Component& comp = spec.components[k];
            for (std::size_t j = 0; j < comp.size(); ++j) {
                if (comp[j].event.matches(calib.a(i), calib.y(i)))
                    p.weights[k * p.n + i] += comp[j].kappa / counts[k][j];
            }
        }
    }
    return p;
}

struct PointEval {
    double max_abs_signed = 0.0;
    double error = 0.0;
};

PointEval evaluate_point(const MultiProblem& p, const Dataset& calib,
                         const std::vector<double>& lambda) {
    PointEval ev;
    std::vector<double> signed_sums(p.n_components, 0.0);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
        const double* phi_i = p.phi.data() + i * p.n_components;
        const double threshold =
            kernels::dot(lambda.data(), phi_i, p.n_components);
        const bool active = p.margin[i] > threshold;
        if (static_cast<int>(active) != calib.y(i)) ++wrong;
        if (active) {
            for (std::size_t k = 0; k < p.n_components; ++k)
                signed_sums[k] += p.weights[k * p.n + i];
        }
    }
    for (double v : signed_sums)
        ev.max_abs_signed = std::max(ev.max_abs_signed, std::abs(v));
    ev.error = static_cast<double>(wrong) / static_cast<double>(p.n);
    return ev;
}

// Ordering for search decisions: feasibility first, then error, then the
// l1 norm of lambda, then lexicographic for determinism.
struct VisitKey {
    bool feasible = false;
    double error = std::numeric_limits<double>::infinity();
    double l1 = std::numeric_limits<double>::infinity();
    std::vector<double> lambda;

    bool better_than(const VisitKey& o) const {
        if (feasible != o.feasible) return feasible;
        if (error != o.error) return error < o.error;
        if (l1 != o.l1) return l1 < o.l1;
        return lambda < o.lambda;
    }
};

double l1_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

}  // namespace

BinaryFitResult fit_multiclass(const Dataset& calib, const EtaFn& eta,
                               const PhiVecFn& phi, const FairnessSpec& spec,
                               const MulticlassSearchConfig& config) {
    return fit_with_representation(
        calib, eta, phi, spec,
        notion_spec_multiclass(spec.notion, calib.k_groups()), config);
}

BinaryFitResult fit_with_representation(const Dataset& calib, const EtaFn& eta,
                                        const PhiVecFn& phi,
                                        const FairnessSpec& spec,
                                        const ConditionalMeanSpec& mean_spec,
                                        const MulticlassSearchConfig& config) {
    spec.validate();
    if (calib.n() == 0) throw ValidationError("empty calibration set");
    if (config.starts < 1 || config.sweeps < 1)
        throw ValidationError("search needs >= 1 start and >= 1 sweep");
    const std::size_t n_comp = mean_spec.components.size();
    const double epsilon =
        epsilon_alpha(mean_spec, calib, spec.delta_post, spec.epsilon);
    const double target = spec.alpha - epsilon;

    if (n_comp == 1) {
        // One component: the signed scan is exact, so run it and report the
        // same lambda the single-component entry point would return.
        PhiFn phi_scalar = [phi](std::span<const double> x, int a) {
            return phi(x, a).at(0);
        };
        const BinaryProblem p =
            evaluate_scores(calib, eta, phi_scalar, mean_spec.components[0]);
        const ScanResult scan = run_scan(p, spec.alpha, epsilon);
        BinaryFitResult out =
            assemble_binary(calib, eta, phi_scalar, spec, p, scan, epsilon);
        out.classifier.phi = nullptr;
        out.classifier.phi_vec = phi;
        out.report.delegated_single_component = true;
        return out;
    }

    const MultiProblem p = evaluate_multi(calib, eta, phi, mean_spec);

    // Scale for starts: median magnitude of the axis breakpoints.
    std::vector<double> mags;
    for (std::size_t i = 0; i < p.n; ++i) {
        for (std::size_t k = 0; k < n_comp; ++k) {
            const double slope = p.phi[i * n_comp + k];
            if (slope != 0.0) {
                const double r = std::abs(p.margin[i] / slope);
                if (std::isfinite(r) && r > 0.0) mags.push_back(r);
            }
        }
    }
    double scale = 1.0;
    if (!mags.empty()) {
        std::nth_element(mags.begin(), mags.begin() + mags.size() / 2,
                         mags.end());
        scale = std::max(mags[mags.size() / 2], 1e-6);
    }

    std::vector<std::vector<double>> starts;
    starts.emplace_back(n_comp, 0.0);
    {
        std::size_t axis = 0;
        int sign = 1;
        rng::Stream random(rng::derive(config.seed, 0));
        while (starts.size() < static_cast<std::size_t>(config.starts)) {
            if (axis < n_comp) {
                std::vector<double> s(n_comp, 0.0);
                s[axis] = sign * scale;
                starts.push_back(std::move(s));
                if (sign == 1) {
                    sign = -1;
                } else {
                    sign = 1;
                    ++axis;
                }
            } else {
                std::vector<double> s(n_comp);
                for (double& v : s) v = random.next_normal() * scale;
                starts.push_back(std::move(s));
            }
        }
    }

    VisitKey best;
    std::vector<double> best_lambda;
    std::size_t evaluated = 0;
    auto visit = [&](const std::vector<double>& lambda,
                     const PointEval& ev) -> VisitKey {
        ++evaluated;
        VisitKey key;
        key.feasible = ev.max_abs_signed <= target;
        key.error = ev.error;
        key.l1 = l1_norm(lambda);
        key.lambda = lambda;
        if (key.better_than(best)) {
            best = key;
            best_lambda = lambda;
        }
        return key;
    };

    double min_unfairness = std::numeric_limits<double>::infinity();
    for (const std::vector<double>& start : starts) {
        std::vector<double> lambda = start;
        PointEval ev = evaluate_point(p, calib, lambda);
        min_unfairness = std::min(min_unfairness, ev.max_abs_signed);
        VisitKey current = visit(lambda, ev);
        for (int sweep = 0; sweep < config.sweeps; ++sweep) {
            bool changed = false;
            for (std::size_t k = 0; k < n_comp; ++k) {
                // Per-coordinate exact line search: with the other
                // coordinates fixed the constraint and error are piecewise
                // constant in lambda_k with breakpoints at reduced-margin
                // ratios; enumerate every piece and the breakpoints.
                std::vector<double> raw;
                raw.reserve(p.n);
                for (std::size_t i = 0; i < p.n; ++i) {
                    const double slope = p.phi[i * n_comp + k];
                    if (slope == 0.0) continue;
                    const double* phi_i = p.phi.data() + i * n_comp;
                    double rest = 0.0;
                    for (std::size_t l = 0; l < n_comp; ++l)
                        if (l != k) rest += lambda[l] * phi_i[l];
                    const double r = (p.margin[i] - rest) / slope;
                    if (std::isfinite(r)) raw.push_back(r);
                }
                std::vector<double> cands;
                const std::vector<double> bps = dedup_sorted(std::move(raw));
                cands.reserve(2 * bps.size() + 4);
                if (!bps.empty()) {
                    cands.push_back(bps.front() - 1.0);
                    for (std::size_t b = 0; b < bps.size(); ++b) {
                        cands.push_back(bps[b]);
                        if (b + 1 < bps.size())
                            cands.push_back(0.5 * (bps[b] + bps[b + 1]));
                    }
                    cands.push_back(bps.back() + 1.0);
                }
                cands.push_back(0.0);
                cands.push_back(lambda[k]);

                VisitKey local = current;
                double chosen = lambda[k];
                std::vector<double> trial = lambda;
                for (double c : cands) {
                    trial[k] = c;
                    const PointEval tev = evaluate_point(p, calib, trial);
                    min_unfairness =
                        std::min(min_unfairness, tev.max_abs_signed);
                    const VisitKey key = visit(trial, tev);
                    if (key.better_than(local)) {
                        local = key;
                        chosen = c;
                    }
                }
                if (chosen != lambda[k]) {
                    lambda[k] = chosen;
                    current = local;
                    changed = true;
                }
            }
            if (!changed) break;
        }
    }

    if (!best.feasible) {
        std::ostringstream msg;
        msg << "no visited lambda satisfies the constraint: best unfairness "
            << min_unfairness << " > alpha - epsilon = " << target;
        throw InfeasibleError(msg.str(), min_unfairness);
    }

    const PointEval ev = evaluate_point(p, calib, best_lambda);
    BinaryFitResult out;
    out.classifier.scenario = spec.scenario;
    out.classifier.notion = spec.notion;
    out.classifier.alpha = spec.alpha;
    out.classifier.delta_post = spec.delta_post;
    out.classifier.epsilon_alpha = epsilon;
    out.classifier.s_hat = 1;
    out.classifier.lambda = best_lambda;
    out.classifier.eta = eta;
    out.classifier.phi_vec = phi;
    out.report.s_hat = 1;
    out.report.lambda = best_lambda;
    out.report.epsilon_alpha = epsilon;
    out.report.threshold = target;
    out.report.constraint_value = ev.max_abs_signed;
    out.report.empirical_error = ev.error;
    out.report.candidates_evaluated = evaluated;
    return out;
}

std::pair<EtaFn, PhiFn> enforce_general_position(EtaFn eta, PhiFn phi,
                                                 double eps_eta,
                                                 double eps_phi) {
    EtaFn eta_out = [inner = std::move(eta), eps_eta](std::span<const double> x,
                                                      int a) {
        const double e = inner(x, a);
        return 2.0 * e == 1.0 ? e + eps_eta : e;
    };
    PhiFn phi_out = [inner = std::move(phi), eps_phi](std::span<const double> x,
                                                      int a) {
        const double v = inner(x, a);
        return v == 0.0 ? v + eps_phi : v;
    };
    return {std::move(eta_out), std::move(phi_out)};
}

}  // namespace fairpost
