#include "fairpost/unfairness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairpost/parallel.hpp"
#include "fairpost/rng.hpp"

namespace fairpost {

namespace {

// VC-type expected-supremum constant: 72 * sqrt(v * log(4e^2) / n).
const double kLog4e2 = std::log(4.0) + 2.0;

double vc_term(double vc_dim, std::size_t n) {
    return 72.0 * std::sqrt(vc_dim * kLog4e2 / static_cast<double>(n));
}

double tail_term(double log_arg, std::size_t n) {
    return std::sqrt(std::log(log_arg) / (2.0 * static_cast<double>(n)));
}

}  // namespace

std::string CellEvent::name() const {
    if (a && y) return "{A=" + std::to_string(*a) + ",Y=" + std::to_string(*y) + "}";
    if (a) return "{A=" + std::to_string(*a) + "}";
    if (y) return "{Y=" + std::to_string(*y) + "}";
    return "{all}";
}

double ConditionalMeanSpec::kappa_l1() const {
    double best = 0.0;
    for (const Component& comp : components) {
        double sum = 0.0;
        for (const SignedTerm& t : comp) sum += std::abs(t.kappa);
        best = std::max(best, sum);
    }
    return best;
}

ConditionalMeanSpec notion_spec(Notion notion, int k_groups) {
    if (k_groups != 2)
        throw ValidationError(
            "the single-component representation requires exactly 2 groups");
    ConditionalMeanSpec spec;
    spec.k_groups = 2;
    Component comp;
    switch (notion) {
        case Notion::DemographicParity:
            comp = {{1.0, {1, std::nullopt}}, {-1.0, {2, std::nullopt}}};
            break;
        case Notion::EqualOpportunity:
            comp = {{1.0, {1, 1}}, {-1.0, {2, 1}}};
            break;
        case Notion::PredictiveEquality:
            comp = {{1.0, {1, 0}}, {-1.0, {2, 0}}};
            break;
        case Notion::OverallAccuracyEquality:
            comp = {{1.0, {1, 1}}, {-1.0, {1, 0}}, {-1.0, {2, 1}}, {1.0, {2, 0}}};
            break;
        case Notion::EqualizedOdds:
            throw ValidationError(
                "equalized odds has no single-component form; use the "
                "multi-component path");
    }
    spec.components.push_back(std::move(comp));
    return spec;
}

ConditionalMeanSpec notion_spec_multiclass(Notion notion, int k_groups) {
    if (k_groups < 2) throw ValidationError("need >= 2 groups");
    ConditionalMeanSpec spec;
    spec.k_groups = k_groups;
    for (int a = 1; a <= k_groups; ++a) {
        switch (notion) {
            case Notion::DemographicParity:
                spec.components.push_back(
                    {{1.0, {a, std::nullopt}},
                     {-1.0, {std::nullopt, std::nullopt}}});
                break;
            case Notion::EqualOpportunity:
                spec.components.push_back(
                    {{1.0, {a, 1}}, {-1.0, {std::nullopt, 1}}});
                break;
            case Notion::PredictiveEquality:
                spec.components.push_back(
                    {{1.0, {a, 0}}, {-1.0, {std::nullopt, 0}}});
                break;
            case Notion::OverallAccuracyEquality:
                spec.components.push_back({{1.0, {a, 1}},
                                           {-1.0, {a, 0}},
                                           {-1.0, {std::nullopt, 1}},
                                           {1.0, {std::nullopt, 0}}});
                break;
            case Notion::EqualizedOdds:
                // Filled below so the two families stay grouped.
                break;
        }
    }
    if (notion == Notion::EqualizedOdds) {
        for (int a = 1; a <= k_groups; ++a)
            spec.components.push_back(
                {{1.0, {a, 1}}, {-1.0, {std::nullopt, 1}}});
        for (int a = 1; a <= k_groups; ++a)
            spec.components.push_back(
                {{1.0, {std::nullopt, 0}}, {-1.0, {a, 0}}});
    }
    return spec;
}

std::size_t event_count(const CellEvent& event, const Dataset& data) {
    if (event.a && event.y) return data.cell_count(*event.y, *event.a);
    if (event.a) return data.group_count(*event.a);
    if (event.y) return data.label_count(*event.y);
    return data.n();
}

namespace {

double component_signed_mean(const Component& comp,
                             const std::vector<std::uint8_t>& f,
                             const Dataset& data) {
    double value = 0.0;
    for (const SignedTerm& term : comp) {
        const std::size_t count = event_count(term.event, data);
        if (count == 0)
            throw DataError("event " + term.event.name() +
                            " has no samples; the conditional mean is undefined");
        std::size_t hits = 0;
        for (std::size_t i = 0; i < data.n(); ++i) {
            if (f[i] != 0 && term.event.matches(data.a(i), data.y(i))) ++hits;
        }
        value += term.kappa * static_cast<double>(hits) /
                 static_cast<double>(count);
    }
    return value;
}

}  // namespace

double empirical_unfairness(const ConditionalMeanSpec& spec,
                            const std::vector<std::uint8_t>& f,
                            const Dataset& data) {
    if (f.size() != data.n())
        throw ValidationError("prediction vector length mismatch");
    double worst = 0.0;
    for (const Component& comp : spec.components)
        worst = std::max(worst, std::abs(component_signed_mean(comp, f, data)));
    return worst;
}

double signed_empirical_mean(const ConditionalMeanSpec& spec,
                             const std::vector<std::uint8_t>& f,
                             const Dataset& data) {
    if (!spec.single_component())
        throw ValidationError(
            "signed mean is only defined for single-component measures");
    if (f.size() != data.n())
        throw ValidationError("prediction vector length mismatch");
    return component_signed_mean(spec.components[0], f, data);
}

double epsilon_alpha(const ConditionalMeanSpec& spec, const Dataset& data,
                     double delta, const EpsilonPolicy& policy) {
    if (!(delta > 0.0 && delta < 1.0))
        throw ValidationError("delta must be in (0,1)");
    switch (policy.mode) {
        case EpsilonMode::Fixed:
            if (policy.fixed_value < 0.0)
                throw ValidationError("fixed epsilon_alpha must be >= 0");
            return policy.fixed_value;
        case EpsilonMode::Practical: {
            std::size_t n_ref = 0;
            if (policy.practical_ref == PracticalRef::PositiveLabels) {
                n_ref = data.label_count(1);
            } else {
                n_ref = data.n();
                for (const Component& comp : spec.components)
                    for (const SignedTerm& term : comp)
                        n_ref = std::min(n_ref, event_count(term.event, data));
            }
            if (n_ref == 0)
                throw DataError(
                    "practical slack reference count is zero on this data");
            return std::sqrt(std::log(1.0 / delta) /
                             static_cast<double>(n_ref));
        }
        case EpsilonMode::Theoretical:
            break;
    }
    // Families 1(2 eta - 1 > <lambda, phi>) indexed by lambda in R^m have
    // VC dimension at most m + 1; a single threshold direction gives 2.
    const std::size_t n_components = spec.components.size();
    const double vc_dim =
        spec.single_component() ? 2.0 : static_cast<double>(n_components) + 1.0;
    double worst = 0.0;
    for (const Component& comp : spec.components) {
        double value = 0.0;
        for (const SignedTerm& term : comp) {
            const std::size_t count = event_count(term.event, data);
            if (count == 0)
                throw DataError("event " + term.event.name() +
                                " has no samples; slack is undefined");
            const double log_arg = 2.0 * static_cast<double>(n_components) *
                                   static_cast<double>(comp.size()) / delta;
            value += std::abs(term.kappa) *
                     (vc_term(vc_dim, count) + tail_term(log_arg, count));
        }
        worst = std::max(worst, value);
    }
    return worst;
}

namespace {

struct WeightedPoint {
    double margin;
    double phi;
    double weight;
};

// Exact supremum over lambda in R of |sum_i w_i 1(margin_i > lambda*phi_i)|.
// The sum is piecewise constant with breakpoints at margin/phi; the value at
// a breakpoint differs from both neighboring pieces, so the sweep evaluates
// each breakpoint and each open piece.
double sup_abs_weighted_indicator(std::vector<WeightedPoint>& pts) {
    double base = 0.0;   // phi == 0 samples never change activation
    double running = 0.0;
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const WeightedPoint& p = pts[i];
        if (p.phi == 0.0) {
            if (p.margin > 0.0) base += p.weight;
        } else {
            order.emplace_back(p.margin / p.phi, i);
            if (p.phi > 0.0) running += p.weight;  // active at lambda -> -inf
        }
    }
    double sup = std::abs(base + running);
    std::sort(order.begin(), order.end());
    std::size_t i = 0;
    while (i < order.size()) {
        const double r = order[i].first;
        double drop_pos = 0.0, add_neg = 0.0;
        std::size_t j = i;
        for (; j < order.size() && order[j].first == r; ++j) {
            const WeightedPoint& p = pts[order[j].second];
            if (p.phi > 0.0) drop_pos += p.weight;
            else add_neg += p.weight;
        }
        running -= drop_pos;               // value exactly at lambda = r
        sup = std::max(sup, std::abs(base + running));
        running += add_neg;                // value just right of r
        sup = std::max(sup, std::abs(base + running));
        i = j;
    }
    return sup;
}

}  // namespace

DeviationReport deviation_check(const ConditionalMeanSpec& spec,
                                const EtaFn& eta, const PhiFn& phi,
                                const std::function<Dataset(int)>& draw,
                                const Dataset& population,
                                const DeviationCheckConfig& config) {
    if (!spec.single_component())
        throw ValidationError("deviation check covers single-component specs");
    if (config.trials < 1) throw ValidationError("need at least one trial");
    const Component& comp = spec.components[0];

    // Population side: fixed across trials, weight -kappa_j / n_j.
    std::vector<WeightedPoint> pop_pts;
    pop_pts.reserve(population.n());
    std::vector<double> pop_event_count(comp.size(), 0.0);
    for (std::size_t j = 0; j < comp.size(); ++j) {
        const std::size_t c = event_count(comp[j].event, population);
        if (c == 0)
            throw DataError("population has no samples in event " +
                            comp[j].event.name());
        pop_event_count[j] = static_cast<double>(c);
    }
    for (std::size_t i = 0; i < population.n(); ++i) {
        double w = 0.0;
        for (std::size_t j = 0; j < comp.size(); ++j) {
            if (comp[j].event.matches(population.a(i), population.y(i)))
                w -= comp[j].kappa / pop_event_count[j];
        }
        if (w == 0.0) continue;
        const double e = eta(population.x(i), population.a(i));
        pop_pts.push_back(
            {2.0 * e - 1.0, phi(population.x(i), population.a(i)), w});
    }

    // Reference slack from the first trial's draw; draws are deterministic
    // per index, so this matches trial 0 regardless of worker count.
    const double eps = epsilon_alpha(spec, draw(0), config.delta,
                                     {EpsilonMode::Theoretical});

    std::vector<double> sups(static_cast<std::size_t>(config.trials), 0.0);
    parallel_for(
        static_cast<std::size_t>(config.trials),
        [&](std::size_t t) {
            const Dataset calib = draw(static_cast<int>(t));
            std::vector<WeightedPoint> pts = pop_pts;
            pts.reserve(pop_pts.size() + calib.n());
            std::vector<double> counts(comp.size(), 0.0);
            for (std::size_t j = 0; j < comp.size(); ++j) {
                const std::size_t c = event_count(comp[j].event, calib);
                if (c == 0)
                    throw DataError("trial draw has no samples in event " +
                                    comp[j].event.name());
                counts[j] = static_cast<double>(c);
            }
            for (std::size_t i = 0; i < calib.n(); ++i) {
                double w = 0.0;
                for (std::size_t j = 0; j < comp.size(); ++j) {
                    if (comp[j].event.matches(calib.a(i), calib.y(i)))
                        w += comp[j].kappa / counts[j];
                }
                if (w == 0.0) continue;
                const double e = eta(calib.x(i), calib.a(i));
                pts.push_back(
                    {2.0 * e - 1.0, phi(calib.x(i), calib.a(i)), w});
            }
            sups[t] = sup_abs_weighted_indicator(pts);
        },
        config.threads);

    DeviationReport report;
    report.trials = config.trials;
    report.epsilon = eps;
    std::size_t exceed = 0;
    for (double s : sups)
        if (s > eps) ++exceed;
    report.exceed_fraction =
        static_cast<double>(exceed) / static_cast<double>(config.trials);
    std::vector<double> sorted = sups;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    report.median_sup_deviation =
        (m % 2 == 1) ? sorted[m / 2]
                     : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    return report;
}

}  // namespace fairpost
