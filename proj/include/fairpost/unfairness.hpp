#pragma once

// Unfairness measures as signed combinations of conditional means of a
// classifier over data cells: U(f) = max_k |sum_j kappa_kj * E[f | event_kj]|.
// Single-component measures (the K=2 notions) expose the signed value; the
// multi-component path covers K >= 2 groups and equalized odds.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fairpost/core.hpp"

namespace fairpost {

// A conditioning event over (A, Y): any of {A=a}, {Y=y}, {A=a,Y=y}, or the
// whole population when both are absent.
struct CellEvent {
    std::optional<int> a;
    std::optional<int> y;

    bool matches(int ai, int yi) const {
        return (!a || *a == ai) && (!y || *y == yi);
    }
    std::string name() const;
};

struct SignedTerm {
    double kappa = 0.0;
    CellEvent event;
};

using Component = std::vector<SignedTerm>;

struct ConditionalMeanSpec {
    int k_groups = 2;
    std::vector<Component> components;

    bool single_component() const { return components.size() == 1; }
    // Largest sum_j |kappa_j| over components: the range of the signed value.
    double kappa_l1() const;
};

// The K=2 representation of a notion; equalized odds has no single-component
// form and is rejected here.
ConditionalMeanSpec notion_spec(Notion notion, int k_groups);

// The grouped representation for K >= 2 groups: one component per group
// (two per group for equalized odds), each contrasting the group cell
// against the population/label baseline.
ConditionalMeanSpec notion_spec_multiclass(Notion notion, int k_groups);

// Count of samples matching an event; used for slack formulas and checks.
std::size_t event_count(const CellEvent& event, const Dataset& data);

// max_k |sum_j kappa_kj * mean of f over event_kj|. Throws DataError naming
// the event if any event has no samples.
double empirical_unfairness(const ConditionalMeanSpec& spec,
                            const std::vector<std::uint8_t>& f,
                            const Dataset& data);

// The signed value of a single-component spec (no absolute value).
double signed_empirical_mean(const ConditionalMeanSpec& spec,
                             const std::vector<std::uint8_t>& f,
                             const Dataset& data);

// Calibration slack for the family {1(2 eta - 1 > <lambda, phi>)}:
//   Theoretical: per-event concentration with the VC constants
//     (dimension 2 for one component, K~+1 in general),
//   Practical:   sqrt(log(1/delta) / n_ref),
//   Fixed:       the configured value.
double epsilon_alpha(const ConditionalMeanSpec& spec, const Dataset& data,
                     double delta, const EpsilonPolicy& policy);

struct DeviationReport {
    int trials = 0;
    double epsilon = 0.0;
    double exceed_fraction = 0.0;
    double median_sup_deviation = 0.0;
};

struct DeviationCheckConfig {
    int trials = 200;
    double delta = 0.05;
    int threads = 0;
};

// Empirically verifies the concentration behind the Theoretical slack:
// draws `trials` calibration sets, computes for each the exact supremum over
// lambda of |signed empirical mean - signed population mean| along the
// thresholded family (population means taken from `population`), and reports
// how often the supremum exceeds epsilon_alpha. Single-component specs only.
DeviationReport deviation_check(const ConditionalMeanSpec& spec,
                                const EtaFn& eta, const PhiFn& phi,
                                const std::function<Dataset(int)>& draw,
                                const Dataset& population,
                                const DeviationCheckConfig& config);

}  // namespace fairpost
