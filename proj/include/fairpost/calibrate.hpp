#pragma once

// Post-processing calibration: given plug-in scores eta and weights phi on a
// calibration set, choose the threshold shift lambda so the empirical signed
// unfairness satisfies the slack-tightened constraint. The constraint is
// piecewise constant in lambda, so candidate thresholds are enumerated
// exactly (breakpoints, midpoints, fences); the returned lambda is always an
// evaluated candidate, never an unattained infimum.

#include <cstdint>
#include <utility>
#include <vector>

#include "fairpost/core.hpp"
#include "fairpost/unfairness.hpp"

namespace fairpost {

struct CalibrationReport {
    int s_hat = 1;
    std::vector<double> lambda;
    double epsilon_alpha = 0.0;
    double threshold = 0.0;         // alpha - epsilon_alpha
    double constraint_value = 0.0;  // signed mean (single) or max |.| (multi)
    double empirical_error = 0.0;   // 0-1 error on the calibration set
    std::size_t candidates_evaluated = 0;
    bool delegated_single_component = false;  // multi entry ran the scan path
};

struct BinaryFitResult {
    FittedFairClassifier classifier;
    CalibrationReport report;
};

// Sign-then-scan calibration for single-component measures:
//   1. s_hat from the sign of the plug-in signed mean (sign(0) = +1),
//   2. smallest lambda_plus >= 0 whose signed mean meets alpha - epsilon,
//      found by exact enumeration of the positive breakpoints
//      (2 eta_i - 1)/(s_hat phi_i), their midpoints, 0, and a point past the
//      largest breakpoint,
//   3. lambda = s_hat * lambda_plus.
// Throws InfeasibleError carrying the best achievable signed value when no
// candidate satisfies the constraint.
BinaryFitResult fit_binary(const Dataset& calib, const EtaFn& eta,
                           const PhiFn& phi, const FairnessSpec& spec);

struct MulticlassSearchConfig {
    int starts = 8;
    int sweeps = 10;
    std::uint64_t seed = 0x5eedf00dULL;
};

// Calibration for multi-component measures: minimizes the empirical 0-1
// error over the visited lambda grid subject to
// max_k |signed mean_k| <= alpha - epsilon, by multi-start coordinate
// descent with an exact per-coordinate breakpoint line search. Uses the
// grouped representation from notion_spec_multiclass.
BinaryFitResult fit_multiclass(const Dataset& calib, const EtaFn& eta,
                               const PhiVecFn& phi, const FairnessSpec& spec,
                               const MulticlassSearchConfig& config = {});

// Same search against an explicit signed-mean representation whose component
// count matches what phi returns. With a single component this delegates to
// the sign-then-scan path, so it returns exactly fit_binary's lambda.
BinaryFitResult fit_with_representation(const Dataset& calib, const EtaFn& eta,
                                        const PhiVecFn& phi,
                                        const FairnessSpec& spec,
                                        const ConditionalMeanSpec& mean_spec,
                                        const MulticlassSearchConfig& config = {});

// Nudges exact ties off the decision boundary: phi gets eps_phi added where
// it is exactly 0, eta gets eps_eta added where 2*eta equals 1 exactly.
std::pair<EtaFn, PhiFn> enforce_general_position(EtaFn eta, PhiFn phi,
                                                 double eps_eta,
                                                 double eps_phi);

}  // namespace fairpost
