#pragma once

// Synthetic two-group mixture models with known conditionals, used as ground
// truth: features are drawn as cell mean plus i.i.d. noise, so P(Y,A | X) has
// a closed form and the population-optimal post-processing shift can be
// computed to Monte Carlo accuracy. The population objective for a
// single-component measure,
//   J(lambda) = E[(2 eta - 1 - lambda phi)_+] + alpha |lambda|,
// is convex piecewise linear over any finite sample, so its minimizer is
// found exactly by a sweep over the kinks.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairpost/core.hpp"
#include "fairpost/estimators.hpp"

namespace fairpost::oracle {

enum class Noise { Gaussian, StudentT };

std::string to_string(Noise n);
Noise noise_from_string(const std::string& s);

// Cells are indexed c = y*2 + (a-1): (y=0,a=1), (0,2), (1,1), (1,2).
struct OracleModel {
    int d = 0;
    Noise noise = Noise::Gaussian;
    int t_dof = 3;
    std::array<double, 4> cell_probs{};
    std::array<std::vector<double>, 4> means{};
    std::uint64_t seed = 0;  // seed the fixture's means were drawn from

    Marginals marginals() const;
    void validate() const;
};

// Draws cell means: three cells uniform on (0,1)^d, the (y=1,a=1) cell
// uniform on (separation, separation+1)^d.
OracleModel make_fixture(int d, double separation, Noise noise, int t_dof,
                         std::uint64_t seed);

OracleModel load_fixture(const std::string& path);
void save_fixture(const OracleModel& model, const std::string& path);

// n i.i.d. draws; sample i uses its own stream derived from (seed, i), so
// the result is independent of evaluation order.
Dataset sample(const OracleModel& model, std::size_t n, std::uint64_t seed);

// Unnormalized log posterior weights log(p_c * density(x - mu_c)) per cell.
std::array<double, 4> log_cell_weights(const OracleModel& model,
                                       std::span<const double> x);

double true_eta_aware(const OracleModel& model, std::span<const double> x,
                      int a);
double true_eta_blind(const OracleModel& model, std::span<const double> x);
double true_rho_given_label(const OracleModel& model,
                            std::span<const double> x, int a, int y);
double true_rho_marginal(const OracleModel& model, std::span<const double> x,
                         int a);

// Closures over the exact conditionals, matching the estimator-based ones.
EtaFn true_eta(const OracleModel& model, Scenario scenario);
PhiFn true_phi(const OracleModel& model, Notion notion, Scenario scenario);
PhiVecFn true_phi_vec(const OracleModel& model, Notion notion,
                      Scenario scenario);

struct HingeSolution {
    double lambda = 0.0;
    double objective = 0.0;
};

// Exact minimizer of sum_i w[i]*(margin[i] - lambda*phi[i])_+ + alpha|lambda|
// over lambda, by an ascending sweep across the kinks margin[i]/phi[i] with
// running active sums; candidates are the kinks and 0, ties prefer the
// smaller |lambda|. Empty `weight` means uniform 1/n.
HingeSolution min_hinge_plus_abs(std::span<const double> margin,
                                 std::span<const double> phi,
                                 std::span<const double> weight, double alpha);

// Monte Carlo estimate of the population-optimal shift for a
// single-component measure. |lambda| <= 1/alpha always holds: the objective
// at 0 is at most 1 while alpha|lambda| alone exceeds 1 beyond that range.
HingeSolution bayes_lambda(const OracleModel& model, Notion notion,
                           Scenario scenario, double alpha,
                           std::size_t mc_draws, std::uint64_t seed);

struct VectorHingeSolution {
    std::vector<double> lambda;
    double objective = 0.0;
};

// Multi-component analogue minimized by projected subgradient descent
// (iterates clamped to the box |lambda_k| <= 1/alpha, step c/sqrt(t), best
// visited point kept; ties prefer the smaller l1 norm). Approximate, unlike
// the single-component sweep.
VectorHingeSolution bayes_lambda_vec(const OracleModel& model, Notion notion,
                                     Scenario scenario, double alpha,
                                     std::size_t mc_draws, std::uint64_t seed,
                                     int iterations = 2000);

struct RiskReport {
    double risk = 0.0;       // misclassification rate of the shifted rule
    double std_error = 0.0;  // Monte Carlo standard error of the risk
    double unfairness = 0.0; // empirical U of the rule on the same draw
    double lambda = 0.0;
};

// Risk of f*(x,a) = 1{2 eta - 1 > lambda* phi} under the model, where
// lambda* minimizes the hinge objective on the same Monte Carlo draw.
RiskReport bayes_risk(const OracleModel& model, Notion notion,
                      Scenario scenario, double alpha, std::size_t mc_draws,
                      std::uint64_t seed);

struct LambdaPoint {
    double alpha = 0.0;
    double lambda = 0.0;
    double objective = 0.0;
};

// lambda*(alpha) over a grid, computed on one shared draw (common random
// numbers) so the curve is smooth in alpha.
std::vector<LambdaPoint> lambda_curve(const OracleModel& model, Notion notion,
                                      Scenario scenario,
                                      std::span<const double> alphas,
                                      std::size_t mc_draws,
                                      std::uint64_t seed);

}  // namespace fairpost::oracle
