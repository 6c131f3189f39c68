#pragma once

// Plug-in estimators: a multinomial logistic model over the 2K joint cells
// (y, a) of label and group, the conditional-probability readouts derived
// from it (eta, rho), the closed-form threshold weights phi per notion and
// scenario, and a local polynomial regressor.

#include <memory>
#include <span>
#include <vector>

#include "fairpost/core.hpp"

namespace fairpost {

// Cell probabilities estimated from a training split. Cells are ordered
// (y, a): (0,1), (0,2), ..., (0,K), (1,1), ..., (1,K).
struct Marginals {
    int k_groups = 2;
    std::vector<double> p_cell;  // size 2K, indexed y*K + (a-1)

    double cell(int y, int a) const {
        return p_cell[static_cast<std::size_t>(y * k_groups + a - 1)];
    }
    double group(int a) const { return cell(0, a) + cell(1, a); }
    double positive() const {
        double s = 0.0;
        for (int a = 1; a <= k_groups; ++a) s += cell(1, a);
        return s;
    }
    void validate() const;
};

Marginals empirical_marginals(const Dataset& data);

// Softmax over linear scores per joint cell; weights are (2K) x (d+1)
// row-major with the intercept last. Probabilities are floored at 1e-12
// before any ratio is formed.
struct LogitModel {
    int d = 0;
    int k_groups = 2;
    std::vector<double> weights;
    Marginals marginals;
    int iterations = 0;
    bool converged = false;
    double grad_inf_norm = 0.0;

    int cells() const { return 2 * k_groups; }
    // Cell probabilities for a feature vector; floored and renormalized.
    std::vector<double> cell_probs(std::span<const double> x) const;
};

struct LogitConfig {
    double reg = 1e-4;       // ridge strength on non-intercept weights
    int max_iterations = 2000;
    double tol = 1e-6;       // gradient infinity-norm target
};

// Penalized maximum likelihood via full-batch gradient descent with
// Barzilai-Borwein step sizes safeguarded by backtracking.
LogitModel fit_multinomial_logit(const Dataset& train,
                                 const LogitConfig& config = {});

// Mean negative log-likelihood plus ridge penalty, and its gradient, at the
// given weights; exposed so the gradient can be checked against finite
// differences.
double logit_loss_and_gradient(const Dataset& train,
                               const std::vector<double>& weights,
                               int k_groups, double reg,
                               std::vector<double>* gradient);

// P(Y=1 | X=x, A=a) (aware) or P(Y=1 | X=x) (blind).
double eta_value(const LogitModel& model, Scenario scenario,
                 std::span<const double> x, int a);
// P(A=a | X=x, Y=y).
double rho_given_label(const LogitModel& model, std::span<const double> x,
                       int a, int y);
// P(A=a | X=x).
double rho_marginal(const LogitModel& model, std::span<const double> x, int a);

// Closed-form phi for the K=2 notions. The aware form needs the sample's
// eta(x, a); the blind form needs eta(x), rho_{a|y}(x) and rho_a(x).
double phi_binary_aware(Notion notion, int a, double eta_aware,
                        const Marginals& m);
double phi_binary_blind(Notion notion, double eta_blind, double rho1_given_y1,
                        double rho1_given_y0, double rho1_marginal,
                        const Marginals& m);

// Closed-form phi components for the grouped (K >= 2) representations.
// Component order matches notion_spec_multiclass; equalized odds yields 2K
// components. rho vectors are indexed a-1.
std::vector<double> phi_multi_aware(Notion notion, int k_groups, int a,
                                    double eta_aware, const Marginals& m);
std::vector<double> phi_multi_blind(Notion notion, int k_groups,
                                    double eta_blind,
                                    const std::vector<double>& rho_given_y1,
                                    const std::vector<double>& rho_given_y0,
                                    const std::vector<double>& rho_marginal,
                                    const Marginals& m);

// Closures binding a fitted score model to the formulas above.
EtaFn make_eta(std::shared_ptr<const LogitModel> model, Scenario scenario);
PhiFn make_phi(std::shared_ptr<const LogitModel> model, Notion notion,
               Scenario scenario);
PhiVecFn make_phi_vec(std::shared_ptr<const LogitModel> model, Notion notion,
                      Scenario scenario);

// Local polynomial regression at a query point: weighted least squares on
// monomials of (x_i - x)/h up to `degree`, kernel weights
// K(u) = min(1, 2(1 - |u|_2))_+ (so K >= 1/2 inside |u| <= 1/2 and K = 0
// outside the unit ball). Returns the fitted intercept clipped to [0,1].
enum class LocalPolyTarget {
    Label,                  // regress Y on X
    GroupOneGivenPositive,  // regress 1(A=1) on X over samples with Y=1
};

struct LocalPolyConfig {
    double bandwidth = 1.0;  // > 0
    int degree = 1;          // 0, 1, or 2
    double ridge = 1e-10;    // stabilizes the normal equations
};

double fit_local_polynomial(const Dataset& train, LocalPolyTarget target,
                            const LocalPolyConfig& config,
                            std::span<const double> query);

}  // namespace fairpost
