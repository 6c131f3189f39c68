#pragma once

// Domain types shared across the library: datasets with a binary label and a
// 1-based group attribute, fairness problem descriptions, and fitted
// post-processed classifiers of the form 1{2*eta(x,a) - 1 > <lambda, phi(x,a)>}.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairpost {

enum class Scenario { Aware, Blind };

enum class Notion {
    DemographicParity,
    EqualOpportunity,
    OverallAccuracyEquality,
    PredictiveEquality,
    EqualizedOdds,
};

std::string to_string(Scenario s);
std::string to_string(Notion n);
Scenario scenario_from_string(const std::string& s);
Notion notion_from_string(const std::string& s);

// Invalid configuration or arguments (CLI exit code 1).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The calibration constraint cannot be met at the requested level (CLI exit
// code 2). Carries the best constraint value any candidate achieved.
struct InfeasibleError : std::runtime_error {
    InfeasibleError(const std::string& what, double achieved)
        : std::runtime_error(what), min_achievable(achieved) {}
    double min_achievable;
};

// Feature rows are stored flat (row-major) so inner loops can run over
// contiguous memory; group labels are 1-based, class labels are {0,1}.
class Dataset {
  public:
    Dataset() = default;
    Dataset(int d, int k_groups);

    void reserve(std::size_t n);
    void add(std::span<const double> x, int a, int y);

    std::size_t n() const { return group_.size(); }
    int d() const { return d_; }
    int k_groups() const { return k_groups_; }

    std::span<const double> x(std::size_t i) const {
        return {features_.data() + i * static_cast<std::size_t>(d_),
                static_cast<std::size_t>(d_)};
    }
    int a(std::size_t i) const { return group_[i]; }
    int y(std::size_t i) const { return label_[i]; }

    const std::vector<double>& features() const { return features_; }
    const std::vector<int>& groups() const { return group_; }
    const std::vector<int>& labels() const { return label_; }

    std::size_t group_count(int a) const;
    std::size_t cell_count(int y, int a) const;
    std::size_t label_count(int y) const;

    Dataset subset(const std::vector<std::size_t>& indices) const;

  private:
    int d_ = 0;
    int k_groups_ = 0;
    std::vector<double> features_;
    std::vector<int> group_;
    std::vector<int> label_;
    std::vector<std::size_t> group_count_;  // indexed a-1
    std::vector<std::size_t> cell_count_;   // indexed y*K + (a-1)
};

// Expects a header "x1,...,xd,a,y"; rejects non-numeric fields, group labels
// outside 1..k_groups (k inferred as the max seen), labels outside {0,1}.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

// Score functions the calibrated classifier thresholds. Blind estimators
// ignore the group argument by construction.
using EtaFn = std::function<double(std::span<const double>, int)>;
using PhiFn = std::function<double(std::span<const double>, int)>;
using PhiVecFn =
    std::function<std::vector<double>(std::span<const double>, int)>;

// How the calibration slack epsilon_alpha is obtained.
enum class EpsilonMode { Theoretical, Practical, Fixed };

// Reference count for the Practical rule sqrt(log(1/delta)/n_ref).
enum class PracticalRef { SmallestCell, PositiveLabels };

struct EpsilonPolicy {
    EpsilonMode mode = EpsilonMode::Theoretical;
    PracticalRef practical_ref = PracticalRef::SmallestCell;
    double fixed_value = 0.0;  // requires >= 0 when mode == Fixed
};

struct FairnessSpec {
    Notion notion = Notion::EqualOpportunity;
    Scenario scenario = Scenario::Blind;
    double alpha = 0.1;       // > 0; values above sum|kappa| are vacuous
    double delta_post = 0.05; // in (0,1)
    EpsilonPolicy epsilon;

    void validate() const;
};

// A calibrated post-processed classifier. For the single-component path
// lambda has one entry and s_hat records the sign split; multi-component
// classifiers carry one lambda per unfairness component.
struct FittedFairClassifier {
    Scenario scenario = Scenario::Blind;
    Notion notion = Notion::EqualOpportunity;
    double alpha = 0.0;
    double delta_post = 0.0;
    double epsilon_alpha = 0.0;
    int s_hat = 1;
    std::vector<double> lambda;
    EtaFn eta;
    PhiFn phi;          // set on the single-component path
    PhiVecFn phi_vec;   // set on the multi-component path

    bool multi_component() const { return static_cast<bool>(phi_vec); }

    // Strict threshold: predicts 1 iff 2*eta - 1 > <lambda, phi>.
    int predict(std::span<const double> x, int a) const;
    std::vector<std::uint8_t> predict(const Dataset& data) const;
};

}  // namespace fairpost
