#pragma once

// Repetition studies: draw data, fit the estimator, calibrate the shift,
// and evaluate error/unfairness on held-out data, aggregated over many
// repetitions. Every repetition derives its own random stream from
// (seed, rep), and per-repetition results land in per-index slots, so a
// report depends only on the configuration and seed, never on the worker
// count. Synthetic studies add exact-oracle reference rows.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairpost/core.hpp"
#include "fairpost/estimators.hpp"
#include "fairpost/oracle.hpp"

namespace fairpost::bench {

struct SimConfig {
    oracle::OracleModel model;
    Notion notion = Notion::EqualOpportunity;
    std::vector<Scenario> scenarios{Scenario::Aware, Scenario::Blind};
    std::vector<double> alphas{0.1};
    double delta_post = 0.1;
    int reps = 100;
    std::size_t n_train = 1000;
    std::size_t n_calib = 1000;
    std::size_t n_test = 20000;
    EpsilonPolicy epsilon;
    std::uint64_t seed = 1;
    int threads = 0;
    LogitConfig logit;
    // Tie-nudging offsets applied to the fitted scores before calibration.
    double eps_eta = 1e-10;
    double eps_phi = 1e-10;
    std::size_t bayes_mc = 200000;  // 0 disables the oracle reference rows

    void validate() const;
};

// Aggregates over the feasible repetitions of one (scenario, alpha) pair.
struct SimCell {
    Scenario scenario = Scenario::Aware;
    double alpha = 0.0;
    int reps_total = 0;
    int reps_feasible = 0;
    int reps_infeasible = 0;
    double epsilon_mean = 0.0;
    double error_mean = 0.0;
    double error_se = 0.0;
    double unfairness_mean = 0.0;
    double unfairness_se = 0.0;
    double unfairness_q95 = 0.0;  // order statistic ceil(0.95 m), 1-based
    double exceed_alpha_fraction = 0.0;
    double lambda_mean = 0.0;
};

struct BayesRow {
    Scenario scenario = Scenario::Aware;
    double alpha = 0.0;
    double risk = 0.0;
    double risk_se = 0.0;
    double unfairness = 0.0;
    double lambda = 0.0;
};

struct SimReport {
    nlohmann::json config_echo;
    std::vector<SimCell> cells;
    std::vector<BayesRow> bayes;
};

SimReport run_simulation(const SimConfig& config);

// Column roles for tabular CSV data described by a manifest. Categorical
// features are one-hot encoded over the level set seen in the file (sorted),
// numeric features are standardized; rows with missing fields ("?") are
// dropped.
struct RealConfig {
    std::string csv_path;
    std::string manifest_path;
    Notion notion = Notion::EqualOpportunity;
    std::vector<Scenario> scenarios{Scenario::Aware, Scenario::Blind};
    std::vector<double> alphas{0.1};
    double delta_post = 0.1;
    int reps = 100;
    double train_fraction = 0.4;
    double calib_fraction = 0.4;  // remainder is the test split
    EpsilonPolicy epsilon;
    std::uint64_t seed = 1;
    int threads = 0;
    LogitConfig logit;
    double eps_eta = 1e-10;
    double eps_phi = 1e-10;

    void validate() const;
};

// The encoded dataset plus bookkeeping from the manifest pass.
struct EncodedTable {
    Dataset data;
    std::vector<std::string> feature_names;  // expanded (one-hot) names
    std::size_t rows_dropped = 0;            // rows with missing fields
};

EncodedTable load_table(const std::string& csv_path,
                        const std::string& manifest_path);

SimReport run_real(const RealConfig& config);

// Serialized twins of a report: a JSON document and a flat CSV with a
// row_kind column ("sim" or "bayes").
nlohmann::json report_to_json(const SimReport& report);
void write_report_json(const SimReport& report, const std::string& path);
void write_report_csv(const SimReport& report, const std::string& path);

}  // namespace fairpost::bench
