// Command-line interface: synthetic repetition studies, one-off calibration,
// prediction and evaluation with saved classifiers, exact oracle shift
// curves, accuracy/fairness tradeoff sweeps, and manifest-driven studies on
// real tabular data.
//
// Exit codes: 0 success, 1 invalid arguments or configuration,
// 2 calibration infeasible at the requested level, 3 malformed data.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairpost/bench.hpp"
#include "fairpost/calibrate.hpp"
#include "fairpost/core.hpp"
#include "fairpost/estimators.hpp"
#include "fairpost/kernels.hpp"
#include "fairpost/oracle.hpp"
#include "fairpost/serialize.hpp"
#include "fairpost/unfairness.hpp"

namespace {

using nlohmann::json;

// Merge precedence: explicit flag > config-file key > built-in default (the
// flag variable already holds the default when neither is given).
template <typename T>
T pick(const CLI::App* cmd, const std::string& flag, const T& cli_value,
       const json& cfg, const std::string& key) {
    if (cmd->count(flag) > 0) return cli_value;
    if (cfg.contains(key)) {
        try {
            return cfg.at(key).get<T>();
        } catch (const json::exception& e) {
            throw fairpost::ValidationError("config key '" + key +
                                            "': " + e.what());
        }
    }
    return cli_value;
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    return fairpost::serialize::read_json_file(path);
}

std::vector<fairpost::Scenario> parse_scenarios(
    const std::vector<std::string>& names) {
    std::vector<fairpost::Scenario> out;
    out.reserve(names.size());
    for (const std::string& s : names)
        out.push_back(fairpost::scenario_from_string(s));
    if (out.empty())
        throw fairpost::ValidationError("at least one scenario is required");
    return out;
}

fairpost::EpsilonPolicy parse_epsilon(const std::string& mode,
                                      const std::string& ref, double fixed) {
    fairpost::EpsilonPolicy policy;
    policy.mode = fairpost::serialize::epsilon_mode_from_string(mode);
    policy.practical_ref =
        fairpost::serialize::practical_ref_from_string(ref);
    policy.fixed_value = fixed;
    return policy;
}

void echo_config(const json& effective) {
    std::cerr << "config: " << effective.dump() << '\n';
}

void print_report_summary(const fairpost::bench::SimReport& report) {
    for (const auto& c : report.cells) {
        std::printf(
            "%-5s alpha=%-6.4g feasible=%d/%d eps=%.4f err=%.4f(%.4f) "
            "U=%.4f(%.4f) q95=%.4f exceed=%.3f lambda=%.4f\n",
            fairpost::to_string(c.scenario).c_str(), c.alpha,
            c.reps_feasible, c.reps_total, c.epsilon_mean, c.error_mean,
            c.error_se, c.unfairness_mean, c.unfairness_se, c.unfairness_q95,
            c.exceed_alpha_fraction, c.lambda_mean);
    }
    for (const auto& b : report.bayes) {
        std::printf(
            "%-5s alpha=%-6.4g oracle risk=%.4f(%.4f) U=%.4f lambda=%.4f\n",
            fairpost::to_string(b.scenario).c_str(), b.alpha, b.risk,
            b.risk_se, b.unfairness, b.lambda);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairpost: fairness-constrained post-processing of binary "
                 "classifiers"};
    app.require_subcommand(1);

    // ---------- fixture ----------
    auto* fixture_cmd = app.add_subcommand(
        "fixture", "Generate a synthetic oracle fixture file");
    int fx_d = 5;
    double fx_sep = 1.0;
    std::string fx_noise = "gaussian";
    int fx_dof = 3;
    std::uint64_t fx_seed = 1;
    std::string fx_out;
    fixture_cmd->add_option("--d", fx_d, "Feature dimension");
    fixture_cmd->add_option("--separation", fx_sep,
                            "Shift of the (y=1,a=1) cell mean");
    fixture_cmd->add_option("--noise", fx_noise, "gaussian or student_t");
    fixture_cmd->add_option("--t-dof", fx_dof, "Student-t degrees of freedom");
    fixture_cmd->add_option("--seed", fx_seed, "Seed for the cell means");
    fixture_cmd->add_option("--out", fx_out, "Output fixture path")
        ->required();

    // ---------- simulate ----------
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Repetition study on a synthetic oracle fixture");
    std::string sim_fixture, sim_config;
    std::string sim_notion = "eoo";
    std::vector<std::string> sim_scenarios{"aware", "blind"};
    std::vector<double> sim_alphas{0.1};
    double sim_delta = 0.1;
    int sim_reps = 100;
    std::size_t sim_n_train = 1000, sim_n_calib = 1000, sim_n_test = 20000;
    std::string sim_eps_mode = "theoretical";
    std::string sim_practical_ref = "smallest_cell";
    double sim_eps_fixed = 0.0;
    std::uint64_t sim_seed = 1;
    int sim_threads = 0;
    std::size_t sim_bayes_mc = 200000;
    std::string sim_out_json, sim_out_csv;
    sim_cmd->add_option("--config", sim_config,
                        "JSON config file (flags override)");
    sim_cmd->add_option("--fixture", sim_fixture, "Oracle fixture path");
    sim_cmd->add_option("--notion", sim_notion, "dp|eoo|oae|pe|eo");
    sim_cmd->add_option("--scenario", sim_scenarios,
                        "aware and/or blind (repeatable)");
    sim_cmd->add_option("--alpha", sim_alphas, "Unfairness levels");
    sim_cmd->add_option("--delta", sim_delta, "Failure budget delta");
    sim_cmd->add_option("--reps", sim_reps, "Number of repetitions");
    sim_cmd->add_option("--n-train", sim_n_train, "Training draw size");
    sim_cmd->add_option("--n-calib", sim_n_calib, "Calibration draw size");
    sim_cmd->add_option("--n-test", sim_n_test, "Test draw size");
    sim_cmd->add_option("--epsilon-mode", sim_eps_mode,
                        "theoretical|practical|fixed");
    sim_cmd->add_option("--practical-ref", sim_practical_ref,
                        "smallest_cell|positive_labels");
    sim_cmd->add_option("--epsilon-fixed", sim_eps_fixed,
                        "Slack value for fixed mode");
    sim_cmd->add_option("--seed", sim_seed, "Root seed");
    sim_cmd->add_option("--threads", sim_threads,
                        "Worker threads (0 = hardware)");
    sim_cmd->add_option("--bayes-mc", sim_bayes_mc,
                        "Oracle reference draw size (0 disables)");
    sim_cmd->add_option("--out-json", sim_out_json, "Report JSON path");
    sim_cmd->add_option("--out-csv", sim_out_csv, "Report CSV path");

    // ---------- tradeoff ----------
    auto* trade_cmd = app.add_subcommand(
        "tradeoff", "Accuracy/unfairness sweep over an alpha grid");
    std::string tr_fixture, tr_config;
    std::string tr_notion = "eoo";
    std::vector<std::string> tr_scenarios{"aware", "blind"};
    double tr_alpha_min = 0.02, tr_alpha_max = 0.3;
    int tr_alpha_steps = 15;
    double tr_delta = 0.1;
    int tr_reps = 50;
    std::size_t tr_n_train = 1000, tr_n_calib = 1000, tr_n_test = 20000;
    std::string tr_eps_mode = "practical";
    std::string tr_practical_ref = "smallest_cell";
    double tr_eps_fixed = 0.0;
    std::uint64_t tr_seed = 1;
    int tr_threads = 0;
    std::size_t tr_bayes_mc = 200000;
    std::string tr_out_json, tr_out_csv;
    trade_cmd->add_option("--config", tr_config,
                          "JSON config file (flags override)");
    trade_cmd->add_option("--fixture", tr_fixture, "Oracle fixture path");
    trade_cmd->add_option("--notion", tr_notion, "dp|eoo|oae|pe|eo");
    trade_cmd->add_option("--scenario", tr_scenarios,
                          "aware and/or blind (repeatable)");
    trade_cmd->add_option("--alpha-min", tr_alpha_min, "Grid start");
    trade_cmd->add_option("--alpha-max", tr_alpha_max, "Grid end");
    trade_cmd->add_option("--alpha-steps", tr_alpha_steps, "Grid size");
    trade_cmd->add_option("--delta", tr_delta, "Failure budget delta");
    trade_cmd->add_option("--reps", tr_reps, "Repetitions per grid point");
    trade_cmd->add_option("--n-train", tr_n_train, "Training draw size");
    trade_cmd->add_option("--n-calib", tr_n_calib, "Calibration draw size");
    trade_cmd->add_option("--n-test", tr_n_test, "Test draw size");
    trade_cmd->add_option("--epsilon-mode", tr_eps_mode,
                          "theoretical|practical|fixed");
    trade_cmd->add_option("--practical-ref", tr_practical_ref,
                          "smallest_cell|positive_labels");
    trade_cmd->add_option("--epsilon-fixed", tr_eps_fixed,
                          "Slack value for fixed mode");
    trade_cmd->add_option("--seed", tr_seed, "Root seed");
    trade_cmd->add_option("--threads", tr_threads,
                          "Worker threads (0 = hardware)");
    trade_cmd->add_option("--bayes-mc", tr_bayes_mc,
                          "Oracle reference draw size (0 disables)");
    trade_cmd->add_option("--out-json", tr_out_json, "Report JSON path");
    trade_cmd->add_option("--out-csv", tr_out_csv, "Report CSV path");

    // ---------- fit ----------
    auto* fit_cmd = app.add_subcommand(
        "fit", "Calibrate a fair classifier on a calibration CSV");
    std::string fit_config, fit_calib, fit_train, fit_model, fit_save_model;
    std::string fit_out = "classifier.json";
    std::string fit_notion = "eoo", fit_scenario = "aware";
    double fit_alpha = 0.1, fit_delta = 0.1;
    std::string fit_eps_mode = "theoretical";
    std::string fit_practical_ref = "smallest_cell";
    double fit_eps_fixed = 0.0;
    double fit_eps_eta = 1e-10, fit_eps_phi = 1e-10;
    fit_cmd->add_option("--config", fit_config,
                        "JSON config file (flags override)");
    fit_cmd->add_option("--calib", fit_calib, "Calibration CSV (x1..xd,a,y)");
    fit_cmd->add_option("--train", fit_train,
                        "Training CSV to fit the logit estimator on");
    fit_cmd->add_option("--model", fit_model,
                        "Previously saved logit model JSON");
    fit_cmd->add_option("--save-model", fit_save_model,
                        "Write the fitted logit model here (with --train)");
    fit_cmd->add_option("--notion", fit_notion, "dp|eoo|oae|pe|eo");
    fit_cmd->add_option("--scenario", fit_scenario, "aware|blind");
    fit_cmd->add_option("--alpha", fit_alpha, "Unfairness level");
    fit_cmd->add_option("--delta", fit_delta, "Failure budget delta");
    fit_cmd->add_option("--epsilon-mode", fit_eps_mode,
                        "theoretical|practical|fixed");
    fit_cmd->add_option("--practical-ref", fit_practical_ref,
                        "smallest_cell|positive_labels");
    fit_cmd->add_option("--epsilon-fixed", fit_eps_fixed,
                        "Slack value for fixed mode");
    fit_cmd->add_option("--eps-eta", fit_eps_eta,
                        "Tie nudge added to eta when 2*eta == 1");
    fit_cmd->add_option("--eps-phi", fit_eps_phi,
                        "Tie nudge added to phi when phi == 0");
    fit_cmd->add_option("--out", fit_out, "Classifier output path");

    // ---------- predict ----------
    auto* pred_cmd = app.add_subcommand(
        "predict", "Predict with a saved classifier on a CSV");
    std::string pred_classifier, pred_data, pred_out;
    pred_cmd->add_option("--classifier", pred_classifier,
                         "Saved classifier JSON")
        ->required();
    pred_cmd->add_option("--data", pred_data, "Input CSV (x1..xd,a,y)")
        ->required();
    pred_cmd->add_option("--out", pred_out,
                         "Prediction CSV path (default: stdout)");

    // ---------- evaluate ----------
    auto* eval_cmd = app.add_subcommand(
        "evaluate", "Evaluate a saved classifier's error and unfairness");
    std::string eval_classifier, eval_data, eval_out;
    eval_cmd->add_option("--classifier", eval_classifier,
                         "Saved classifier JSON")
        ->required();
    eval_cmd->add_option("--data", eval_data, "Evaluation CSV (x1..xd,a,y)")
        ->required();
    eval_cmd->add_option("--out", eval_out,
                         "Result JSON path (default: stdout)");

    // ---------- oracle-lambda ----------
    auto* ol_cmd = app.add_subcommand(
        "oracle-lambda", "Population-optimal shift for an oracle fixture");
    std::string ol_fixture;
    std::string ol_notion = "eoo", ol_scenario = "aware";
    std::vector<double> ol_alphas;
    std::size_t ol_mc = 200000;
    std::uint64_t ol_seed = 1;
    std::string ol_out;
    ol_cmd->add_option("--fixture", ol_fixture, "Oracle fixture path")
        ->required();
    ol_cmd->add_option("--notion", ol_notion, "dp|eoo|oae|pe|eo");
    ol_cmd->add_option("--scenario", ol_scenario, "aware|blind");
    ol_cmd->add_option("--alpha", ol_alphas, "Unfairness levels")->required();
    ol_cmd->add_option("--mc", ol_mc, "Monte Carlo draw size");
    ol_cmd->add_option("--seed", ol_seed, "Draw seed");
    ol_cmd->add_option("--out", ol_out, "Output JSON path (default: stdout)");

    // ---------- real ----------
    auto* real_cmd = app.add_subcommand(
        "real", "Repetition study on manifest-described tabular data");
    std::string re_config, re_data, re_manifest;
    std::string re_notion = "eoo";
    std::vector<std::string> re_scenarios{"aware", "blind"};
    std::vector<double> re_alphas{0.1};
    double re_delta = 0.1;
    int re_reps = 100;
    double re_train_frac = 0.4, re_calib_frac = 0.4;
    std::string re_eps_mode = "practical";
    std::string re_practical_ref = "smallest_cell";
    double re_eps_fixed = 0.0;
    std::uint64_t re_seed = 1;
    int re_threads = 0;
    std::string re_out_json, re_out_csv;
    real_cmd->add_option("--config", re_config,
                         "JSON config file (flags override)");
    real_cmd->add_option("--data", re_data, "Input CSV");
    real_cmd->add_option("--manifest", re_manifest, "Column manifest JSON");
    real_cmd->add_option("--notion", re_notion, "dp|eoo|oae|pe|eo");
    real_cmd->add_option("--scenario", re_scenarios,
                         "aware and/or blind (repeatable)");
    real_cmd->add_option("--alpha", re_alphas, "Unfairness levels");
    real_cmd->add_option("--delta", re_delta, "Failure budget delta");
    real_cmd->add_option("--reps", re_reps, "Number of repetitions");
    real_cmd->add_option("--train-fraction", re_train_frac,
                         "Training split fraction");
    real_cmd->add_option("--calib-fraction", re_calib_frac,
                         "Calibration split fraction (rest is test)");
    real_cmd->add_option("--epsilon-mode", re_eps_mode,
                         "theoretical|practical|fixed");
    real_cmd->add_option("--practical-ref", re_practical_ref,
                         "smallest_cell|positive_labels");
    real_cmd->add_option("--epsilon-fixed", re_eps_fixed,
                         "Slack value for fixed mode");
    real_cmd->add_option("--seed", re_seed, "Root seed");
    real_cmd->add_option("--threads", re_threads,
                         "Worker threads (0 = hardware)");
    real_cmd->add_option("--out-json", re_out_json, "Report JSON path");
    real_cmd->add_option("--out-csv", re_out_csv, "Report CSV path");

    // ---------- backend ----------
    auto* backend_cmd = app.add_subcommand(
        "backend", "Print the active compute kernel backend");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fixture_cmd->parsed()) {
            const fairpost::oracle::OracleModel model =
                fairpost::oracle::make_fixture(
                    fx_d, fx_sep,
                    fairpost::oracle::noise_from_string(fx_noise), fx_dof,
                    fx_seed);
            fairpost::oracle::save_fixture(model, fx_out);
            std::printf("wrote %s\n", fx_out.c_str());
            return 0;
        }

        if (backend_cmd->parsed()) {
            std::printf("%s\n", fairpost::kernels::active_backend());
            return 0;
        }

        if (sim_cmd->parsed() || trade_cmd->parsed()) {
            const bool is_sim = sim_cmd->parsed();
            CLI::App* cmd = is_sim ? sim_cmd : trade_cmd;
            const json cfg = load_config(is_sim ? sim_config : tr_config);
            fairpost::bench::SimConfig config;
            const std::string fixture =
                pick(cmd, "--fixture", is_sim ? sim_fixture : tr_fixture, cfg,
                     "fixture");
            if (fixture.empty())
                throw fairpost::ValidationError("--fixture is required");
            config.model = fairpost::oracle::load_fixture(fixture);
            config.notion = fairpost::notion_from_string(
                pick(cmd, "--notion", is_sim ? sim_notion : tr_notion, cfg,
                     "notion"));
            config.scenarios = parse_scenarios(
                pick(cmd, "--scenario", is_sim ? sim_scenarios : tr_scenarios,
                     cfg, "scenario"));
            if (is_sim) {
                config.alphas = pick(cmd, "--alpha", sim_alphas, cfg, "alpha");
            } else {
                const double lo =
                    pick(cmd, "--alpha-min", tr_alpha_min, cfg, "alpha_min");
                const double hi =
                    pick(cmd, "--alpha-max", tr_alpha_max, cfg, "alpha_max");
                const int steps = pick(cmd, "--alpha-steps", tr_alpha_steps,
                                       cfg, "alpha_steps");
                if (steps < 2 || !(lo > 0.0) || !(hi > lo))
                    throw fairpost::ValidationError(
                        "alpha grid needs 0 < min < max and >= 2 steps");
                config.alphas.clear();
                for (int i = 0; i < steps; ++i)
                    config.alphas.push_back(
                        lo + (hi - lo) * static_cast<double>(i) /
                                 static_cast<double>(steps - 1));
            }
            config.delta_post =
                pick(cmd, "--delta", is_sim ? sim_delta : tr_delta, cfg,
                     "delta");
            config.reps =
                pick(cmd, "--reps", is_sim ? sim_reps : tr_reps, cfg, "reps");
            config.n_train = pick(cmd, "--n-train",
                                  is_sim ? sim_n_train : tr_n_train, cfg,
                                  "n_train");
            config.n_calib = pick(cmd, "--n-calib",
                                  is_sim ? sim_n_calib : tr_n_calib, cfg,
                                  "n_calib");
            config.n_test = pick(cmd, "--n-test",
                                 is_sim ? sim_n_test : tr_n_test, cfg,
                                 "n_test");
            config.epsilon = parse_epsilon(
                pick(cmd, "--epsilon-mode", is_sim ? sim_eps_mode : tr_eps_mode,
                     cfg, "epsilon_mode"),
                pick(cmd, "--practical-ref",
                     is_sim ? sim_practical_ref : tr_practical_ref, cfg,
                     "practical_ref"),
                pick(cmd, "--epsilon-fixed",
                     is_sim ? sim_eps_fixed : tr_eps_fixed, cfg,
                     "epsilon_fixed"));
            config.seed =
                pick(cmd, "--seed", is_sim ? sim_seed : tr_seed, cfg, "seed");
            config.threads = pick(cmd, "--threads",
                                  is_sim ? sim_threads : tr_threads, cfg,
                                  "threads");
            config.bayes_mc = pick(cmd, "--bayes-mc",
                                   is_sim ? sim_bayes_mc : tr_bayes_mc, cfg,
                                   "bayes_mc");
            const fairpost::bench::SimReport report =
                fairpost::bench::run_simulation(config);
            echo_config(report.config_echo);
            print_report_summary(report);
            const std::string out_json =
                is_sim ? sim_out_json : tr_out_json;
            const std::string out_csv = is_sim ? sim_out_csv : tr_out_csv;
            if (!out_json.empty())
                fairpost::bench::write_report_json(report, out_json);
            if (!out_csv.empty())
                fairpost::bench::write_report_csv(report, out_csv);
            return 0;
        }

        if (fit_cmd->parsed()) {
            const json cfg = load_config(fit_config);
            const std::string calib_path =
                pick(fit_cmd, "--calib", fit_calib, cfg, "calib");
            const std::string train_path =
                pick(fit_cmd, "--train", fit_train, cfg, "train");
            const std::string model_path =
                pick(fit_cmd, "--model", fit_model, cfg, "model");
            const std::string save_model_path = pick(
                fit_cmd, "--save-model", fit_save_model, cfg, "save_model");
            const std::string out_path =
                pick(fit_cmd, "--out", fit_out, cfg, "out");
            fairpost::FairnessSpec spec;
            spec.notion = fairpost::notion_from_string(
                pick(fit_cmd, "--notion", fit_notion, cfg, "notion"));
            spec.scenario = fairpost::scenario_from_string(
                pick(fit_cmd, "--scenario", fit_scenario, cfg, "scenario"));
            spec.alpha = pick(fit_cmd, "--alpha", fit_alpha, cfg, "alpha");
            spec.delta_post =
                pick(fit_cmd, "--delta", fit_delta, cfg, "delta");
            spec.epsilon = parse_epsilon(
                pick(fit_cmd, "--epsilon-mode", fit_eps_mode, cfg,
                     "epsilon_mode"),
                pick(fit_cmd, "--practical-ref", fit_practical_ref, cfg,
                     "practical_ref"),
                pick(fit_cmd, "--epsilon-fixed", fit_eps_fixed, cfg,
                     "epsilon_fixed"));
            spec.validate();
            const double eps_eta =
                pick(fit_cmd, "--eps-eta", fit_eps_eta, cfg, "eps_eta");
            const double eps_phi =
                pick(fit_cmd, "--eps-phi", fit_eps_phi, cfg, "eps_phi");
            if (calib_path.empty())
                throw fairpost::ValidationError("--calib is required");
            if (model_path.empty() == train_path.empty())
                throw fairpost::ValidationError(
                    "exactly one of --model or --train is required");
            if (!save_model_path.empty() && train_path.empty())
                throw fairpost::ValidationError(
                    "--save-model requires --train");

            json echo;
            echo["calib"] = calib_path;
            echo["notion"] = fairpost::to_string(spec.notion);
            echo["scenario"] = fairpost::to_string(spec.scenario);
            echo["alpha"] = spec.alpha;
            echo["delta"] = spec.delta_post;
            echo["epsilon_mode"] =
                fairpost::serialize::to_string(spec.epsilon.mode);
            echo["out"] = out_path;
            if (!train_path.empty()) echo["train"] = train_path;
            if (!model_path.empty()) echo["model"] = model_path;
            echo_config(echo);

            const fairpost::Dataset calib =
                fairpost::read_dataset_csv(calib_path);
            std::shared_ptr<const fairpost::LogitModel> model;
            if (!model_path.empty()) {
                model = std::make_shared<const fairpost::LogitModel>(
                    fairpost::serialize::load_model(model_path));
            } else {
                const fairpost::Dataset train =
                    fairpost::read_dataset_csv(train_path);
                model = std::make_shared<const fairpost::LogitModel>(
                    fairpost::fit_multinomial_logit(train, {}));
                if (!save_model_path.empty())
                    fairpost::serialize::save_model(*model, save_model_path);
            }
            if (model->d != calib.d())
                throw fairpost::ValidationError(
                    "model and calibration dimensions differ");
            if (model->k_groups != calib.k_groups())
                throw fairpost::ValidationError(
                    "model and calibration group counts differ");

            const int k = calib.k_groups();
            const bool grouped =
                spec.notion == fairpost::Notion::EqualizedOdds || k > 2;
            fairpost::BinaryFitResult fit;
            if (grouped) {
                fairpost::EtaFn eta = fairpost::make_eta(model, spec.scenario);
                if (eps_eta != 0.0) {
                    fairpost::EtaFn base = eta;
                    eta = [base, eps_eta](std::span<const double> x, int a) {
                        const double e = base(x, a);
                        return 2.0 * e == 1.0 ? e + eps_eta : e;
                    };
                }
                fit = fairpost::fit_multiclass(
                    calib, eta,
                    fairpost::make_phi_vec(model, spec.notion, spec.scenario),
                    spec);
            } else {
                auto [eta, phi] = fairpost::enforce_general_position(
                    fairpost::make_eta(model, spec.scenario),
                    fairpost::make_phi(model, spec.notion, spec.scenario),
                    eps_eta, eps_phi);
                fit = fairpost::fit_binary(calib, eta, phi, spec);
            }

            fairpost::serialize::ClassifierPackage package;
            package.classifier = fit.classifier;
            package.epsilon_policy = spec.epsilon;
            package.estimator_kind = "logit";
            package.logit = model;
            fairpost::serialize::save_classifier(package, out_path);

            json result;
            result["s_hat"] = fit.report.s_hat;
            result["lambda"] = fit.report.lambda;
            result["epsilon_alpha"] = fit.report.epsilon_alpha;
            result["threshold"] = fit.report.threshold;
            result["constraint_value"] = fit.report.constraint_value;
            result["empirical_error"] = fit.report.empirical_error;
            result["candidates_evaluated"] = fit.report.candidates_evaluated;
            result["classifier"] = out_path;
            std::printf("%s\n", result.dump(2).c_str());
            return 0;
        }

        if (pred_cmd->parsed()) {
            const fairpost::serialize::ClassifierPackage package =
                fairpost::serialize::load_classifier(pred_classifier);
            const fairpost::Dataset data =
                fairpost::read_dataset_csv(pred_data);
            const std::vector<std::uint8_t> preds =
                package.classifier.predict(data);
            FILE* out = stdout;
            if (!pred_out.empty()) {
                out = std::fopen(pred_out.c_str(), "w");
                if (out == nullptr)
                    throw fairpost::DataError("cannot write file: " +
                                              pred_out);
            }
            std::fprintf(out, "prediction\n");
            for (std::uint8_t p : preds) std::fprintf(out, "%d\n", p);
            if (out != stdout) std::fclose(out);
            return 0;
        }

        if (eval_cmd->parsed()) {
            const fairpost::serialize::ClassifierPackage package =
                fairpost::serialize::load_classifier(eval_classifier);
            const fairpost::Dataset data =
                fairpost::read_dataset_csv(eval_data);
            const std::vector<std::uint8_t> preds =
                package.classifier.predict(data);
            std::size_t wrong = 0;
            for (std::size_t i = 0; i < data.n(); ++i)
                wrong += preds[i] != static_cast<std::uint8_t>(data.y(i));
            const fairpost::ConditionalMeanSpec spec =
                package.classifier.multi_component()
                    ? fairpost::notion_spec_multiclass(
                          package.classifier.notion, data.k_groups())
                    : fairpost::notion_spec(package.classifier.notion,
                                            data.k_groups());
            const double unfairness =
                fairpost::empirical_unfairness(spec, preds, data);
            json result;
            result["n"] = data.n();
            result["error"] =
                static_cast<double>(wrong) / static_cast<double>(data.n());
            result["unfairness"] = unfairness;
            result["alpha"] = package.classifier.alpha;
            result["within_alpha"] = unfairness <= package.classifier.alpha;
            if (eval_out.empty())
                std::printf("%s\n", result.dump(2).c_str());
            else
                fairpost::serialize::write_json_file(result, eval_out);
            return 0;
        }

        if (ol_cmd->parsed()) {
            const fairpost::oracle::OracleModel model =
                fairpost::oracle::load_fixture(ol_fixture);
            const fairpost::Notion notion =
                fairpost::notion_from_string(ol_notion);
            const fairpost::Scenario scenario =
                fairpost::scenario_from_string(ol_scenario);
            json result;
            result["kind"] = "oracle-lambda";
            result["notion"] = ol_notion;
            result["scenario"] = ol_scenario;
            result["mc"] = ol_mc;
            result["seed"] = ol_seed;
            json points = json::array();
            if (notion == fairpost::Notion::EqualizedOdds) {
                for (double alpha : ol_alphas) {
                    const fairpost::oracle::VectorHingeSolution sol =
                        fairpost::oracle::bayes_lambda_vec(
                            model, notion, scenario, alpha, ol_mc, ol_seed);
                    json p;
                    p["alpha"] = alpha;
                    p["lambda"] = sol.lambda;
                    p["objective"] = sol.objective;
                    points.push_back(std::move(p));
                }
            } else {
                const std::vector<fairpost::oracle::LambdaPoint> curve =
                    fairpost::oracle::lambda_curve(model, notion, scenario,
                                                   ol_alphas, ol_mc, ol_seed);
                for (const auto& pt : curve) {
                    json p;
                    p["alpha"] = pt.alpha;
                    p["lambda"] = pt.lambda;
                    p["objective"] = pt.objective;
                    points.push_back(std::move(p));
                }
            }
            result["points"] = std::move(points);
            if (ol_out.empty())
                std::printf("%s\n", result.dump(2).c_str());
            else
                fairpost::serialize::write_json_file(result, ol_out);
            return 0;
        }

        if (real_cmd->parsed()) {
            const json cfg = load_config(re_config);
            fairpost::bench::RealConfig config;
            config.csv_path = pick(real_cmd, "--data", re_data, cfg, "data");
            config.manifest_path =
                pick(real_cmd, "--manifest", re_manifest, cfg, "manifest");
            config.notion = fairpost::notion_from_string(
                pick(real_cmd, "--notion", re_notion, cfg, "notion"));
            config.scenarios = parse_scenarios(
                pick(real_cmd, "--scenario", re_scenarios, cfg, "scenario"));
            config.alphas =
                pick(real_cmd, "--alpha", re_alphas, cfg, "alpha");
            config.delta_post =
                pick(real_cmd, "--delta", re_delta, cfg, "delta");
            config.reps = pick(real_cmd, "--reps", re_reps, cfg, "reps");
            config.train_fraction = pick(real_cmd, "--train-fraction",
                                         re_train_frac, cfg,
                                         "train_fraction");
            config.calib_fraction = pick(real_cmd, "--calib-fraction",
                                         re_calib_frac, cfg,
                                         "calib_fraction");
            config.epsilon = parse_epsilon(
                pick(real_cmd, "--epsilon-mode", re_eps_mode, cfg,
                     "epsilon_mode"),
                pick(real_cmd, "--practical-ref", re_practical_ref, cfg,
                     "practical_ref"),
                pick(real_cmd, "--epsilon-fixed", re_eps_fixed, cfg,
                     "epsilon_fixed"));
            config.seed = pick(real_cmd, "--seed", re_seed, cfg, "seed");
            config.threads =
                pick(real_cmd, "--threads", re_threads, cfg, "threads");
            const fairpost::bench::SimReport report =
                fairpost::bench::run_real(config);
            echo_config(report.config_echo);
            print_report_summary(report);
            if (!re_out_json.empty())
                fairpost::bench::write_report_json(report, re_out_json);
            if (!re_out_csv.empty())
                fairpost::bench::write_report_csv(report, re_out_csv);
            return 0;
        }
    } catch (const fairpost::InfeasibleError& e) {
        std::fprintf(stderr,
                     "infeasible: %s (best achievable constraint value: "
                     "%.6g)\n",
                     e.what(), e.min_achievable);
        return 2;
    } catch (const fairpost::ValidationError& e) {
        std::fprintf(stderr, "invalid: %s\n", e.what());
        return 1;
    } catch (const fairpost::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
