#include "fairpost/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>

#include "fairpost/calibrate.hpp"
#include "fairpost/parallel.hpp"
#include "fairpost/rng.hpp"
#include "fairpost/serialize.hpp"
#include "fairpost/unfairness.hpp"

namespace fairpost::bench {

namespace {

void validate_common(const std::vector<Scenario>& scenarios,
                     const std::vector<double>& alphas, double delta,
                     int reps) {
    if (scenarios.empty()) throw ValidationError("no scenarios requested");
    if (alphas.empty()) throw ValidationError("no alpha levels requested");
    for (double a : alphas)
        if (!(a > 0.0)) throw ValidationError("alpha levels must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw ValidationError("delta must be in (0,1)");
    if (reps < 1) throw ValidationError("reps must be >= 1");
}

struct FitEval {
    bool feasible = false;
    double error = 0.0;
    double unfairness = 0.0;
    double lambda_summary = 0.0;  // signed lambda, or l1 norm when grouped
    double epsilon = 0.0;
};

// One calibrate-and-evaluate pass. Grouped representations are used for
// equalized odds and whenever the data has more than two groups; the
// single-component scan covers the rest.
FitEval fit_and_eval(const Dataset& calib, const Dataset& test,
                     const std::shared_ptr<const LogitModel>& model,
                     Notion notion, Scenario scenario, double alpha,
                     double delta, const EpsilonPolicy& epsilon,
                     double eps_eta, double eps_phi) {
    FairnessSpec spec;
    spec.notion = notion;
    spec.scenario = scenario;
    spec.alpha = alpha;
    spec.delta_post = delta;
    spec.epsilon = epsilon;

    const int k = calib.k_groups();
    const bool grouped = notion == Notion::EqualizedOdds || k > 2;
    FitEval out;
    try {
        BinaryFitResult fit;
        if (grouped) {
            EtaFn eta = make_eta(model, scenario);
            if (eps_eta != 0.0) {
                EtaFn base = eta;
                const double nudge = eps_eta;
                eta = [base, nudge](std::span<const double> x, int a) {
                    const double e = base(x, a);
                    return 2.0 * e == 1.0 ? e + nudge : e;
                };
            }
            fit = fit_multiclass(calib, eta,
                                 make_phi_vec(model, notion, scenario), spec);
        } else {
            auto [eta, phi] = enforce_general_position(
                make_eta(model, scenario), make_phi(model, notion, scenario),
                eps_eta, eps_phi);
            fit = fit_binary(calib, eta, phi, spec);
        }
        const std::vector<std::uint8_t> preds = fit.classifier.predict(test);
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < test.n(); ++i)
            wrong += preds[i] != static_cast<std::uint8_t>(test.y(i));
        out.feasible = true;
        out.error = static_cast<double>(wrong) / static_cast<double>(test.n());
        const ConditionalMeanSpec mean_spec =
            grouped ? notion_spec_multiclass(notion, k)
                    : notion_spec(notion, k);
        out.unfairness = empirical_unfairness(mean_spec, preds, test);
        if (grouped) {
            for (double l : fit.classifier.lambda)
                out.lambda_summary += std::abs(l);
        } else {
            out.lambda_summary = fit.classifier.lambda.front();
        }
        out.epsilon = fit.report.epsilon_alpha;
    } catch (const InfeasibleError&) {
        out.feasible = false;
    }
    return out;
}

std::vector<SimCell> aggregate(const std::vector<Scenario>& scenarios,
                               const std::vector<double>& alphas,
                               const std::vector<std::vector<FitEval>>& slots,
                               int reps) {
    std::vector<SimCell> cells;
    const std::size_t n_alpha = alphas.size();
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        for (std::size_t ai = 0; ai < n_alpha; ++ai) {
            SimCell cell;
            cell.scenario = scenarios[s];
            cell.alpha = alphas[ai];
            cell.reps_total = reps;
            std::vector<double> errors, unfairs;
            double eps_sum = 0.0, lambda_sum = 0.0;
            int exceed = 0;
            for (int r = 0; r < reps; ++r) {
                const FitEval& e = slots[static_cast<std::size_t>(r)]
                                        [s * n_alpha + ai];
                if (!e.feasible) {
                    ++cell.reps_infeasible;
                    continue;
                }
                ++cell.reps_feasible;
                errors.push_back(e.error);
                unfairs.push_back(e.unfairness);
                eps_sum += e.epsilon;
                lambda_sum += e.lambda_summary;
                if (e.unfairness > cell.alpha) ++exceed;
            }
            const std::size_t m = errors.size();
            if (m > 0) {
                auto mean_se = [m](const std::vector<double>& v, double* se) {
                    double mean = 0.0;
                    for (double x : v) mean += x;
                    mean /= static_cast<double>(m);
                    double var = 0.0;
                    for (double x : v) var += (x - mean) * (x - mean);
                    var = m > 1 ? var / static_cast<double>(m - 1) : 0.0;
                    *se = std::sqrt(var / static_cast<double>(m));
                    return mean;
                };
                cell.error_mean = mean_se(errors, &cell.error_se);
                cell.unfairness_mean = mean_se(unfairs, &cell.unfairness_se);
                std::vector<double> sorted = unfairs;
                std::sort(sorted.begin(), sorted.end());
                const std::size_t rank = static_cast<std::size_t>(
                    std::ceil(0.95 * static_cast<double>(m)));
                cell.unfairness_q95 = sorted[rank - 1];
                cell.exceed_alpha_fraction =
                    static_cast<double>(exceed) / static_cast<double>(m);
                cell.epsilon_mean = eps_sum / static_cast<double>(m);
                cell.lambda_mean = lambda_sum / static_cast<double>(m);
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace

void SimConfig::validate() const {
    model.validate();
    validate_common(scenarios, alphas, delta_post, reps);
    if (n_train < 1 || n_calib < 1 || n_test < 1)
        throw ValidationError("split sizes must be >= 1");
}

SimReport run_simulation(const SimConfig& config) {
    config.validate();
    const std::size_t per_rep = config.scenarios.size() * config.alphas.size();
    std::vector<std::vector<FitEval>> slots(
        static_cast<std::size_t>(config.reps), std::vector<FitEval>(per_rep));

    parallel_for(
        static_cast<std::size_t>(config.reps),
        [&](std::size_t rep) {
            const std::uint64_t rep_seed = rng::derive(config.seed, rep + 1);
            const Dataset train = oracle::sample(config.model, config.n_train,
                                                 rng::derive(rep_seed, 1));
            const Dataset calib = oracle::sample(config.model, config.n_calib,
                                                 rng::derive(rep_seed, 2));
            const Dataset test = oracle::sample(config.model, config.n_test,
                                                rng::derive(rep_seed, 3));
            const auto model = std::make_shared<const LogitModel>(
                fit_multinomial_logit(train, config.logit));
            for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
                for (std::size_t ai = 0; ai < config.alphas.size(); ++ai) {
                    slots[rep][s * config.alphas.size() + ai] = fit_and_eval(
                        calib, test, model, config.notion,
                        config.scenarios[s], config.alphas[ai],
                        config.delta_post, config.epsilon, config.eps_eta,
                        config.eps_phi);
                }
            }
        },
        config.threads);

    SimReport report;
    report.cells =
        aggregate(config.scenarios, config.alphas, slots, config.reps);

    if (config.bayes_mc > 0 && config.notion != Notion::EqualizedOdds) {
        for (Scenario sc : config.scenarios) {
            for (double alpha : config.alphas) {
                const oracle::RiskReport r = oracle::bayes_risk(
                    config.model, config.notion, sc, alpha, config.bayes_mc,
                    rng::derive(config.seed, 0x0bae5ULL));
                report.bayes.push_back(
                    {sc, alpha, r.risk, r.std_error, r.unfairness, r.lambda});
            }
        }
    }

    nlohmann::json echo;
    echo["model"] = serialize::oracle_to_json(config.model);
    echo["notion"] = to_string(config.notion);
    nlohmann::json scen = nlohmann::json::array();
    for (Scenario s : config.scenarios) scen.push_back(to_string(s));
    echo["scenarios"] = std::move(scen);
    echo["alphas"] = config.alphas;
    echo["delta_post"] = config.delta_post;
    echo["reps"] = config.reps;
    echo["n_train"] = config.n_train;
    echo["n_calib"] = config.n_calib;
    echo["n_test"] = config.n_test;
    echo["epsilon_mode"] = serialize::to_string(config.epsilon.mode);
    echo["epsilon_practical_ref"] =
        serialize::to_string(config.epsilon.practical_ref);
    echo["epsilon_fixed_value"] = config.epsilon.fixed_value;
    echo["seed"] = config.seed;
    echo["bayes_mc"] = config.bayes_mc;
    report.config_echo = std::move(echo);
    return report;
}

void RealConfig::validate() const {
    validate_common(scenarios, alphas, delta_post, reps);
    if (!(train_fraction > 0.0) || !(calib_fraction > 0.0) ||
        !(train_fraction + calib_fraction < 1.0))
        throw ValidationError(
            "train and calibration fractions must be positive and sum to "
            "less than 1");
    if (csv_path.empty() || manifest_path.empty())
        throw ValidationError("csv and manifest paths are required");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Field values like ">50K." (a trailing period) are treated as ">50K".
std::string strip_trailing_dot(const std::string& s) {
    if (!s.empty() && s.back() == '.') return s.substr(0, s.size() - 1);
    return s;
}

struct ColumnSpec {
    std::string name;
    std::string role;      // feature | group | label | ignore
    std::string encoding;  // numeric | categorical (features only)
    std::map<std::string, int> levels;  // group role
    std::string positive;               // label role
};

double parse_number(const std::string& field, const std::string& column,
                    std::size_t row) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size() || !std::isfinite(v))
            throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw DataError("data row " + std::to_string(row) + ": column '" +
                        column + "' is not numeric: " + field);
    }
}

}  // namespace

EncodedTable load_table(const std::string& csv_path,
                        const std::string& manifest_path) {
    const nlohmann::json manifest = serialize::read_json_file(manifest_path);
    std::vector<ColumnSpec> columns;
    char separator = ',';
    bool has_header = false;
    try {
        if (manifest.contains("separator")) {
            const std::string sep = manifest.at("separator").get<std::string>();
            if (sep.size() != 1)
                throw DataError("separator must be a single character");
            separator = sep[0];
        }
        has_header = manifest.value("has_header", false);
        for (const auto& col : manifest.at("columns")) {
            ColumnSpec spec;
            spec.name = col.at("name").get<std::string>();
            spec.role = col.at("role").get<std::string>();
            if (spec.role == "feature")
                spec.encoding = col.at("encoding").get<std::string>();
            else if (spec.role == "group")
                spec.levels =
                    col.at("levels").get<std::map<std::string, int>>();
            else if (spec.role == "label")
                spec.positive = col.at("positive").get<std::string>();
            else if (spec.role != "ignore")
                throw DataError("unknown column role: " + spec.role);
            if (spec.role == "feature" && spec.encoding != "numeric" &&
                spec.encoding != "categorical")
                throw DataError("unknown feature encoding: " + spec.encoding);
            columns.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + manifest_path +
                        " missing fields: " + e.what());
    }
    int group_col = -1, label_col = -1;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].role == "group") {
            if (group_col >= 0)
                throw DataError("manifest has more than one group column");
            group_col = static_cast<int>(c);
        }
        if (columns[c].role == "label") {
            if (label_col >= 0)
                throw DataError("manifest has more than one label column");
            label_col = static_cast<int>(c);
        }
    }
    if (group_col < 0 || label_col < 0)
        throw DataError("manifest needs one group and one label column");
    int k_groups = 0;
    for (const auto& [name, value] : columns[static_cast<std::size_t>(
             group_col)].levels) {
        if (value < 1) throw DataError("group levels must be >= 1");
        k_groups = std::max(k_groups, value);
    }
    if (k_groups < 2) throw DataError("group mapping needs >= 2 levels");

    std::ifstream in(csv_path);
    if (!in) throw DataError("cannot open file: " + csv_path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<std::string>> rows;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && has_header) continue;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        for (char ch : line) {
            if (ch == separator) {
                fields.push_back(trim(field));
                field.clear();
            } else {
                field.push_back(ch);
            }
        }
        fields.push_back(trim(field));
        if (fields.size() != columns.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(columns.size()) + " fields, got " +
                            std::to_string(fields.size()));
        bool missing = false;
        for (const std::string& f : fields) {
            if (f == "?") {
                missing = true;
                break;
            }
        }
        if (missing) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw DataError("no usable rows in " + csv_path);

    // First pass over kept rows: level sets and standardization moments.
    std::vector<std::set<std::string>> level_sets(columns.size());
    std::vector<double> mean(columns.size(), 0.0), m2(columns.size(), 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c].role != "feature") continue;
            if (columns[c].encoding == "categorical") {
                level_sets[c].insert(rows[r][c]);
            } else {
                const double v =
                    parse_number(rows[r][c], columns[c].name, r + 1);
                const double delta = v - mean[c];
                mean[c] += delta / static_cast<double>(r + 1);
                m2[c] += delta * (v - mean[c]);
            }
        }
    }
    std::vector<double> sd(columns.size(), 1.0);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].role == "feature" && columns[c].encoding == "numeric") {
            const double var = m2[c] / static_cast<double>(rows.size());
            sd[c] = var > 0.0 ? std::sqrt(var) : 1.0;
        }
    }

    EncodedTable table;
    int d = 0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].role != "feature") continue;
        if (columns[c].encoding == "numeric") {
            table.feature_names.push_back(columns[c].name);
            ++d;
        } else {
            for (const std::string& level : level_sets[c]) {
                table.feature_names.push_back(columns[c].name + "=" + level);
                ++d;
            }
        }
    }
    table.data = Dataset(d, k_groups);
    table.data.reserve(rows.size());
    table.rows_dropped = dropped;
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::size_t j = 0;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c].role != "feature") continue;
            if (columns[c].encoding == "numeric") {
                const double v =
                    parse_number(rows[r][c], columns[c].name, r + 1);
                x[j++] = (v - mean[c]) / sd[c];
            } else {
                for (const std::string& level : level_sets[c])
                    x[j++] = rows[r][c] == level ? 1.0 : 0.0;
            }
        }
        const std::string group_field =
            strip_trailing_dot(rows[r][static_cast<std::size_t>(group_col)]);
        const auto& levels =
            columns[static_cast<std::size_t>(group_col)].levels;
        const auto it = levels.find(group_field);
        if (it == levels.end())
            throw DataError("row " + std::to_string(r + 1) +
                            ": unknown group level: " + group_field);
        const std::string label_field =
            strip_trailing_dot(rows[r][static_cast<std::size_t>(label_col)]);
        const int y =
            label_field ==
                    columns[static_cast<std::size_t>(label_col)].positive
                ? 1
                : 0;
        table.data.add(x, it->second, y);
    }
    return table;
}

SimReport run_real(const RealConfig& config) {
    config.validate();
    const EncodedTable table = load_table(config.csv_path,
                                          config.manifest_path);
    const std::size_t n = table.data.n();
    const std::size_t n_train =
        static_cast<std::size_t>(config.train_fraction * static_cast<double>(n));
    const std::size_t n_calib =
        static_cast<std::size_t>(config.calib_fraction * static_cast<double>(n));
    if (n_train < 1 || n_calib < 1 || n_train + n_calib >= n)
        throw ValidationError("split fractions leave an empty split");

    const std::size_t per_rep = config.scenarios.size() * config.alphas.size();
    std::vector<std::vector<FitEval>> slots(
        static_cast<std::size_t>(config.reps), std::vector<FitEval>(per_rep));
    parallel_for(
        static_cast<std::size_t>(config.reps),
        [&](std::size_t rep) {
            rng::Stream stream(rng::derive(config.seed, rep + 1));
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            for (std::size_t i = n; i-- > 1;) {
                const std::size_t j = static_cast<std::size_t>(
                    stream.next_u64() % (i + 1));
                std::swap(order[i], order[j]);
            }
            const Dataset train = table.data.subset(
                {order.begin(), order.begin() + static_cast<long>(n_train)});
            const Dataset calib = table.data.subset(
                {order.begin() + static_cast<long>(n_train),
                 order.begin() + static_cast<long>(n_train + n_calib)});
            const Dataset test = table.data.subset(
                {order.begin() + static_cast<long>(n_train + n_calib),
                 order.end()});
            const auto model = std::make_shared<const LogitModel>(
                fit_multinomial_logit(train, config.logit));
            for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
                for (std::size_t ai = 0; ai < config.alphas.size(); ++ai) {
                    slots[rep][s * config.alphas.size() + ai] = fit_and_eval(
                        calib, test, model, config.notion,
                        config.scenarios[s], config.alphas[ai],
                        config.delta_post, config.epsilon, config.eps_eta,
                        config.eps_phi);
                }
            }
        },
        config.threads);

    SimReport report;
    report.cells =
        aggregate(config.scenarios, config.alphas, slots, config.reps);
    nlohmann::json echo;
    echo["csv"] = config.csv_path;
    echo["manifest"] = config.manifest_path;
    echo["rows"] = n;
    echo["rows_dropped"] = table.rows_dropped;
    echo["features"] = table.feature_names.size();
    echo["notion"] = to_string(config.notion);
    nlohmann::json scen = nlohmann::json::array();
    for (Scenario s : config.scenarios) scen.push_back(to_string(s));
    echo["scenarios"] = std::move(scen);
    echo["alphas"] = config.alphas;
    echo["delta_post"] = config.delta_post;
    echo["reps"] = config.reps;
    echo["train_fraction"] = config.train_fraction;
    echo["calib_fraction"] = config.calib_fraction;
    echo["epsilon_mode"] = serialize::to_string(config.epsilon.mode);
    echo["epsilon_practical_ref"] =
        serialize::to_string(config.epsilon.practical_ref);
    echo["epsilon_fixed_value"] = config.epsilon.fixed_value;
    echo["seed"] = config.seed;
    report.config_echo = std::move(echo);
    return report;
}

nlohmann::json report_to_json(const SimReport& report) {
    nlohmann::json j;
    j["kind"] = "fairpost-report";
    j["config"] = report.config_echo;
    nlohmann::json cells = nlohmann::json::array();
    for (const SimCell& c : report.cells) {
        nlohmann::json row;
        row["scenario"] = to_string(c.scenario);
        row["alpha"] = c.alpha;
        row["reps_total"] = c.reps_total;
        row["reps_feasible"] = c.reps_feasible;
        row["reps_infeasible"] = c.reps_infeasible;
        row["epsilon_mean"] = c.epsilon_mean;
        row["error_mean"] = c.error_mean;
        row["error_se"] = c.error_se;
        row["unfairness_mean"] = c.unfairness_mean;
        row["unfairness_se"] = c.unfairness_se;
        row["unfairness_q95"] = c.unfairness_q95;
        row["exceed_alpha_fraction"] = c.exceed_alpha_fraction;
        row["lambda_mean"] = c.lambda_mean;
        cells.push_back(std::move(row));
    }
    j["cells"] = std::move(cells);
    nlohmann::json bayes = nlohmann::json::array();
    for (const BayesRow& b : report.bayes) {
        nlohmann::json row;
        row["scenario"] = to_string(b.scenario);
        row["alpha"] = b.alpha;
        row["risk"] = b.risk;
        row["risk_se"] = b.risk_se;
        row["unfairness"] = b.unfairness;
        row["lambda"] = b.lambda;
        bayes.push_back(std::move(row));
    }
    j["bayes"] = std::move(bayes);
    return j;
}

void write_report_json(const SimReport& report, const std::string& path) {
    serialize::write_json_file(report_to_json(report), path);
}

void write_report_csv(const SimReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    auto join = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out << ',';
            out << fields[i];
        }
        out << '\n';
    };
    join({"row_kind", "scenario", "alpha", "reps_total", "reps_feasible",
          "reps_infeasible", "epsilon_mean", "error_mean", "error_se",
          "unfairness_mean", "unfairness_se", "unfairness_q95",
          "exceed_alpha_fraction", "lambda_mean", "risk", "risk_se",
          "lambda"});
    for (const SimCell& c : report.cells) {
        join({"sim", to_string(c.scenario), num(c.alpha),
              std::to_string(c.reps_total), std::to_string(c.reps_feasible),
              std::to_string(c.reps_infeasible), num(c.epsilon_mean),
              num(c.error_mean), num(c.error_se), num(c.unfairness_mean),
              num(c.unfairness_se), num(c.unfairness_q95),
              num(c.exceed_alpha_fraction), num(c.lambda_mean), "", "", ""});
    }
    for (const BayesRow& b : report.bayes) {
        join({"bayes", to_string(b.scenario), num(b.alpha), "", "", "", "",
              "", "", num(b.unfairness), "", "", "", "", num(b.risk),
              num(b.risk_se), num(b.lambda)});
    }
    if (!out) throw DataError("failed while writing file: " + path);
}

}  // namespace fairpost::bench
