#include "fairpost/serialize.hpp"

#include <fstream>

namespace fairpost::serialize {

std::string to_string(EpsilonMode mode) {
    switch (mode) {
        case EpsilonMode::Theoretical: return "theoretical";
        case EpsilonMode::Practical: return "practical";
        case EpsilonMode::Fixed: return "fixed";
    }
    throw ValidationError("unknown epsilon mode");
}

EpsilonMode epsilon_mode_from_string(const std::string& s) {
    if (s == "theoretical") return EpsilonMode::Theoretical;
    if (s == "practical") return EpsilonMode::Practical;
    if (s == "fixed") return EpsilonMode::Fixed;
    throw ValidationError("unknown epsilon mode: " + s);
}

std::string to_string(PracticalRef ref) {
    return ref == PracticalRef::SmallestCell ? "smallest_cell"
                                             : "positive_labels";
}

PracticalRef practical_ref_from_string(const std::string& s) {
    if (s == "smallest_cell") return PracticalRef::SmallestCell;
    if (s == "positive_labels") return PracticalRef::PositiveLabels;
    throw ValidationError("unknown practical reference: " + s);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("failed while writing file: " + path);
}

nlohmann::json logit_to_json(const LogitModel& model) {
    nlohmann::json j;
    j["kind"] = "logit";
    j["d"] = model.d;
    j["k_groups"] = model.k_groups;
    j["cell_order"] = "(y,a) y-major: (0,1)..(0,K),(1,1)..(1,K); bias last";
    const std::size_t stride = static_cast<std::size_t>(model.d) + 1;
    nlohmann::json rows = nlohmann::json::array();
    for (int c = 0; c < model.cells(); ++c) {
        rows.push_back(std::vector<double>(
            model.weights.begin() + c * stride,
            model.weights.begin() + (c + 1) * stride));
    }
    j["weights"] = std::move(rows);
    j["marginals"] = model.marginals.p_cell;
    j["iterations"] = model.iterations;
    j["converged"] = model.converged;
    j["grad_inf_norm"] = model.grad_inf_norm;
    return j;
}

LogitModel logit_from_json(const nlohmann::json& j) {
    LogitModel model;
    try {
        if (j.value("kind", "logit") != std::string("logit"))
            throw DataError("estimator kind is not 'logit'");
        model.d = j.at("d").get<int>();
        model.k_groups = j.at("k_groups").get<int>();
        const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(rows.size()) != model.cells())
            throw DataError("logit weight row count mismatch");
        const std::size_t stride = static_cast<std::size_t>(model.d) + 1;
        for (const auto& row : rows) {
            if (row.size() != stride)
                throw DataError("logit weight row length mismatch");
            model.weights.insert(model.weights.end(), row.begin(), row.end());
        }
        model.marginals.k_groups = model.k_groups;
        model.marginals.p_cell = j.at("marginals").get<std::vector<double>>();
        model.marginals.validate();
        model.iterations = j.value("iterations", 0);
        model.converged = j.value("converged", false);
        model.grad_inf_norm = j.value("grad_inf_norm", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("logit model JSON missing fields: ") +
                        e.what());
    }
    return model;
}

void save_model(const LogitModel& model, const std::string& path) {
    write_json_file(logit_to_json(model), path);
}

LogitModel load_model(const std::string& path) {
    return logit_from_json(read_json_file(path));
}

nlohmann::json oracle_to_json(const oracle::OracleModel& model) {
    model.validate();
    nlohmann::json j;
    j["kind"] = "oracle";
    j["d"] = model.d;
    j["noise"] = oracle::to_string(model.noise);
    j["t_dof"] = model.t_dof;
    j["cell_probs"] = model.cell_probs;
    j["means"] = model.means;
    j["seed"] = model.seed;
    return j;
}

oracle::OracleModel oracle_from_json(const nlohmann::json& j) {
    oracle::OracleModel model;
    try {
        model.d = j.at("d").get<int>();
        model.noise =
            oracle::noise_from_string(j.at("noise").get<std::string>());
        model.t_dof = j.value("t_dof", 3);
        const auto probs = j.at("cell_probs").get<std::vector<double>>();
        if (probs.size() != 4)
            throw DataError("oracle fixture needs exactly 4 cell probabilities");
        std::copy(probs.begin(), probs.end(), model.cell_probs.begin());
        const auto means =
            j.at("means").get<std::vector<std::vector<double>>>();
        if (means.size() != 4)
            throw DataError("oracle fixture needs exactly 4 means");
        for (std::size_t c = 0; c < 4; ++c) model.means[c] = means[c];
        model.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("oracle fixture JSON missing fields: ") +
                        e.what());
    }
    model.validate();
    return model;
}

void ClassifierPackage::rebind(bool vector_representation) {
    const Scenario scenario = classifier.scenario;
    const Notion notion = classifier.notion;
    classifier.phi = nullptr;
    classifier.phi_vec = nullptr;
    if (estimator_kind == "logit") {
        if (!logit) throw ValidationError("package has no logit model");
        classifier.eta = make_eta(logit, scenario);
        if (vector_representation)
            classifier.phi_vec = make_phi_vec(logit, notion, scenario);
        else
            classifier.phi = make_phi(logit, notion, scenario);
        return;
    }
    if (estimator_kind == "oracle") {
        if (!oracle_model) throw ValidationError("package has no oracle model");
        classifier.eta = oracle::true_eta(*oracle_model, scenario);
        if (vector_representation)
            classifier.phi_vec =
                oracle::true_phi_vec(*oracle_model, notion, scenario);
        else
            classifier.phi = oracle::true_phi(*oracle_model, notion, scenario);
        return;
    }
    throw ValidationError("unknown estimator kind: " + estimator_kind);
}

void save_classifier(const ClassifierPackage& package,
                     const std::string& path) {
    const FittedFairClassifier& c = package.classifier;
    nlohmann::json j;
    j["kind"] = "fairpost-classifier";
    j["version"] = 1;
    j["scenario"] = fairpost::to_string(c.scenario);
    j["notion"] = fairpost::to_string(c.notion);
    j["alpha"] = c.alpha;
    j["delta_post"] = c.delta_post;
    nlohmann::json eps;
    eps["value"] = c.epsilon_alpha;
    eps["mode"] = to_string(package.epsilon_policy.mode);
    if (package.epsilon_policy.mode == EpsilonMode::Practical)
        eps["practical_ref"] = to_string(package.epsilon_policy.practical_ref);
    if (package.epsilon_policy.mode == EpsilonMode::Fixed)
        eps["fixed_value"] = package.epsilon_policy.fixed_value;
    j["epsilon_alpha"] = std::move(eps);
    j["s_hat"] = c.s_hat;
    if (c.multi_component()) {
        j["lambda"] = c.lambda;
    } else {
        if (c.lambda.size() != 1)
            throw ValidationError(
                "single-component classifier must have exactly one lambda");
        j["lambda"] = c.lambda.front();
    }
    if (package.estimator_kind == "logit") {
        if (!package.logit)
            throw ValidationError("package has no logit model");
        j["estimator"] = logit_to_json(*package.logit);
    } else if (package.estimator_kind == "oracle") {
        if (!package.oracle_model)
            throw ValidationError("package has no oracle model");
        j["estimator"] = oracle_to_json(*package.oracle_model);
    } else {
        throw ValidationError("unknown estimator kind: " +
                              package.estimator_kind);
    }
    write_json_file(j, path);
}

ClassifierPackage load_classifier(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    ClassifierPackage package;
    bool vector_representation = false;
    try {
        if (j.value("kind", "") != std::string("fairpost-classifier"))
            throw DataError("not a classifier file: " + path);
        FittedFairClassifier& c = package.classifier;
        c.scenario = scenario_from_string(j.at("scenario").get<std::string>());
        c.notion = notion_from_string(j.at("notion").get<std::string>());
        c.alpha = j.at("alpha").get<double>();
        c.delta_post = j.at("delta_post").get<double>();
        const auto& eps = j.at("epsilon_alpha");
        c.epsilon_alpha = eps.at("value").get<double>();
        package.epsilon_policy.mode =
            epsilon_mode_from_string(eps.at("mode").get<std::string>());
        if (eps.contains("practical_ref"))
            package.epsilon_policy.practical_ref =
                practical_ref_from_string(eps.at("practical_ref").get<std::string>());
        if (eps.contains("fixed_value"))
            package.epsilon_policy.fixed_value =
                eps.at("fixed_value").get<double>();
        c.s_hat = j.at("s_hat").get<int>();
        const auto& lam = j.at("lambda");
        if (lam.is_array()) {
            c.lambda = lam.get<std::vector<double>>();
            vector_representation = true;
        } else {
            c.lambda = {lam.get<double>()};
        }
        const auto& est = j.at("estimator");
        package.estimator_kind = est.at("kind").get<std::string>();
        if (package.estimator_kind == "logit")
            package.logit =
                std::make_shared<const LogitModel>(logit_from_json(est));
        else if (package.estimator_kind == "oracle")
            package.oracle_model = std::make_shared<const oracle::OracleModel>(
                oracle_from_json(est));
        else
            throw DataError("unknown estimator kind in " + path);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("classifier JSON missing fields in " + path + ": " +
                        e.what());
    }
    package.rebind(vector_representation);
    return package;
}

}  // namespace fairpost::serialize
