#pragma once

// JSON persistence for estimator models and fitted classifiers. A saved
// classifier embeds the estimator it thresholds (logit model weights or
// oracle fixture), so the file alone is enough to predict with; closures are
// rebuilt from the embedded estimator on load. Numeric fields round-trip
// exactly (shortest-exact double formatting on write).

#include <memory>
#include <string>

#include <json.hpp>

#include "fairpost/core.hpp"
#include "fairpost/estimators.hpp"
#include "fairpost/oracle.hpp"

namespace fairpost::serialize {

std::string to_string(EpsilonMode mode);
EpsilonMode epsilon_mode_from_string(const std::string& s);
std::string to_string(PracticalRef ref);
PracticalRef practical_ref_from_string(const std::string& s);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

// Weight rows follow the cell order (y,a) = (0,1)..(0,K),(1,1)..(1,K), one
// row per cell with the bias last; the order is recorded in the file.
nlohmann::json logit_to_json(const LogitModel& model);
LogitModel logit_from_json(const nlohmann::json& j);
void save_model(const LogitModel& model, const std::string& path);
LogitModel load_model(const std::string& path);

nlohmann::json oracle_to_json(const oracle::OracleModel& model);
oracle::OracleModel oracle_from_json(const nlohmann::json& j);

// A fitted classifier together with the estimator its score functions come
// from. Only notion-derived score representations are reproducible from a
// file, so saving requires the package to carry one of the two estimators.
struct ClassifierPackage {
    FittedFairClassifier classifier;
    EpsilonPolicy epsilon_policy;
    std::string estimator_kind;  // "logit" or "oracle"
    std::shared_ptr<const LogitModel> logit;
    std::shared_ptr<const oracle::OracleModel> oracle_model;

    // Rebuilds classifier.eta and classifier.phi / classifier.phi_vec from
    // the embedded estimator; the single/vector split follows lambda's shape
    // as stored.
    void rebind(bool vector_representation);
};

void save_classifier(const ClassifierPackage& package,
                     const std::string& path);
ClassifierPackage load_classifier(const std::string& path);

}  // namespace fairpost::serialize
