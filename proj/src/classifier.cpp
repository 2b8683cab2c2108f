#include "imbf/classifier.hpp"

#include <algorithm>

#include "imbf/learners/cnn.hpp"
#include "imbf/learners/gbt.hpp"
#include "imbf/learners/gru.hpp"
#include "imbf/learners/linear.hpp"
#include "imbf/learners/tree.hpp"

namespace imbf {

namespace {

const std::vector<std::pair<ClassifierKind, std::string>> kKindNames = {
    {ClassifierKind::decision_tree, "decision_tree"},
    {ClassifierKind::random_forest, "random_forest"},
    {ClassifierKind::logistic, "logistic"},
    {ClassifierKind::linear_svm, "linear_svm"},
    {ClassifierKind::gbt, "gbt"},
    {ClassifierKind::bigru, "bigru"},
    {ClassifierKind::cnn1d, "cnn1d"},
};

}  // namespace

std::string classifier_kind_name(ClassifierKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    throw ConfigError("unknown classifier kind");
}

ClassifierKind classifier_kind_from_name(const std::string& name) {
    for (const auto& [k, n] : kKindNames)
        if (n == name) return k;
    throw ConfigError("unknown classifier kind: '" + name + "'");
}

const std::vector<std::string>& classifier_param_keys(ClassifierKind kind) {
    static const std::map<ClassifierKind, std::vector<std::string>> keys = {
        {ClassifierKind::decision_tree, {"max_depth", "min_leaf"}},
        {ClassifierKind::random_forest,
         {"n_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap"}},
        {ClassifierKind::logistic, {"epochs", "lr", "l2", "batch"}},
        {ClassifierKind::linear_svm, {"epochs", "lr", "reg", "batch"}},
        {ClassifierKind::gbt, {"n_rounds", "eta", "lambda", "alpha", "max_depth", "gamma"}},
        {ClassifierKind::bigru, {"hidden", "epochs", "lr", "batch"}},
        {ClassifierKind::cnn1d, {"filters", "kernel", "epochs", "lr", "batch"}},
    };
    return keys.at(kind);
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("classifier spec must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "kind" && key != "seed" && key != "params")
            throw ConfigError("unknown key in classifier spec: '" + key + "'");
    }
    if (!j.contains("kind")) throw ConfigError("classifier spec missing 'kind'");

    ClassifierSpec spec;
    spec.kind = classifier_kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("params")) {
        const auto& allowed = classifier_param_keys(spec.kind);
        for (const auto& [key, value] : j.at("params").items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                throw ConfigError("unknown hyperparameter '" + key + "' for kind '" +
                                  classifier_kind_name(spec.kind) + "'");
            if (!value.is_number())
                throw ConfigError("hyperparameter '" + key + "' must be numeric");
            spec.params[key] = value.get<double>();
        }
    }
    return spec;
}

nlohmann::json ClassifierSpec::to_json() const {
    nlohmann::json params_json = nlohmann::json::object();
    for (const auto& [k, v] : params) params_json[k] = v;
    return {{"kind", classifier_kind_name(kind)}, {"seed", seed}, {"params", params_json}};
}

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec) {
    switch (spec.kind) {
        case ClassifierKind::decision_tree: return std::make_unique<DecisionTreeModel>(spec);
        case ClassifierKind::random_forest: return std::make_unique<RandomForestModel>(spec);
        case ClassifierKind::logistic: return std::make_unique<LogisticModel>(spec);
        case ClassifierKind::linear_svm: return std::make_unique<LinearSvmModel>(spec);
        case ClassifierKind::gbt: return std::make_unique<GbtModel>(spec);
        case ClassifierKind::bigru: return std::make_unique<BiGruModel>(spec);
        case ClassifierKind::cnn1d: return std::make_unique<Cnn1dModel>(spec);
    }
    throw ConfigError("unknown classifier kind");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
    int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw ConfigError("unsupported model format_version " + std::to_string(version));
    std::string kind = j.at("kind").get<std::string>();
    switch (classifier_kind_from_name(kind)) {
        case ClassifierKind::decision_tree: return DecisionTreeModel::from_json(j);
        case ClassifierKind::random_forest: return RandomForestModel::from_json(j);
        case ClassifierKind::logistic: return logistic_from_json(j);
        case ClassifierKind::linear_svm: return linear_svm_from_json(j);
        case ClassifierKind::gbt: return gbt_from_json(j);
        case ClassifierKind::bigru: return bigru_from_json(j);
        case ClassifierKind::cnn1d: return cnn1d_from_json(j);
    }
    throw ConfigError("unknown model kind: '" + kind + "'");
}

}  // namespace imbf
