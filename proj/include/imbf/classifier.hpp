#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "imbf/dataset.hpp"

namespace imbf {

inline constexpr int kModelFormatVersion = 1;

// Contract every base learner and meta learner satisfies: fit on a Dataset,
// then map a feature row to a fraud score in [0, 1].
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual void fit(const Dataset& ds) = 0;
    virtual double predict_proba(std::span<const double> row) const = 0;
    virtual std::string kind() const = 0;
    virtual nlohmann::json to_json() const = 0;

    std::vector<double> predict_rows(const Matrix& rows) const {
        std::vector<double> out(rows.rows());
        for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_proba(rows.row(i));
        return out;
    }
};

enum class ClassifierKind {
    decision_tree,
    random_forest,
    logistic,
    linear_svm,
    gbt,
    bigru,
    cnn1d,
};

std::string classifier_kind_name(ClassifierKind kind);
ClassifierKind classifier_kind_from_name(const std::string& name);

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::decision_tree;
    std::map<std::string, double> params;  // validated against per-kind known keys
    std::uint64_t seed = 0;

    double param_or(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    // Rejects unknown kinds and unknown hyperparameter keys.
    static ClassifierSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Known hyperparameter keys for a kind (used for spec validation).
const std::vector<std::string>& classifier_param_keys(ClassifierKind kind);

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec);

// Reconstructs any fitted model from its to_json() form.
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

}  // namespace imbf
