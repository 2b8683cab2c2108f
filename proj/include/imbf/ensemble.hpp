#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "imbf/classifier.hpp"
#include "imbf/dataset.hpp"

namespace imbf {

struct EnsembleSpec {
    std::vector<ClassifierSpec> base_specs;
    ClassifierSpec meta_spec;
    int oof_folds = 5;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    // Paper configuration: two Bi-GRUs (the second standing in for Bi-LSTM)
    // plus a CNN, stacked under a boosted-tree meta learner.
    static EnsembleSpec defaults(std::uint64_t seed);

    static EnsembleSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct OofResult {
    Matrix meta_features;  // n_rows x n_base, every entry out-of-fold
    std::vector<int> labels;
    // models[b][f]: base b fitted on everything outside fold f
    std::vector<std::vector<std::unique_ptr<Classifier>>> models;
    FoldPlan plan;
    // train_rows[b][f]: exact row indices (into train) each model saw,
    // bootstrap duplicates included. Kept for leakage auditing.
    std::vector<std::vector<std::vector<std::size_t>>> train_rows;
};

// Fits each base spec once per internal fold (on a bootstrap replicate of the
// other folds when bagging is on) and collects its predictions on the held-out
// fold, so no row's meta-feature comes from a model that saw it.
OofResult make_oof_meta_features(const Dataset& train, const EnsembleSpec& spec);

// True when some row's meta-feature producer had that row in its training
// set; the correct procedure never trips this.
bool oof_leakage_detected(const OofResult& oof);

struct StackedEnsemble {
    EnsembleSpec spec;
    std::vector<std::vector<std::unique_ptr<Classifier>>> base_models;  // [base][fold]
    std::unique_ptr<Classifier> meta_model;
    FoldPlan plan;

    // Inference meta-feature b = mean over the fold copies of base b.
    std::vector<double> meta_features_for(std::span<const double> row) const;
    double predict_proba(std::span<const double> row) const;
    std::vector<double> predict_rows(const Matrix& rows) const;

    nlohmann::json to_json() const;
    static StackedEnsemble from_json(const nlohmann::json& j);
};

StackedEnsemble train_stacked_ensemble(const Dataset& train, const EnsembleSpec& spec);

}  // namespace imbf
