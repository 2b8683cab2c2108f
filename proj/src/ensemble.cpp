#include "imbf/ensemble.hpp"

#include <algorithm>
#include <numeric>

#include "imbf/rng.hpp"

namespace imbf {

EnsembleSpec EnsembleSpec::defaults(std::uint64_t seed) {
    EnsembleSpec spec;
    ClassifierSpec gru16;
    gru16.kind = ClassifierKind::bigru;
    gru16.params["hidden"] = 16;
    ClassifierSpec gru32;
    gru32.kind = ClassifierKind::bigru;
    gru32.params["hidden"] = 32;
    ClassifierSpec cnn;
    cnn.kind = ClassifierKind::cnn1d;
    spec.base_specs = {gru16, gru32, cnn};
    spec.meta_spec.kind = ClassifierKind::gbt;
    spec.seed = seed;
    return spec;
}

EnsembleSpec EnsembleSpec::from_json(const nlohmann::json& j) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "base" && key != "meta" && key != "oof_folds" && key != "bootstrap" &&
            key != "seed")
            throw ConfigError("unknown key in ensemble spec: '" + key + "'");
    }
    EnsembleSpec spec;
    if (!j.contains("base")) throw ConfigError("ensemble spec missing 'base' list");
    for (const auto& b : j.at("base")) spec.base_specs.push_back(ClassifierSpec::from_json(b));
    if (spec.base_specs.size() < 2)
        throw ConfigError("ensemble spec needs at least 2 base classifiers");
    if (j.contains("meta"))
        spec.meta_spec = ClassifierSpec::from_json(j.at("meta"));
    else
        spec.meta_spec.kind = ClassifierKind::gbt;
    if (j.contains("oof_folds")) spec.oof_folds = j.at("oof_folds").get<int>();
    if (j.contains("bootstrap")) spec.bootstrap = j.at("bootstrap").get<bool>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

nlohmann::json EnsembleSpec::to_json() const {
    nlohmann::json base = nlohmann::json::array();
    for (const auto& b : base_specs) base.push_back(b.to_json());
    return {{"base", base},
            {"meta", meta_spec.to_json()},
            {"oof_folds", oof_folds},
            {"bootstrap", bootstrap},
            {"seed", seed}};
}

OofResult make_oof_meta_features(const Dataset& train, const EnsembleSpec& spec) {
    require_two_classes(train);
    if (spec.base_specs.empty()) throw ConfigError("ensemble needs at least one base spec");

    OofResult oof;
    oof.plan = stratified_kfold(train, spec.oof_folds, derive_seed(spec.seed, "oof_plan", 0));
    oof.labels = train.labels;
    oof.meta_features = Matrix(train.n_rows(), spec.base_specs.size());
    oof.models.resize(spec.base_specs.size());
    oof.train_rows.resize(spec.base_specs.size());

    for (std::size_t b = 0; b < spec.base_specs.size(); ++b) {
        oof.models[b].resize(static_cast<std::size_t>(spec.oof_folds));
        oof.train_rows[b].resize(static_cast<std::size_t>(spec.oof_folds));
        for (int f = 0; f < spec.oof_folds; ++f) {
            std::vector<std::size_t> fit_rows = oof.plan.complement_rows(f);
            if (spec.bootstrap) {
                Rng rng(derive_seed(spec.seed, "oof_bootstrap", b * 1000 + static_cast<std::size_t>(f)));
                std::vector<std::size_t> replicate(fit_rows.size());
                for (std::size_t i = 0; i < fit_rows.size(); ++i)
                    replicate[i] = fit_rows[rng.uniform_index(fit_rows.size())];
                fit_rows = std::move(replicate);
            }

            ClassifierSpec base = spec.base_specs[b];
            base.seed = derive_seed(spec.seed, "oof_fit", b * 1000 + static_cast<std::size_t>(f)) ^
                        base.seed;
            auto model = make_classifier(base);
            model->fit(train.subset(fit_rows));

            for (std::size_t r : oof.plan.fold_rows(f))
                oof.meta_features(r, b) = model->predict_proba(train.features.row(r));
            oof.models[b][static_cast<std::size_t>(f)] = std::move(model);
            oof.train_rows[b][static_cast<std::size_t>(f)] = std::move(fit_rows);
        }
    }
    return oof;
}

bool oof_leakage_detected(const OofResult& oof) {
    for (std::size_t b = 0; b < oof.train_rows.size(); ++b) {
        for (std::size_t f = 0; f < oof.train_rows[b].size(); ++f) {
            std::vector<char> seen(oof.plan.assignments.size(), 0);
            for (std::size_t r : oof.train_rows[b][f]) seen[r] = 1;
            for (std::size_t r = 0; r < oof.plan.assignments.size(); ++r) {
                // row r's meta-feature comes from the model for its own fold
                if (oof.plan.assignments[r] == static_cast<int>(f) && seen[r]) return true;
            }
        }
    }
    return false;
}

StackedEnsemble train_stacked_ensemble(const Dataset& train, const EnsembleSpec& spec) {
    OofResult oof = make_oof_meta_features(train, spec);

    Dataset meta_train;
    meta_train.features = oof.meta_features;
    meta_train.labels = oof.labels;
    for (std::size_t b = 0; b < spec.base_specs.size(); ++b)
        meta_train.feature_names.push_back("base" + std::to_string(b));
    meta_train.row_ids = train.row_ids;
    meta_train.id_bound = train.id_bound;

    ClassifierSpec meta = spec.meta_spec;
    meta.seed = derive_seed(spec.seed, "meta_fit", 0) ^ meta.seed;

    StackedEnsemble ensemble;
    ensemble.spec = spec;
    ensemble.base_models = std::move(oof.models);
    ensemble.meta_model = make_classifier(meta);
    ensemble.meta_model->fit(meta_train);
    ensemble.plan = std::move(oof.plan);
    return ensemble;
}

std::vector<double> StackedEnsemble::meta_features_for(std::span<const double> row) const {
    std::vector<double> meta(base_models.size(), 0.0);
    for (std::size_t b = 0; b < base_models.size(); ++b) {
        double acc = 0.0;
        for (const auto& model : base_models[b]) acc += model->predict_proba(row);
        meta[b] = acc / static_cast<double>(base_models[b].size());
    }
    return meta;
}

double StackedEnsemble::predict_proba(std::span<const double> row) const {
    std::vector<double> meta = meta_features_for(row);
    return meta_model->predict_proba(meta);
}

std::vector<double> StackedEnsemble::predict_rows(const Matrix& rows) const {
    std::vector<double> out(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_proba(rows.row(i));
    return out;
}

nlohmann::json StackedEnsemble::to_json() const {
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& fold_models : base_models) {
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& model : fold_models) folds.push_back(model->to_json());
        bases.push_back(folds);
    }
    return {{"format_version", kModelFormatVersion},
            {"kind", "stacked_ensemble"},
            {"spec", spec.to_json()},
            {"base_models", bases},
            {"meta_model", meta_model->to_json()},
            {"fold_assignments", plan.assignments},
            {"oof_folds", plan.k}};
}

StackedEnsemble StackedEnsemble::from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "stacked_ensemble")
        throw ConfigError("not a stacked_ensemble model file");
    StackedEnsemble ensemble;
    ensemble.spec = EnsembleSpec::from_json(j.at("spec"));
    for (const auto& folds : j.at("base_models")) {
        std::vector<std::unique_ptr<Classifier>> models;
        for (const auto& mj : folds) models.push_back(classifier_from_json(mj));
        ensemble.base_models.push_back(std::move(models));
    }
    ensemble.meta_model = classifier_from_json(j.at("meta_model"));
    ensemble.plan.k = j.at("oof_folds").get<int>();
    ensemble.plan.assignments = j.at("fold_assignments").get<std::vector<int>>();
    return ensemble;
}

}  // namespace imbf
