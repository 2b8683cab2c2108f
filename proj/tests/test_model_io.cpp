#include <doctest.h>

#include "imbf/ensemble.hpp"
#include "imbf/evaluation.hpp"

using namespace imbf;

namespace {

// fit -> serialize -> parse -> predictions and re-serialized bytes must match
void check_roundtrip(ClassifierKind kind, std::map<std::string, double> params = {}) {
    Dataset ds = make_synthetic(60, 40, 5, 2.0, 117);
    auto std_res = standardize_fit_transform(ds);
    ClassifierSpec spec;
    spec.kind = kind;
    spec.params = std::move(params);
    spec.seed = 31;
    auto model = make_classifier(spec);
    model->fit(std_res.train);

    nlohmann::json j = model->to_json();
    auto restored = classifier_from_json(j);
    CHECK(restored->kind() == model->kind());
    CHECK(restored->to_json().dump() == j.dump());

    Rng rng(404);
    for (int i = 0; i < 25; ++i) {
        std::vector<double> probe(5);
        for (double& v : probe) v = rng.normal();
        CHECK(restored->predict_proba(probe) == model->predict_proba(probe));
    }
}

}  // namespace

TEST_CASE("every classifier kind round-trips through json exactly") {
    check_roundtrip(ClassifierKind::decision_tree);
    check_roundtrip(ClassifierKind::random_forest, {{"n_trees", 10}});
    check_roundtrip(ClassifierKind::logistic, {{"epochs", 30}});
    check_roundtrip(ClassifierKind::linear_svm, {{"epochs", 30}});
    check_roundtrip(ClassifierKind::gbt, {{"n_rounds", 15}});
    check_roundtrip(ClassifierKind::bigru, {{"hidden", 4}, {"epochs", 2}});
    check_roundtrip(ClassifierKind::cnn1d, {{"epochs", 2}});
}

TEST_CASE("stacked ensemble round-trips through json exactly") {
    Dataset ds = make_synthetic(50, 50, 4, 2.0, 118);
    EnsembleSpec spec;
    ClassifierSpec logistic;
    logistic.kind = ClassifierKind::logistic;
    logistic.params["epochs"] = 30;
    ClassifierSpec tree;
    tree.kind = ClassifierKind::decision_tree;
    spec.base_specs = {logistic, tree};
    spec.meta_spec.kind = ClassifierKind::gbt;
    spec.meta_spec.params["n_rounds"] = 20;
    spec.oof_folds = 2;
    spec.seed = 77;

    StackedEnsemble ensemble = train_stacked_ensemble(ds, spec);
    nlohmann::json j = ensemble.to_json();
    StackedEnsemble restored = StackedEnsemble::from_json(j);
    CHECK(restored.to_json().dump() == j.dump());

    Rng rng(405);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> probe(4);
        for (double& v : probe) v = rng.normal();
        CHECK(restored.predict_proba(probe) == ensemble.predict_proba(probe));
    }
}

TEST_CASE("classifier spec json rejects unknown keys and kinds") {
    CHECK_THROWS_AS(ClassifierSpec::from_json({{"kind", "alien"}}), ConfigError);
    CHECK_THROWS_AS(ClassifierSpec::from_json({{"kind", "gbt"}, {"oops", 1}}), ConfigError);
    CHECK_THROWS_AS(
        ClassifierSpec::from_json({{"kind", "gbt"}, {"params", {{"who_knows", 3}}}}),
        ConfigError);
    CHECK_THROWS_AS(
        ClassifierSpec::from_json({{"kind", "gbt"}, {"params", {{"eta", "fast"}}}}),
        ConfigError);
    ClassifierSpec ok = ClassifierSpec::from_json(
        {{"kind", "gbt"}, {"seed", 3}, {"params", {{"eta", 0.2}, {"n_rounds", 10}}}});
    CHECK(ok.kind == ClassifierKind::gbt);
    CHECK(ok.param_or("eta", 0.0) == 0.2);
}

TEST_CASE("model json rejects foreign format versions") {
    Dataset ds = make_synthetic(30, 30, 3, 2.0, 119);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::decision_tree;
    auto model = make_classifier(spec);
    model->fit(ds);
    nlohmann::json j = model->to_json();
    j["format_version"] = 999;
    CHECK_THROWS_AS(classifier_from_json(j), ConfigError);
}
