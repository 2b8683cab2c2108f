#include <doctest.h>

#include <cmath>

#include "imbf/ensemble.hpp"
#include "imbf/evaluation.hpp"

using namespace imbf;

namespace {

ClassifierSpec cheap_logistic(std::uint64_t seed = 0) {
    ClassifierSpec spec;
    spec.kind = ClassifierKind::logistic;
    spec.params["epochs"] = 50;
    spec.seed = seed;
    return spec;
}

ClassifierSpec cheap_tree() {
    ClassifierSpec spec;
    spec.kind = ClassifierKind::decision_tree;
    spec.params["max_depth"] = 4;
    return spec;
}

ClassifierSpec cheap_gbt() {
    ClassifierSpec spec;
    spec.kind = ClassifierKind::gbt;
    spec.params["n_rounds"] = 30;
    return spec;
}

EnsembleSpec cheap_ensemble(std::uint64_t seed) {
    EnsembleSpec spec;
    spec.base_specs = {cheap_logistic(), cheap_tree()};
    spec.meta_spec = cheap_gbt();
    spec.oof_folds = 3;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("oof meta features come from disjoint fold models") {
    Dataset train = make_synthetic(60, 60, 4, 2.0, 80);
    EnsembleSpec spec;
    spec.base_specs = {cheap_logistic()};
    spec.oof_folds = 2;
    spec.seed = 4;
    OofResult oof = make_oof_meta_features(train, spec);

    REQUIRE(oof.models.size() == 1);
    REQUIRE(oof.models[0].size() == 2);
    CHECK(oof.meta_features.rows() == train.n_rows());
    CHECK(oof.meta_features.cols() == 1);
    // the two fold models score exactly their own held-out halves
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        int f = oof.plan.assignments[r];
        double direct =
            oof.models[0][static_cast<std::size_t>(f)]->predict_proba(train.features.row(r));
        CHECK(oof.meta_features(r, 0) == direct);
    }
    CHECK_FALSE(oof_leakage_detected(oof));
}

TEST_CASE("leakage detector fires when a model saw its own fold") {
    Dataset train = make_synthetic(40, 40, 3, 2.0, 81);
    EnsembleSpec spec;
    spec.base_specs = {cheap_logistic()};
    spec.oof_folds = 2;
    OofResult oof = make_oof_meta_features(train, spec);
    CHECK_FALSE(oof_leakage_detected(oof));
    // corrupt the record: pretend fold 0's model also trained on a fold-0 row
    std::size_t offender = oof.plan.fold_rows(0).front();
    oof.train_rows[0][0].push_back(offender);
    CHECK(oof_leakage_detected(oof));
}

TEST_CASE("constant base learner produces a constant meta column") {
    Dataset train = make_synthetic(40, 40, 3, 2.0, 82);
    ClassifierSpec constant;  // logistic with zero epochs stays at w = 0 -> 0.5
    constant.kind = ClassifierKind::logistic;
    constant.params["epochs"] = 0;
    EnsembleSpec spec;
    spec.base_specs = {constant, constant};
    spec.oof_folds = 2;
    OofResult oof = make_oof_meta_features(train, spec);
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        CHECK(oof.meta_features(r, 0) == 0.5);
        CHECK(oof.meta_features(r, 1) == 0.5);
    }
}

TEST_CASE("stacking a perfect base scores a perfect holdout") {
    Dataset train = make_synthetic(150, 150, 4, 8.0, 83);
    Dataset test = make_synthetic(80, 80, 4, 8.0, 84);
    auto std_res = standardize_fit_transform(train, {&test});
    EnsembleSpec spec = cheap_ensemble(5);
    StackedEnsemble ensemble = train_stacked_ensemble(std_res.train, spec);
    auto scores = ensemble.predict_rows(std_res.applied[0].features);
    CHECK(roc_auc(test.labels, scores).auc == doctest::Approx(1.0));
}

TEST_CASE("ensemble holds its own against the best base learner") {
    Dataset train = make_synthetic(300, 300, 4, 2.0, 85);
    Dataset test = make_synthetic(200, 200, 4, 2.0, 86);
    auto std_res = standardize_fit_transform(train, {&test});

    double best_base = 0.0;
    for (const ClassifierSpec& base : {cheap_logistic(), cheap_tree()}) {
        auto clf = make_classifier(base);
        clf->fit(std_res.train);
        best_base =
            std::max(best_base, roc_auc(test.labels, clf->predict_rows(std_res.applied[0].features)).auc);
    }
    StackedEnsemble ensemble = train_stacked_ensemble(std_res.train, cheap_ensemble(6));
    double ens_auc = roc_auc(test.labels, ensemble.predict_rows(std_res.applied[0].features)).auc;
    CHECK(ens_auc >= best_base - 0.02);
}

TEST_CASE("inference meta features average the fold copies") {
    Dataset train = make_synthetic(50, 50, 3, 2.0, 87);
    EnsembleSpec spec;
    spec.base_specs = {cheap_logistic(), cheap_tree()};
    spec.oof_folds = 2;
    spec.seed = 9;
    StackedEnsemble ensemble = train_stacked_ensemble(train, spec);

    std::vector<double> probe(3, 0.3);
    std::vector<double> meta = ensemble.meta_features_for(probe);
    for (std::size_t b = 0; b < 2; ++b) {
        double mean = (ensemble.base_models[b][0]->predict_proba(probe) +
                       ensemble.base_models[b][1]->predict_proba(probe)) /
                      2.0;
        CHECK(meta[b] == doctest::Approx(mean));
    }
    // two-stage evaluation by hand equals predict_proba
    CHECK(ensemble.predict_proba(probe) ==
          doctest::Approx(ensemble.meta_model->predict_proba(meta)));
}

TEST_CASE("ensemble scores stay in [0,1] on random probes") {
    Dataset train = make_synthetic(60, 60, 3, 2.0, 88);
    StackedEnsemble ensemble = train_stacked_ensemble(train, cheap_ensemble(11));
    Rng rng(30);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> probe(3);
        for (double& v : probe) v = rng.normal() * 3.0;
        double s = ensemble.predict_proba(probe);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("identical seeds give identical serialized ensembles") {
    Dataset train = make_synthetic(60, 60, 3, 2.0, 89);
    EnsembleSpec spec = cheap_ensemble(12);
    StackedEnsemble a = train_stacked_ensemble(train, spec);
    StackedEnsemble b = train_stacked_ensemble(train, spec);
    CHECK(a.to_json().dump() == b.to_json().dump());
    spec.seed = 13;
    StackedEnsemble c = train_stacked_ensemble(train, spec);
    CHECK(a.to_json().dump() != c.to_json().dump());
}

TEST_CASE("ensemble spec json validation") {
    nlohmann::json good = {
        {"base", {{{"kind", "logistic"}}, {{"kind", "decision_tree"}}}},
        {"meta", {{"kind", "gbt"}}},
        {"oof_folds", 4},
    };
    EnsembleSpec spec = EnsembleSpec::from_json(good);
    CHECK(spec.base_specs.size() == 2);
    CHECK(spec.oof_folds == 4);

    nlohmann::json bad = good;
    bad["mystery"] = 1;
    CHECK_THROWS_AS(EnsembleSpec::from_json(bad), ConfigError);
    nlohmann::json single = {{"base", {{{"kind", "logistic"}}}}};
    CHECK_THROWS_AS(EnsembleSpec::from_json(single), ConfigError);
}
