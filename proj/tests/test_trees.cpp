#include <doctest.h>

#include <cmath>

#include "imbf/evaluation.hpp"
#include "imbf/learners/gbt.hpp"
#include "imbf/learners/tree.hpp"
#include "oracles.hpp"

using namespace imbf;

namespace {

Dataset dataset_1d(std::initializer_list<double> xs, std::initializer_list<int> ys) {
    Dataset ds;
    ds.feature_names = {"x"};
    ds.features = Matrix(0, 1);
    for (double x : xs) {
        double row[1] = {x};
        ds.features.append_row(row);
    }
    ds.labels = ys;
    ds.row_ids.resize(ds.labels.size());
    std::iota(ds.row_ids.begin(), ds.row_ids.end(), std::int64_t{0});
    ds.id_bound = static_cast<std::int64_t>(ds.labels.size());
    return ds;
}

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.features = Matrix(n, d);
    for (double& v : ds.features.data()) v = rng.normal();
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = rng.uniform() < 0.4 ? 1 : 0;
    if (std::count(ds.labels.begin(), ds.labels.end(), 1) == 0) ds.labels[0] = 1;
    if (std::count(ds.labels.begin(), ds.labels.end(), 0) == 0) ds.labels[1] = 0;
    for (std::size_t c = 0; c < d; ++c) ds.feature_names.push_back("f" + std::to_string(c));
    ds.row_ids.resize(n);
    std::iota(ds.row_ids.begin(), ds.row_ids.end(), std::int64_t{0});
    ds.id_bound = static_cast<std::int64_t>(n);
    return ds;
}

}  // namespace

TEST_CASE("gini impurity values") {
    CHECK(gini_impurity(0, 10) == 0.0);
    CHECK(gini_impurity(10, 10) == 0.0);
    CHECK(gini_impurity(5, 10) == 0.5);
}

TEST_CASE("decision tree separates 1-D data with a single split") {
    Dataset ds = dataset_1d({-3, -2, -1, 1, 2, 3}, {0, 0, 0, 1, 1, 1});
    ClassifierSpec spec;
    spec.kind = ClassifierKind::decision_tree;
    spec.params["min_leaf"] = 1;
    DecisionTreeModel model(spec);
    model.fit(ds);
    CHECK(model.tree().depth() == 1);
    CHECK(model.tree().leaf_count() == 2);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        double p = model.predict_proba(ds.features.row(i));
        CHECK((p >= 0.5) == (ds.labels[i] == 1));
    }
}

TEST_CASE("decision tree rejects single-class data") {
    Dataset ds = dataset_1d({1, 2, 3}, {1, 1, 1});
    ClassifierSpec spec;
    spec.kind = ClassifierKind::decision_tree;
    DecisionTreeModel model(spec);
    CHECK_THROWS_AS(model.fit(ds), DegenerateLabelsError);
}

TEST_CASE("root split matches exhaustive search on random 20-point instances") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        Dataset ds = random_dataset(20, 3, 900 + s);
        std::vector<std::size_t> rows(ds.n_rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        CartSplit split = best_gini_split(ds.features, ds.labels, rows, {0, 1, 2}, 1);
        oracles::BestSplit expected = oracles::cart_root_bruteforce(ds.features, ds.labels, 1);
        REQUIRE(split.found == (expected.feature >= 0));
        if (split.found) {
            CHECK(split.feature == expected.feature);
            CHECK(split.threshold == doctest::Approx(expected.threshold));
            CHECK(split.impurity_decrease == doctest::Approx(expected.decrease));
        }
    }
}

TEST_CASE("degenerate forest equals a lone decision tree") {
    Dataset ds = make_synthetic(60, 60, 3, 6.0, 41);
    ClassifierSpec tree_spec;
    tree_spec.kind = ClassifierKind::decision_tree;
    tree_spec.params["min_leaf"] = 1;
    DecisionTreeModel tree(tree_spec);
    tree.fit(ds);

    ClassifierSpec forest_spec;
    forest_spec.kind = ClassifierKind::random_forest;
    forest_spec.params["n_trees"] = 1;
    forest_spec.params["bootstrap"] = 0;
    forest_spec.params["features_per_split"] = 3;
    forest_spec.params["min_leaf"] = 1;
    RandomForestModel forest(forest_spec);
    forest.fit(ds);

    // separable data grows pure leaves, so vote == leaf fraction exactly
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        CHECK(forest.predict_proba(ds.features.row(i)) ==
              tree.predict_proba(ds.features.row(i)));
}

TEST_CASE("forest votes live on the 1/n_trees lattice") {
    Dataset ds = random_dataset(80, 4, 10);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::random_forest;
    spec.params["n_trees"] = 7;
    spec.seed = 5;
    RandomForestModel forest(spec);
    forest.fit(ds);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        double p = forest.predict_proba(ds.features.row(i));
        double scaled = p * 7.0;
        CHECK(std::abs(scaled - std::round(scaled)) < 1e-12);
    }
}

TEST_CASE("forest separates wide blobs") {
    Dataset train = make_synthetic(400, 100, 4, 6.0, 42);
    Dataset test = make_synthetic(400, 100, 4, 6.0, 43);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::random_forest;
    spec.params["n_trees"] = 50;
    spec.seed = 1;
    RandomForestModel forest(spec);
    forest.fit(train);
    auto scores = forest.predict_rows(test.features);
    CHECK(roc_auc(test.labels, scores).auc > 0.99);
}

TEST_CASE("gbt leaf weight and split gain formulas") {
    CHECK(gbt_leaf_weight(2.0, 1.0, 1.0, 0.0) == doctest::Approx(-1.0));
    CHECK(gbt_leaf_weight(2.0, 1.0, 1.0, 0.5) == doctest::Approx(-0.75));
    CHECK(gbt_leaf_weight(-2.0, 1.0, 1.0, 0.5) == doctest::Approx(0.75));
    CHECK(gbt_leaf_weight(0.3, 1.0, 1.0, 0.5) == doctest::Approx(0.0));
    // splitting equal halves of opposite sign beats the fused node
    CHECK(gbt_split_gain(1.0, 0.5, -1.0, 0.5, 0.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("single-stump gbt reproduces hand-computed leaf weights") {
    // raw score starts at 0, so p = 0.5, g = 0.5 - y, h = 0.25 per row
    Dataset ds = dataset_1d({0, 1, 10, 11}, {0, 0, 1, 1});
    ClassifierSpec spec;
    spec.kind = ClassifierKind::gbt;
    spec.params["n_rounds"] = 1;
    spec.params["max_depth"] = 1;
    spec.params["eta"] = 1.0;
    spec.params["lambda"] = 0.0;
    GbtModel model(spec);
    model.fit(ds);
    REQUIRE(model.trees.size() == 1);
    const Tree& stump = model.trees[0];
    REQUIRE(stump.nodes[0].feature == 0);
    CHECK(stump.nodes[0].threshold == doctest::Approx(5.5));
    // left leaf: G = 1.0, H = 0.5 -> w = -2; right leaf mirrors it
    CHECK(stump.predict(std::vector<double>{0.0}) == doctest::Approx(-2.0));
    CHECK(stump.predict(std::vector<double>{10.0}) == doctest::Approx(2.0));
}

TEST_CASE("gbt training loss never increases") {
    Dataset ds = random_dataset(120, 5, 77);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::gbt;
    spec.params["n_rounds"] = 40;
    GbtModel model(spec);
    model.fit(ds);
    REQUIRE(model.loss_history.size() == 41);
    for (std::size_t i = 1; i < model.loss_history.size(); ++i)
        CHECK(model.loss_history[i] <= model.loss_history[i - 1] + 1e-12);
}

TEST_CASE("huge lambda flattens gbt to the prior") {
    Dataset ds = random_dataset(60, 3, 78);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::gbt;
    spec.params["n_rounds"] = 10;
    spec.params["lambda"] = 1e12;
    GbtModel model(spec);
    model.fit(ds);
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        CHECK(model.predict_proba(ds.features.row(i)) == doctest::Approx(0.5).epsilon(1e-6));
}
