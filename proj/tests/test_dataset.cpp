#include <doctest.h>

#include <cmath>

#include "imbf/dataset.hpp"
#include "imbf/evaluation.hpp"
#include "imbf/learners/linear.hpp"
#include "test_util.hpp"

using namespace imbf;

namespace {

std::string csv_path(const std::string& name, const std::string& content) {
    return testutil::write_file(testutil::temp_dir("dataset") / name, content);
}

}  // namespace

TEST_CASE("load_csv parses a handcrafted file") {
    auto path = csv_path("tiny.csv", "a,b,Class\n1,2,0\n3,4,1\n5,6,0\n");
    Dataset ds = load_csv(path, SchemaMode::generic);
    CHECK(ds.n_rows() == 3);
    CHECK(ds.n_cols() == 2);
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.features(1, 0) == 3.0);
    CHECK(ds.row_ids == std::vector<std::int64_t>{0, 1, 2});
    CHECK(ds.id_bound == 3);
}

TEST_CASE("load_csv rejects degenerate inputs") {
    SUBCASE("no data rows") {
        auto path = csv_path("empty_rows.csv", "a,b,Class\n");
        CHECK_THROWS_AS(load_csv(path, SchemaMode::generic), EmptyDatasetError);
    }
    SUBCASE("missing header") {
        auto path = csv_path("no_header.csv", "1,2,0\n3,4,1\n");
        CHECK_THROWS_AS(load_csv(path, SchemaMode::generic), SchemaError);
    }
    SUBCASE("empty file") {
        auto path = csv_path("empty.csv", "");
        CHECK_THROWS_AS(load_csv(path, SchemaMode::generic), SchemaError);
    }
    SUBCASE("non-numeric cell carries row/col") {
        auto path = csv_path("bad_cell.csv", "a,b,Class\n1,2,0\n3,oops,1\n");
        try {
            load_csv(path, SchemaMode::generic);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.row() == 2);
            CHECK(e.col() == 2);
        }
    }
    SUBCASE("label outside {0,1}") {
        auto path = csv_path("bad_label.csv", "a,b,Class\n1,2,2\n");
        CHECK_THROWS_AS(load_csv(path, SchemaMode::generic), LabelError);
    }
    SUBCASE("kaggle schema enforces the exact header") {
        auto path = csv_path("not_kaggle.csv", "a,b,Class\n1,2,0\n");
        CHECK_THROWS_AS(load_csv(path, SchemaMode::kaggle_creditcard), SchemaError);
    }
}

TEST_CASE("kaggle header accepted and Class column mapped") {
    std::string header = "Time";
    for (int i = 1; i <= 28; ++i) header += ",V" + std::to_string(i);
    header += ",Amount,Class";
    std::string row0 = "0";
    for (int i = 0; i < 29; ++i) row0 += ",0.5";
    std::string row1 = "1";
    for (int i = 0; i < 29; ++i) row1 += ",1.5";
    auto path = csv_path("kaggle.csv", header + "\n" + row0 + ",0\n" + row1 + ",1\n");
    Dataset ds = load_csv(path, SchemaMode::kaggle_creditcard);
    CHECK(ds.n_cols() == 30);
    CHECK(ds.labels == std::vector<int>{0, 1});
    CHECK(ds.feature_names.front() == "Time");
    CHECK(ds.feature_names.back() == "Amount");
}

TEST_CASE("inspect reports fractions, stats, and missing counts") {
    SUBCASE("two-point column stats use the population estimator") {
        auto path = csv_path("stats.csv", "x,Class\n1,0\n3,1\n");
        InspectionReport rep = inspect(load_csv(path, SchemaMode::generic));
        CHECK(rep.per_column_stats[0].mean == 2.0);
        CHECK(rep.per_column_stats[0].std_dev == 1.0);
        CHECK(rep.per_column_stats[0].min == 1.0);
        CHECK(rep.per_column_stats[0].max == 3.0);
        CHECK(rep.fraud_fraction == 0.5);
    }
    SUBCASE("all-legitimate dataset") {
        auto path = csv_path("allzero.csv", "x,Class\n1,0\n2,0\n");
        CHECK(inspect(load_csv(path, SchemaMode::generic)).fraud_fraction == 0.0);
    }
    SUBCASE("missing cells are counted per column") {
        auto path = csv_path("missing.csv", "x,y,Class\n1,,0\n2,3,1\n,4,0\n");
        Dataset ds = load_csv(path, SchemaMode::generic);
        InspectionReport rep = inspect(ds);
        CHECK(rep.missing_per_column[0] == 1);
        CHECK(rep.missing_per_column[1] == 1);
        CHECK(ds.has_missing());
    }
    SUBCASE("fraud fraction is the exact ratio") {
        Dataset ds = make_synthetic(990, 10, 3, 1.0, 1);
        CHECK(inspect(ds).fraud_fraction == 10.0 / 1000.0);
    }
}

TEST_CASE("resolve_missing policies") {
    auto path = csv_path("missing2.csv", "x,y,Class\n1,,0\n2,6,1\n4,4,0\n");
    Dataset ds = load_csv(path, SchemaMode::generic);
    CHECK_THROWS_AS(resolve_missing(ds, MissingPolicy::reject), ParseError);
    Dataset dropped = resolve_missing(ds, MissingPolicy::drop_rows);
    CHECK(dropped.n_rows() == 2);
    CHECK(dropped.row_ids == std::vector<std::int64_t>{1, 2});
    Dataset imputed = resolve_missing(ds, MissingPolicy::mean_impute);
    CHECK(imputed.n_rows() == 3);
    CHECK(imputed.features(0, 1) == 5.0);  // mean of {6, 4}
}

TEST_CASE("standardize_fit_transform") {
    Dataset train;
    train.feature_names = {"x"};
    train.features = Matrix(2, 1);
    train.features(0, 0) = 0.0;
    train.features(1, 0) = 2.0;
    train.labels = {0, 1};
    train.row_ids = {0, 1};
    train.id_bound = 2;

    SUBCASE("train column {0,2} maps to {-1,+1}") {
        auto res = standardize_fit_transform(train);
        CHECK(res.train.features(0, 0) == -1.0);
        CHECK(res.train.features(1, 0) == 1.0);
        CHECK(res.standardizer.mean[0] == 1.0);
        CHECK(res.standardizer.std_dev[0] == 1.0);
    }
    SUBCASE("inverse transform recovers originals") {
        Dataset wide = make_synthetic(50, 50, 6, 3.0, 9);
        auto res = standardize_fit_transform(wide);
        Dataset back = res.standardizer.inverse_transform(res.train);
        for (std::size_t r = 0; r < wide.n_rows(); ++r)
            for (std::size_t c = 0; c < wide.n_cols(); ++c)
                CHECK(back.features(r, c) == doctest::Approx(wide.features(r, c)).epsilon(1e-12));
        // transforming twice is not the identity
        Dataset twice = res.standardizer.transform(res.train);
        CHECK(twice.features(0, 0) != res.train.features(0, 0));
    }
    SUBCASE("row at the train mean maps to zero") {
        Dataset probe = train;
        probe.features(0, 0) = 1.0;
        probe.features(1, 0) = 1.0;
        auto res = standardize_fit_transform(train, {&probe});
        CHECK(res.applied[0].features(0, 0) == 0.0);
        CHECK(res.applied[0].features(1, 0) == 0.0);
    }
    SUBCASE("constant columns clamp to std 1 and map to zero") {
        Dataset flat;
        flat.feature_names = {"c"};
        flat.features = Matrix(3, 1, 7.0);
        flat.labels = {0, 1, 0};
        flat.row_ids = {0, 1, 2};
        flat.id_bound = 3;
        auto res = standardize_fit_transform(flat);
        CHECK(res.standardizer.constant_columns == std::vector<std::size_t>{0});
        CHECK(res.train.features(1, 0) == 0.0);
    }
}

TEST_CASE("stratified_kfold") {
    SUBCASE("10 rows split 5/5 with k=5 gives one of each per fold") {
        Dataset ds = make_synthetic(5, 5, 2, 1.0, 3);
        FoldPlan plan = stratified_kfold(ds, 5, 42);
        for (int f = 0; f < 5; ++f) {
            std::size_t pos = 0, neg = 0;
            for (std::size_t i = 0; i < ds.n_rows(); ++i) {
                if (plan.assignments[i] != f) continue;
                ds.labels[i] ? ++pos : ++neg;
            }
            CHECK(pos == 1);
            CHECK(neg == 1);
        }
    }
    SUBCASE("100 rows with 10 positives, k=10: exactly one positive per fold") {
        Dataset ds = make_synthetic(90, 10, 3, 1.0, 4);
        FoldPlan plan = stratified_kfold(ds, 10, 7);
        for (int f = 0; f < 10; ++f) {
            std::size_t pos = 0;
            for (std::size_t i = 0; i < ds.n_rows(); ++i)
                if (plan.assignments[i] == f && ds.labels[i]) ++pos;
            CHECK(pos == 1);
        }
    }
    SUBCASE("assignments partition the rows and are seed-deterministic") {
        Dataset ds = make_synthetic(200, 40, 3, 1.0, 5);
        FoldPlan a = stratified_kfold(ds, 7, 11);
        FoldPlan b = stratified_kfold(ds, 7, 11);
        FoldPlan c = stratified_kfold(ds, 7, 12);
        CHECK(a.assignments == b.assignments);
        CHECK(a.assignments != c.assignments);
        std::size_t total = 0;
        for (int f = 0; f < 7; ++f) {
            auto rows = a.fold_rows(f);
            CHECK(!rows.empty());
            total += rows.size();
        }
        CHECK(total == ds.n_rows());
    }
    SUBCASE("per-fold minority counts differ by at most one") {
        Dataset ds = make_synthetic(150, 23, 3, 1.0, 6);
        FoldPlan plan = stratified_kfold(ds, 5, 2);
        std::vector<std::size_t> pos(5, 0);
        for (std::size_t i = 0; i < ds.n_rows(); ++i)
            if (ds.labels[i]) ++pos[static_cast<std::size_t>(plan.assignments[i])];
        auto [mn, mx] = std::minmax_element(pos.begin(), pos.end());
        CHECK(*mx - *mn <= 1);
    }
    SUBCASE("too few minority rows") {
        Dataset ds = make_synthetic(50, 3, 2, 1.0, 8);
        CHECK_THROWS_AS(stratified_kfold(ds, 5, 1), InsufficientMinorityError);
    }
}

TEST_CASE("make_synthetic shapes and signal strength") {
    SUBCASE("990/10 gives exact fraud fraction and determinism") {
        Dataset a = make_synthetic(990, 10, 4, 2.0, 21);
        Dataset b = make_synthetic(990, 10, 4, 2.0, 21);
        CHECK(a == b);
        CHECK(a.count_label(1) == 10);
        CHECK(inspect(a).fraud_fraction == 0.01);
        CHECK(make_synthetic(990, 10, 4, 2.0, 22).features != a.features);
    }
    SUBCASE("separation 0 carries no signal") {
        Dataset train = make_synthetic(700, 700, 4, 0.0, 31);
        Dataset test = make_synthetic(300, 300, 4, 0.0, 32);
        auto std_res = standardize_fit_transform(train, {&test});
        ClassifierSpec spec;
        spec.kind = ClassifierKind::logistic;
        auto clf = make_classifier(spec);
        clf->fit(std_res.train);
        auto scores = clf->predict_rows(std_res.applied[0].features);
        double auc = roc_auc(test.labels, scores).auc;
        CHECK(auc > 0.45);
        CHECK(auc < 0.55);
    }
    SUBCASE("separation 6 in 4 dims is trivially separable") {
        Dataset train = make_synthetic(500, 100, 4, 6.0, 33);
        Dataset test = make_synthetic(500, 100, 4, 6.0, 34);
        auto std_res = standardize_fit_transform(train, {&test});
        ClassifierSpec spec;
        spec.kind = ClassifierKind::logistic;
        auto clf = make_classifier(spec);
        clf->fit(std_res.train);
        auto scores = clf->predict_rows(std_res.applied[0].features);
        CHECK(roc_auc(test.labels, scores).auc > 0.99);
    }
}

TEST_CASE("subsample_majority keeps every minority row") {
    Dataset ds = make_synthetic(3000, 40, 3, 1.5, 17);
    Dataset capped = subsample_majority(ds, 500, 42);
    CHECK(capped.count_label(0) == 500);
    CHECK(capped.count_label(1) == 40);
    CHECK(subsample_majority(ds, 500, 42) == capped);
    CHECK(subsample_majority(ds, 5000, 42) == ds);  // under the cap: untouched
}

TEST_CASE("csv round trip is exact") {
    Dataset ds = make_synthetic(20, 5, 3, 2.5, 77);
    auto path = (testutil::temp_dir("dataset") / "roundtrip.csv").string();
    write_csv(ds, path);
    Dataset back = load_csv(path, SchemaMode::generic);
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.feature_names == ds.feature_names);
}
