#include <doctest.h>

#include <cmath>
#include <set>

#include "imbf/evaluation.hpp"
#include "oracles.hpp"

using namespace imbf;

namespace {

// Scores by the mean feature value: a perfect ranker for well-separated
// blobs, used as the oracle classifier in protocol tests.
class MeanScoreClassifier : public Classifier {
public:
    void fit(const Dataset&) override {}
    double predict_proba(std::span<const double> row) const override {
        double m = 0.0;
        for (double v : row) m += v;
        m /= static_cast<double>(row.size());
        return 1.0 / (1.0 + std::exp(-m));
    }
    std::string kind() const override { return "mean_score"; }
    nlohmann::json to_json() const override { return {{"kind", kind()}}; }
};

}  // namespace

TEST_CASE("confusion counts and basic metrics") {
    SUBCASE("hand tally at threshold 0.5") {
        std::vector<int> labels{1, 0, 1, 0};
        std::vector<double> scores{0.9, 0.8, 0.4, 0.1};
        ConfusionCounts c = confusion(labels, scores);
        CHECK(c.tp == 1);
        CHECK(c.fp == 1);
        CHECK(c.fn == 1);
        CHECK(c.tn == 1);
        CHECK(basic_metrics(c).accuracy == 0.5);
    }
    SUBCASE("recall from tp=9, fn=1") {
        ConfusionCounts c{9, 0, 0, 1};
        CHECK(basic_metrics(c).recall == doctest::Approx(0.9));
    }
    SUBCASE("all correct") {
        std::vector<int> labels{1, 0, 1};
        std::vector<double> scores{0.9, 0.1, 0.8};
        BasicMetrics m = basic_metrics(confusion(labels, scores));
        CHECK(m.accuracy == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.precision == 1.0);
    }
    SUBCASE("score equal to the threshold counts as positive") {
        std::vector<int> labels{1};
        std::vector<double> scores{0.5};
        CHECK(confusion(labels, scores).tp == 1);
    }
    SUBCASE("undefined recall/precision become NaN markers") {
        std::vector<int> labels{0, 0};
        std::vector<double> scores{0.1, 0.2};
        BasicMetrics m = basic_metrics(confusion(labels, scores));
        CHECK(std::isnan(m.recall));
        CHECK(std::isnan(m.precision));
        CHECK(m.accuracy == 1.0);
    }
}

TEST_CASE("roc_auc on pinned instances") {
    SUBCASE("perfect ranking") {
        std::vector<int> labels{1, 0};
        std::vector<double> scores{0.9, 0.1};
        CHECK(roc_auc(labels, scores).auc == doctest::Approx(1.0));
    }
    SUBCASE("three of four pairs concordant") {
        std::vector<int> labels{1, 1, 0, 0};
        std::vector<double> scores{0.8, 0.4, 0.6, 0.2};
        CHECK(roc_auc(labels, scores).auc == doctest::Approx(0.75));
    }
    SUBCASE("all ties give half") {
        std::vector<int> labels{1, 0, 1, 0};
        std::vector<double> scores{0.5, 0.5, 0.5, 0.5};
        CHECK(roc_auc(labels, scores).auc == doctest::Approx(0.5));
    }
    SUBCASE("single class is undefined") {
        std::vector<int> labels{1, 1};
        std::vector<double> scores{0.4, 0.6};
        CHECK_THROWS_AS(roc_auc(labels, scores), UndefinedAucError);
    }
}

TEST_CASE("trapezoidal auc equals the pairwise oracle on 200 random instances") {
    Rng rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 5 + rng.uniform_index(45);
        std::vector<int> labels(n);
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
            // quantized scores force plenty of ties
            scores[i] = std::round(rng.uniform() * 8.0) / 8.0;
        }
        if (std::count(labels.begin(), labels.end(), 1) == 0) labels[0] = 1;
        if (std::count(labels.begin(), labels.end(), 0) == 0) labels[n - 1] = 0;

        RocCurve curve = roc_auc(labels, scores);
        double expected = oracles::auc_pairwise(labels, scores);
        CHECK(std::abs(curve.auc - expected) < 1e-12);

        // curve invariants: endpoints and monotonicity
        CHECK(curve.points.front() == std::pair<double, double>{0.0, 0.0});
        CHECK(curve.points.back() == std::pair<double, double>{1.0, 1.0});
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].first >= curve.points[i - 1].first);
            CHECK(curve.points[i].second >= curve.points[i - 1].second);
        }
    }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 10 + rng.uniform_index(30);
        std::vector<int> labels(n);
        std::vector<double> scores(n), warped(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
            scores[i] = rng.uniform();
            warped[i] = std::exp(3.0 * scores[i]) - 0.5;  // strictly increasing
        }
        if (std::count(labels.begin(), labels.end(), 1) == 0) labels[0] = 1;
        if (std::count(labels.begin(), labels.end(), 0) == 0) labels[n - 1] = 0;
        CHECK(roc_auc(labels, scores).auc == doctest::Approx(roc_auc(labels, warped).auc));
    }
}

TEST_CASE("crossval_evaluate runs the 10-fold protocol") {
    Dataset ds = make_synthetic(400, 40, 4, 2.0, 90);
    SamplerConfig sampler;
    ClassifierSpec dt;
    dt.kind = ClassifierKind::decision_tree;
    EvalReport report = crossval_evaluate(ds, sampler, dt, 10, 42);
    CHECK(report.fold_metrics.size() == 10);
    CHECK(report.folds == 10);
    CHECK(report.sampler == "none");
    CHECK(report.model == "decision_tree");
    // csv carries 10 fold rows plus mean and std
    std::string csv = report.metrics_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}

TEST_CASE("oracle classifier scores every fold perfectly") {
    Dataset ds = make_synthetic(300, 60, 4, 10.0, 91);
    SamplerConfig sampler;
    ModelChoice oracle = ModelFactory([](std::uint64_t) -> std::unique_ptr<Classifier> {
        return std::make_unique<MeanScoreClassifier>();
    });
    EvalReport report = crossval_evaluate(ds, sampler, oracle, 5, 7);
    for (const FoldMetrics& m : report.fold_metrics) CHECK(m.auc == doctest::Approx(1.0));
    CHECK(report.mean_auc == doctest::Approx(1.0));
}

TEST_CASE("identical runs produce identical report bytes, regardless of jobs") {
    Dataset ds = make_synthetic(200, 30, 3, 2.0, 92);
    SamplerConfig sampler;
    sampler.choice = SamplerChoice::smote;
    ClassifierSpec dt;
    dt.kind = ClassifierKind::decision_tree;

    EvalReport a = crossval_evaluate(ds, sampler, dt, 5, 3);
    EvalReport b = crossval_evaluate(ds, sampler, dt, 5, 3);
    CrossvalOptions parallel;
    parallel.jobs = 2;
    EvalReport c = crossval_evaluate(ds, sampler, dt, 5, 3, parallel);
    CHECK(a.metrics_csv() == b.metrics_csv());
    CHECK(a.roc_tsv() == b.roc_tsv());
    CHECK(a.metrics_csv() == c.metrics_csv());
    CHECK(a.roc_tsv() == c.roc_tsv());

    EvalReport d = crossval_evaluate(ds, sampler, dt, 5, 4);
    CHECK(a.metrics_csv() != d.metrics_csv());
}

TEST_CASE("no test-fold row ever reaches the sampler or the standardizer") {
    Dataset ds = make_synthetic(250, 25, 3, 1.5, 93);
    SamplerConfig sampler;
    sampler.choice = SamplerChoice::smote_kmeans;
    ClassifierSpec dt;
    dt.kind = ClassifierKind::decision_tree;
    EvalReport report = crossval_evaluate(ds, sampler, dt, 5, 11);

    std::set<std::int64_t> all_test_ids;
    for (const FoldTrace& trace : report.traces) {
        std::set<std::int64_t> test_ids(trace.test_ids.begin(), trace.test_ids.end());
        for (std::int64_t id : trace.standardizer_fit_ids) CHECK(test_ids.count(id) == 0);
        for (std::int64_t id : trace.sampler_output_ids) CHECK(test_ids.count(id) == 0);
        all_test_ids.insert(test_ids.begin(), test_ids.end());
    }
    CHECK(all_test_ids.size() == ds.n_rows());  // folds cover every row exactly once
}

TEST_CASE("markdown table carries the method and sampler") {
    Dataset ds = make_synthetic(120, 24, 3, 2.0, 94);
    SamplerConfig sampler;
    sampler.choice = SamplerChoice::smote;
    ClassifierSpec dt;
    dt.kind = ClassifierKind::decision_tree;
    EvalReport report = crossval_evaluate(ds, sampler, dt, 4, 1);
    std::string md = report.markdown_table();
    CHECK(md.find("decision_tree") != std::string::npos);
    CHECK(md.find("smote") != std::string::npos);
}
