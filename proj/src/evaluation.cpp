#include "imbf/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "imbf/format.hpp"
#include "imbf/rng.hpp"

namespace imbf {

ConfusionCounts confusion(std::span<const int> labels, std::span<const double> scores,
                          double threshold) {
    if (labels.size() != scores.size()) throw ShapeError("confusion: labels/scores length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        bool predicted = scores[i] >= threshold;
        if (labels[i] == 1)
            predicted ? ++c.tp : ++c.fn;
        else
            predicted ? ++c.fp : ++c.tn;
    }
    return c;
}

BasicMetrics basic_metrics(const ConfusionCounts& c) {
    BasicMetrics m;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.accuracy = c.total() == 0
                     ? nan
                     : static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.recall = (c.tp + c.fn) == 0 ? nan
                                  : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    m.precision = (c.tp + c.fp) == 0
                      ? nan
                      : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    return m;
}

RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw ShapeError("roc_auc: labels/scores length mismatch");
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedAucError("ROC requires both classes in the evaluated set");

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);
    double auc = 0.0;
    std::size_t tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        // consume the whole tie group at this score
        double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        curve.points.emplace_back(fpr, tpr);
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    curve.auc = auc;
    return curve;
}

std::string sampler_name(SamplerChoice choice) {
    switch (choice) {
        case SamplerChoice::none: return "none";
        case SamplerChoice::smote: return "smote";
        case SamplerChoice::smote_kmeans: return "smote_kmeans";
    }
    return "?";
}

SamplerChoice sampler_from_name(const std::string& name) {
    if (name == "none") return SamplerChoice::none;
    if (name == "smote") return SamplerChoice::smote;
    if (name == "smote_kmeans") return SamplerChoice::smote_kmeans;
    throw ConfigError("unknown sampler: '" + name + "' (expected none|smote|smote_kmeans)");
}

ResampleResult apply_sampler(const Dataset& train, const SamplerConfig& config,
                             std::uint64_t seed) {
    switch (config.choice) {
        case SamplerChoice::none: return identity_resample(train);
        case SamplerChoice::smote: {
            SmoteConfig c = config.params.smote;
            c.seed = seed;
            return smote_resample(train, c);
        }
        case SamplerChoice::smote_kmeans: {
            SmoteKmeansConfig c = config.params;
            c.smote.seed = seed;
            return smote_kmeans_resample(train, c);
        }
    }
    throw ConfigError("unknown sampler choice");
}

std::string model_name(const ModelChoice& model) {
    if (std::holds_alternative<ClassifierSpec>(model))
        return classifier_kind_name(std::get<ClassifierSpec>(model).kind);
    if (std::holds_alternative<EnsembleSpec>(model)) return "stacked_ensemble";
    return "custom";
}

namespace {

// Deterministic regardless of scheduling: body(i) depends only on i.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(jobs, static_cast<int>(count)); ++t)
        pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct FoldOutcome {
    FoldMetrics metrics;
    FoldTrace trace;
    std::vector<int> test_labels;
    std::vector<double> test_scores;
};

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

EvalReport crossval_evaluate(const Dataset& ds, const SamplerConfig& sampler,
                             const ModelChoice& model, int k, std::uint64_t seed,
                             const CrossvalOptions& options) {
    require_two_classes(ds);
    FoldPlan plan = stratified_kfold(ds, k, derive_seed(seed, "cv_plan", 0));

    std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), options.jobs, [&](std::size_t fi) {
        const int f = static_cast<int>(fi);
        std::vector<std::size_t> test_rows = plan.fold_rows(f);
        std::vector<std::size_t> train_rows = plan.complement_rows(f);
        Dataset test_ds = ds.subset(test_rows);
        Dataset train_ds = ds.subset(train_rows);

        StandardizeResult std_res = standardize_fit_transform(train_ds, {&test_ds});
        ResampleResult resampled =
            apply_sampler(std_res.train, sampler, derive_seed(seed, "cv_sampler", fi));

        FoldOutcome& out = outcomes[fi];
        out.trace.test_ids = test_ds.row_ids;
        out.trace.standardizer_fit_ids = train_ds.row_ids;
        out.trace.sampler_output_ids = resampled.dataset.row_ids;

        const Dataset& test_std = std_res.applied[0];
        std::uint64_t fit_seed = derive_seed(seed, "cv_fit", fi);
        if (std::holds_alternative<ClassifierSpec>(model)) {
            ClassifierSpec spec = std::get<ClassifierSpec>(model);
            spec.seed = fit_seed ^ spec.seed;
            auto clf = make_classifier(spec);
            clf->fit(resampled.dataset);
            out.test_scores = clf->predict_rows(test_std.features);
        } else if (std::holds_alternative<EnsembleSpec>(model)) {
            EnsembleSpec spec = std::get<EnsembleSpec>(model);
            spec.seed = fit_seed ^ spec.seed;
            StackedEnsemble ensemble = train_stacked_ensemble(resampled.dataset, spec);
            out.test_scores = ensemble.predict_rows(test_std.features);
        } else {
            auto clf = std::get<ModelFactory>(model)(fit_seed);
            clf->fit(resampled.dataset);
            out.test_scores = clf->predict_rows(test_std.features);
        }

        out.test_labels = test_ds.labels;
        out.metrics.counts = confusion(out.test_labels, out.test_scores, options.threshold);
        BasicMetrics bm = basic_metrics(out.metrics.counts);
        out.metrics.accuracy = bm.accuracy;
        out.metrics.recall = bm.recall;
        out.metrics.precision = bm.precision;
        out.metrics.auc = roc_auc(out.test_labels, out.test_scores).auc;
    });

    EvalReport report;
    report.sampler = sampler_name(sampler.choice);
    report.model = model_name(model);
    report.folds = k;
    report.seed = seed;

    std::vector<int> pooled_labels;
    std::vector<double> pooled_scores;
    std::vector<double> accs, recalls, precisions, aucs;
    for (FoldOutcome& out : outcomes) {
        report.fold_metrics.push_back(out.metrics);
        report.traces.push_back(std::move(out.trace));
        accs.push_back(out.metrics.accuracy);
        recalls.push_back(out.metrics.recall);
        precisions.push_back(out.metrics.precision);
        aucs.push_back(out.metrics.auc);
        pooled_labels.insert(pooled_labels.end(), out.test_labels.begin(), out.test_labels.end());
        pooled_scores.insert(pooled_scores.end(), out.test_scores.begin(), out.test_scores.end());
    }
    report.mean_accuracy = mean_of(accs);
    report.mean_recall = mean_of(recalls);
    report.mean_precision = mean_of(precisions);
    report.mean_auc = mean_of(aucs);
    report.std_accuracy = std_of(accs, report.mean_accuracy);
    report.std_recall = std_of(recalls, report.mean_recall);
    report.std_precision = std_of(precisions, report.mean_precision);
    report.std_auc = std_of(aucs, report.mean_auc);

    RocCurve pooled = roc_auc(pooled_labels, pooled_scores);
    report.roc_points = std::move(pooled.points);
    report.pooled_auc = pooled.auc;
    return report;
}

std::string EvalReport::metrics_csv() const {
    std::string csv = "fold,accuracy,recall,precision,auc\n";
    for (std::size_t f = 0; f < fold_metrics.size(); ++f) {
        const FoldMetrics& m = fold_metrics[f];
        csv += std::to_string(f) + ',' + format_double(m.accuracy) + ',' +
               format_double(m.recall) + ',' + format_double(m.precision) + ',' +
               format_double(m.auc) + '\n';
    }
    csv += "mean," + format_double(mean_accuracy) + ',' + format_double(mean_recall) + ',' +
           format_double(mean_precision) + ',' + format_double(mean_auc) + '\n';
    csv += "std," + format_double(std_accuracy) + ',' + format_double(std_recall) + ',' +
           format_double(std_precision) + ',' + format_double(std_auc) + '\n';
    return csv;
}

std::string EvalReport::roc_tsv() const {
    std::string tsv = "fpr\ttpr\n";
    for (const auto& [fpr, tpr] : roc_points)
        tsv += format_double(fpr) + '\t' + format_double(tpr) + '\n';
    return tsv;
}

std::string EvalReport::markdown_table() const {
    std::string md = "| Method | Sampler | Accuracy | Recall | AUC |\n";
    md += "|---|---|---|---|---|\n";
    md += "| " + model + " | " + sampler + " | " + format_fixed(mean_accuracy, 2) + " | " +
          format_fixed(mean_recall, 2) + " | " + format_fixed(mean_auc, 2) + " |\n";
    return md;
}

}  // namespace imbf
