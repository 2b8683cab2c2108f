#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "imbf/classifier.hpp"
#include "imbf/dataset.hpp"
#include "imbf/ensemble.hpp"
#include "imbf/resampling.hpp"

namespace imbf {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

// score >= threshold classifies positive.
ConfusionCounts confusion(std::span<const int> labels, std::span<const double> scores,
                          double threshold = 0.5);

struct BasicMetrics {
    double accuracy = 0.0;
    double recall = 0.0;     // NaN when tp + fn == 0
    double precision = 0.0;  // NaN when tp + fp == 0
};

BasicMetrics basic_metrics(const ConfusionCounts& counts);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) .. (1,1)
    double auc = 0.0;
};

// Thresholds at every distinct score, trapezoidal area. Equal to the
// Mann-Whitney statistic with ties counted half.
RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores);

enum class SamplerChoice { none, smote, smote_kmeans };

std::string sampler_name(SamplerChoice choice);
SamplerChoice sampler_from_name(const std::string& name);

struct SamplerConfig {
    SamplerChoice choice = SamplerChoice::none;
    SmoteKmeansConfig params;
};

ResampleResult apply_sampler(const Dataset& train, const SamplerConfig& config,
                             std::uint64_t seed);

using ModelFactory = std::function<std::unique_ptr<Classifier>(std::uint64_t seed)>;
using ModelChoice = std::variant<ClassifierSpec, EnsembleSpec, ModelFactory>;

std::string model_name(const ModelChoice& model);

struct FoldMetrics {
    ConfusionCounts counts;
    double accuracy = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    double auc = 0.0;
};

// Row-id audit trail for protocol-hygiene checks.
struct FoldTrace {
    std::vector<std::int64_t> test_ids;
    std::vector<std::int64_t> standardizer_fit_ids;
    std::vector<std::int64_t> sampler_output_ids;
};

struct EvalReport {
    std::string sampler;
    std::string model;
    int folds = 0;
    std::uint64_t seed = 0;
    std::vector<FoldMetrics> fold_metrics;
    double mean_accuracy = 0.0, mean_recall = 0.0, mean_precision = 0.0, mean_auc = 0.0;
    double std_accuracy = 0.0, std_recall = 0.0, std_precision = 0.0, std_auc = 0.0;
    std::vector<std::pair<double, double>> roc_points;  // pooled over test folds
    double pooled_auc = 0.0;
    std::vector<FoldTrace> traces;

    std::string metrics_csv() const;
    std::string roc_tsv() const;
    std::string markdown_table() const;
};

struct CrossvalOptions {
    double threshold = 0.5;
    int jobs = 1;  // outer folds run in parallel when > 1
};

// The outer protocol: stratified folds; per fold, standardize on the training
// rows, resample the training portion only, fit, and score the untouched test
// fold. The test fold never reaches the sampler or the standardizer fit.
EvalReport crossval_evaluate(const Dataset& ds, const SamplerConfig& sampler,
                             const ModelChoice& model, int k, std::uint64_t seed,
                             const CrossvalOptions& options = {});

}  // namespace imbf
