#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "imbf/matrix.hpp"

namespace imbf {

// Labeled tabular dataset, the single currency of the pipeline. Missing cells
// are held as NaN between load and resolve_missing(); every training operation
// rejects datasets that still contain them.
struct Dataset {
    Matrix features;
    std::vector<int> labels;  // 0 = legitimate, 1 = fraud
    std::vector<std::string> feature_names;
    std::vector<std::int64_t> row_ids;
    // One past the largest id ever allocated in this dataset's lineage.
    // Subsetting keeps the bound, so freshly synthesized rows can take ids
    // that collide with nothing else from the same source (>= n_original).
    std::int64_t id_bound = 0;

    std::size_t n_rows() const { return labels.size(); }
    std::size_t n_cols() const { return features.cols(); }

    std::size_t count_label(int value) const;
    bool has_missing() const;

    Dataset subset(const std::vector<std::size_t>& rows) const;

    bool operator==(const Dataset& other) const = default;
};

enum class SchemaMode { kaggle_creditcard, generic };

Dataset load_csv(const std::string& path, SchemaMode mode);

// Same CSV shape load_csv reads. When `provenance` is non-empty it is written
// as an extra trailing `origin` column (one tag per row).
void write_csv(const Dataset& ds, const std::string& path,
               const std::vector<std::string>& provenance = {});

struct ColumnStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;  // population estimator throughout
};

struct InspectionReport {
    std::size_t n_rows = 0;
    std::size_t n_fraud = 0;
    double fraud_fraction = 0.0;
    std::vector<std::size_t> missing_per_column;
    std::vector<ColumnStats> per_column_stats;  // over non-missing cells
};

InspectionReport inspect(const Dataset& ds);

enum class MissingPolicy { reject, drop_rows, mean_impute };

// Applies the chosen policy; `reject` throws if any cell is missing.
Dataset resolve_missing(const Dataset& ds, MissingPolicy policy);

// Throws if the dataset violates training preconditions (empty, missing
// cells, or non-finite values).
void require_trainable(const Dataset& ds);

// require_trainable plus both classes present (DegenerateLabelsError if not).
void require_two_classes(const Dataset& ds);

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std_dev;               // clamped to 1 for constant columns
    std::vector<std::size_t> constant_columns;  // columns whose std was clamped

    void transform_inplace(Dataset& ds) const;
    Dataset transform(const Dataset& ds) const;
    Dataset inverse_transform(const Dataset& ds) const;
};

Standardizer standardizer_fit(const Dataset& train);

struct StandardizeResult {
    Standardizer standardizer;
    Dataset train;
    std::vector<Dataset> applied;
};

// Fits on `train` only and transforms train plus every dataset in `apply_to`
// with the train statistics.
StandardizeResult standardize_fit_transform(const Dataset& train,
                                            const std::vector<const Dataset*>& apply_to = {});

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // row index -> fold in [0, k)

    std::vector<std::size_t> fold_rows(int fold) const;
    std::vector<std::size_t> complement_rows(int fold) const;
};

// Deterministic stratified folds: each class is shuffled under the derived
// seed and dealt round-robin, so per-fold class counts differ by at most one.
FoldPlan stratified_kfold(const Dataset& ds, int k, std::uint64_t seed);

// Two Gaussian blobs with class imbalance: majority ~ N(0, I), minority
// ~ N(separation * 1, I). Desk-scale stand-in for the real data.
Dataset make_synthetic(std::size_t n_major, std::size_t n_minor, std::size_t d,
                       double separation, std::uint64_t seed);

// Keeps every minority row and uniformly samples the majority down to
// `max_majority` rows (no-op when already under the cap).
Dataset subsample_majority(const Dataset& ds, std::size_t max_majority, std::uint64_t seed);

}  // namespace imbf
