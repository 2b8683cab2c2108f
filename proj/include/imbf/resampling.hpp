#pragma once

#include <cstdint>
#include <vector>

#include "imbf/dataset.hpp"
#include "imbf/matrix.hpp"
#include "imbf/rng.hpp"

namespace imbf {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // desired minority/majority count ratio
    std::uint64_t seed = 0;
};

struct KMeansParams {
    std::size_t k = 0;  // 0 -> max(2, round(sqrt(n/2)))
    std::size_t max_iter = 100;
    double tol = 1e-4;
};

struct SmoteKmeansConfig {
    SmoteConfig smote;
    KMeansParams kmeans;
    double purity_threshold = 0.5;
};

// Indices of the k nearest rows to `query` (query excluded), sorted by
// ascending distance, ties broken by ascending row index.
std::vector<std::size_t> knn_indices(const Matrix& points, std::size_t query, std::size_t k);

inline std::vector<double> smote_interpolate(std::span<const double> xi,
                                             std::span<const double> xl, double r) {
    std::vector<double> out(xi.size());
    for (std::size_t c = 0; c < xi.size(); ++c) out[c] = xi[c] + r * (xl[c] - xi[c]);
    return out;
}

struct SyntheticRowInfo {
    std::size_t parent_i;  // index of x_i within the minority pool
    std::size_t parent_l;  // index of the chosen neighbor x_l
    double gap;            // r in [0, 1)
};

struct SyntheticBatch {
    Matrix rows;
    std::vector<SyntheticRowInfo> info;
};

// Synthesizes `count` minority rows: x_s = x_i + r * (x_l - x_i), with x_i
// cycling over a shuffled order of the pool and x_l drawn uniformly from
// x_i's k nearest minority neighbors.
SyntheticBatch smote_generate(const Matrix& minority_rows, std::size_t count,
                              std::size_t k_neighbors, Rng& rng);

// Rows still needed to reach target_ratio * n_majority minority rows.
std::size_t smote_deficit(std::size_t n_minority, std::size_t n_majority, double target_ratio);

struct KMeansModel {
    std::size_t k = 0;
    Matrix centroids;
    std::vector<int> assignments;
    double wcss = 0.0;
    std::size_t iterations_run = 0;
    std::vector<double> wcss_history;  // one value per Lloyd iteration, plus the final state
};

double wcss_of(const Matrix& points, const Matrix& centroids, const std::vector<int>& assignments);

KMeansModel kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                       std::size_t max_iter = 100, double tol = 1e-4);

std::size_t kmeans_default_k(std::size_t n_rows);

enum class Provenance { original, synthetic_pass1, synthetic_pass2 };

std::string provenance_tag(Provenance p);  // "orig" | "syn1" | "syn2"

struct NoiseFilterResult {
    std::vector<std::size_t> kept_synthetic;  // row indices into the combined set
    std::size_t removed = 0;
    KMeansModel model;
};

// Clusters all rows, then scores each cluster by the minority fraction of the
// ORIGINAL rows it contains. Synthetic rows in clusters below the purity
// threshold (or with no original rows at all) are dropped; original rows are
// never touched.
NoiseFilterResult filter_noise(const Matrix& points, const std::vector<int>& labels,
                               const std::vector<Provenance>& provenance,
                               const KMeansParams& params, double purity_threshold,
                               std::uint64_t seed);

struct SyntheticLineage {
    std::int64_t row_id;
    std::int64_t parent_a;  // row id of x_i
    std::int64_t parent_b;  // row id of x_l
    double gap;
};

struct ResampleResult {
    Dataset dataset;  // original rows first, unchanged, then surviving synthetics
    std::vector<Provenance> provenance;
    std::size_t removed_as_noise = 0;
    std::vector<SyntheticLineage> lineage;  // one entry per synthetic row kept

    std::vector<std::string> provenance_tags() const;
};

// Plain SMOTE: one synthesis pass, no noise filtering.
ResampleResult smote_resample(const Dataset& train, const SmoteConfig& config);

// The full clean-and-balance pipeline: SMOTE, k-means noise removal over
// original + synthetic rows, merge, then a second SMOTE pass (drawing
// neighbors from original plus surviving synthetic minority rows) to top the
// minority back up to target_ratio * majority. Distances are computed on
// internally standardized features.
ResampleResult smote_kmeans_resample(const Dataset& train, const SmoteKmeansConfig& config);

// Passthrough with provenance, for sampler = none.
ResampleResult identity_resample(const Dataset& train);

}  // namespace imbf
