#include "imbf/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace imbf {

std::vector<std::size_t> knn_indices(const Matrix& points, std::size_t query, std::size_t k) {
    const std::size_t n = points.rows();
    if (k >= n)
        throw NeighborCountError("k = " + std::to_string(k) + " must be < point count " +
                                 std::to_string(n));
    if (k == 0) throw NeighborCountError("k must be >= 1");

    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(n - 1);
    auto q = points.row(query);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == query) continue;
        dist.emplace_back(squared_distance(q, points.row(i)), i);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

std::size_t smote_deficit(std::size_t n_minority, std::size_t n_majority, double target_ratio) {
    double target = std::ceil(target_ratio * static_cast<double>(n_majority));
    if (target <= static_cast<double>(n_minority)) return 0;
    return static_cast<std::size_t>(target) - n_minority;
}

SyntheticBatch smote_generate(const Matrix& minority_rows, std::size_t count,
                              std::size_t k_neighbors, Rng& rng) {
    const std::size_t n = minority_rows.rows();
    if (n < 2) throw SmoteUnderflowError("SMOTE needs at least 2 minority samples, got " +
                                         std::to_string(n));
    if (k_neighbors >= n)
        throw NeighborCountError("k_neighbors = " + std::to_string(k_neighbors) +
                                 " must be < minority count " + std::to_string(n));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    std::vector<std::vector<std::size_t>> knn_cache(n);
    SyntheticBatch batch;
    batch.rows = Matrix(0, minority_rows.cols());
    batch.info.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        std::size_t i = order[j % n];
        auto& neighbors = knn_cache[i];
        if (neighbors.empty()) neighbors = knn_indices(minority_rows, i, k_neighbors);
        std::size_t l = neighbors[rng.uniform_index(neighbors.size())];
        double r = rng.uniform();
        batch.rows.append_row(smote_interpolate(minority_rows.row(i), minority_rows.row(l), r));
        batch.info.push_back({i, l, r});
    }
    return batch;
}

double wcss_of(const Matrix& points, const Matrix& centroids, const std::vector<int>& assignments) {
    double j = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        j += squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(assignments[i])));
    return j;
}

std::size_t kmeans_default_k(std::size_t n_rows) {
    double k = std::round(std::sqrt(static_cast<double>(n_rows) / 2.0));
    return std::max<std::size_t>(2, static_cast<std::size_t>(k));
}

namespace {

std::size_t count_distinct_rows(const Matrix& points) {
    std::vector<std::size_t> idx(points.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        auto ra = points.row(a), rb = points.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(idx.begin(), idx.end(), less);
    std::size_t distinct = points.rows() == 0 ? 0 : 1;
    for (std::size_t i = 1; i < idx.size(); ++i)
        if (less(idx[i - 1], idx[i])) ++distinct;
    return distinct;
}

// k-means++: each next centroid is drawn with probability proportional to the
// squared distance to the nearest already-chosen one.
Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(0, points.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    std::size_t first = rng.uniform_index(n);
    centroids.append_row(points.row(first));
    for (std::size_t chosen = 1; chosen < k; ++chosen) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = squared_distance(points.row(i), centroids.row(chosen - 1));
            d2[i] = std::min(d2[i], d);
            total += d2[i];
        }
        double target = rng.uniform() * total;
        double cum = 0.0;
        std::size_t pick = n;  // falls back to the last positive-weight point
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] == 0.0) continue;
            cum += d2[i];
            pick = i;
            if (cum > target) break;
        }
        centroids.append_row(points.row(pick));
    }
    return centroids;
}

void assign_nearest(const Matrix& points, const Matrix& centroids, std::vector<int>& assignments) {
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto p = points.row(i);
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (std::size_t c = 0; c < centroids.rows(); ++c) {
            double d = squared_distance(p, centroids.row(c));
            if (d < best) {  // ties keep the lowest centroid index
                best = d;
                best_c = static_cast<int>(c);
            }
        }
        assignments[i] = best_c;
    }
}

}  // namespace

KMeansModel kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                       std::size_t max_iter, double tol) {
    const std::size_t n = points.rows();
    if (k < 1) throw ClusterCountError("k must be >= 1");
    if (k > n) throw ClusterCountError("k = " + std::to_string(k) + " exceeds point count");
    if (k > count_distinct_rows(points))
        throw ClusterCountError("k = " + std::to_string(k) + " exceeds distinct point count");

    Rng rng(derive_seed(seed, "kmeans++", k));
    KMeansModel model;
    model.k = k;
    model.centroids = kmeanspp_init(points, k, rng);
    model.assignments.assign(n, 0);

    const std::size_t d = points.cols();
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        assign_nearest(points, model.centroids, model.assignments);
        model.wcss_history.push_back(wcss_of(points, model.centroids, model.assignments));
        ++model.iterations_run;

        Matrix next(k, d, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(model.assignments[i]);
            auto p = points.row(i);
            for (std::size_t j = 0; j < d; ++j) next(c, j) += p[j];
            ++counts[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < d; ++j) next(c, j) /= static_cast<double>(counts[c]);
        }
        // Empty cluster: re-seed at the point farthest from its own centroid.
        std::vector<char> taken(n, 0);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            double far_d = -1.0;
            std::size_t far_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                double dd = squared_distance(
                    points.row(i), model.centroids.row(static_cast<std::size_t>(model.assignments[i])));
                if (dd > far_d) {
                    far_d = dd;
                    far_i = i;
                }
            }
            taken[far_i] = 1;
            for (std::size_t j = 0; j < d; ++j) next(c, j) = points(far_i, j);
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            shift = std::max(shift, std::sqrt(squared_distance(model.centroids.row(c), next.row(c))));
        model.centroids = std::move(next);
        if (shift < tol) break;
    }

    assign_nearest(points, model.centroids, model.assignments);
    model.wcss = wcss_of(points, model.centroids, model.assignments);
    model.wcss_history.push_back(model.wcss);
    return model;
}

std::string provenance_tag(Provenance p) {
    switch (p) {
        case Provenance::original: return "orig";
        case Provenance::synthetic_pass1: return "syn1";
        case Provenance::synthetic_pass2: return "syn2";
    }
    return "?";
}

std::vector<std::string> ResampleResult::provenance_tags() const {
    std::vector<std::string> tags;
    tags.reserve(provenance.size());
    for (Provenance p : provenance) tags.push_back(provenance_tag(p));
    return tags;
}

NoiseFilterResult filter_noise(const Matrix& points, const std::vector<int>& labels,
                               const std::vector<Provenance>& provenance,
                               const KMeansParams& params, double purity_threshold,
                               std::uint64_t seed) {
    const std::size_t n = points.rows();
    if (labels.size() != n || provenance.size() != n)
        throw ShapeError("filter_noise: labels/provenance length mismatch");

    std::size_t k = params.k > 0 ? params.k : kmeans_default_k(n);
    k = std::min(k, count_distinct_rows(points));
    NoiseFilterResult result;
    result.model = kmeans_fit(points, k, seed, params.max_iter, params.tol);

    std::vector<std::size_t> orig_total(k, 0), orig_minor(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (provenance[i] != Provenance::original) continue;
        auto c = static_cast<std::size_t>(result.model.assignments[i]);
        ++orig_total[c];
        if (labels[i] == 1) ++orig_minor[c];
    }
    std::vector<char> cluster_keeps(k, 0);
    for (std::size_t c = 0; c < k; ++c) {
        // No original rows at all counts as fraction 0.
        double fraction = orig_total[c] == 0
                              ? 0.0
                              : static_cast<double>(orig_minor[c]) / static_cast<double>(orig_total[c]);
        cluster_keeps[c] = fraction >= purity_threshold ? 1 : 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (provenance[i] == Provenance::original) continue;
        if (cluster_keeps[static_cast<std::size_t>(result.model.assignments[i])])
            result.kept_synthetic.push_back(i);
        else
            ++result.removed;
    }
    return result;
}

namespace {

struct MinorityPool {
    Matrix rows_std;                    // standardized coordinates, used for distances
    std::vector<std::int64_t> row_ids;  // parallel to rows_std
};

// Appends one synthesized batch to the result, mapping pool indices to row
// ids and allocating fresh ids from the dataset's id bound.
void append_batch(ResampleResult& result, const Standardizer& standardizer,
                  const SyntheticBatch& batch, const MinorityPool& pool, Provenance tag) {
    Dataset& ds = result.dataset;
    for (std::size_t j = 0; j < batch.rows.rows(); ++j) {
        Dataset raw_row;
        raw_row.features = Matrix(1, batch.rows.cols());
        std::copy(batch.rows.row(j).begin(), batch.rows.row(j).end(),
                  raw_row.features.row(0).begin());
        raw_row.labels = {1};
        Dataset back = standardizer.inverse_transform(raw_row);

        ds.features.append_row(back.features.row(0));
        ds.labels.push_back(1);
        std::int64_t id = ds.id_bound++;
        ds.row_ids.push_back(id);
        result.provenance.push_back(tag);
        result.lineage.push_back({id, pool.row_ids[batch.info[j].parent_i],
                                  pool.row_ids[batch.info[j].parent_l], batch.info[j].gap});
    }
}

}  // namespace

ResampleResult identity_resample(const Dataset& train) {
    ResampleResult result;
    result.dataset = train;
    result.provenance.assign(train.n_rows(), Provenance::original);
    return result;
}

ResampleResult smote_resample(const Dataset& train, const SmoteConfig& config) {
    require_trainable(train);
    if (config.target_ratio <= 0.0 || config.target_ratio > 1.0)
        throw ConfigError("target_ratio must be in (0, 1]");

    std::size_t n_min = train.count_label(1);
    std::size_t n_maj = train.n_rows() - n_min;
    std::size_t need = smote_deficit(n_min, n_maj, config.target_ratio);
    ResampleResult result = identity_resample(train);
    if (need == 0) return result;
    if (n_min < 2) throw SmoteUnderflowError("SMOTE needs at least 2 minority samples");

    Standardizer standardizer = standardizer_fit(train);
    Dataset train_std = standardizer.transform(train);
    MinorityPool pool;
    pool.rows_std = Matrix(0, train.n_cols());
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
        if (train.labels[i] != 1) continue;
        pool.rows_std.append_row(train_std.features.row(i));
        pool.row_ids.push_back(train.row_ids[i]);
    }

    Rng rng(derive_seed(config.seed, "smote_pass", 1));
    SyntheticBatch batch = smote_generate(pool.rows_std, need, config.k_neighbors, rng);
    append_batch(result, standardizer, batch, pool, Provenance::synthetic_pass1);
    return result;
}

ResampleResult smote_kmeans_resample(const Dataset& train, const SmoteKmeansConfig& config) {
    require_trainable(train);
    const SmoteConfig& sc = config.smote;
    if (sc.target_ratio <= 0.0 || sc.target_ratio > 1.0)
        throw ConfigError("target_ratio must be in (0, 1]");

    std::size_t n_min = train.count_label(1);
    std::size_t n_maj = train.n_rows() - n_min;
    std::size_t need = smote_deficit(n_min, n_maj, sc.target_ratio);
    ResampleResult result = identity_resample(train);
    if (need == 0) return result;
    if (n_min < 2 || n_maj < 2)
        throw SmoteUnderflowError("SMOTE-KMEANS needs at least 2 rows of each class");

    Standardizer standardizer = standardizer_fit(train);
    Dataset train_std = standardizer.transform(train);

    MinorityPool pool;
    pool.rows_std = Matrix(0, train.n_cols());
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
        if (train.labels[i] != 1) continue;
        pool.rows_std.append_row(train_std.features.row(i));
        pool.row_ids.push_back(train.row_ids[i]);
    }

    // Pass 1: oversample, then let k-means veto synthetics that landed in
    // majority-dominated clusters.
    Rng rng1(derive_seed(sc.seed, "smote_pass", 1));
    SyntheticBatch batch1 = smote_generate(pool.rows_std, need, sc.k_neighbors, rng1);

    Matrix combined = train_std.features;
    std::vector<int> combined_labels = train.labels;
    std::vector<Provenance> combined_prov(train.n_rows(), Provenance::original);
    for (std::size_t j = 0; j < batch1.rows.rows(); ++j) {
        combined.append_row(batch1.rows.row(j));
        combined_labels.push_back(1);
        combined_prov.push_back(Provenance::synthetic_pass1);
    }
    NoiseFilterResult filtered =
        filter_noise(combined, combined_labels, combined_prov, config.kmeans,
                     config.purity_threshold, derive_seed(sc.seed, "kmeans_filter", 0));
    result.removed_as_noise = filtered.removed;

    // Reserve ids for every pass-1 row (survivors keep theirs, removed ids
    // are simply never reused).
    std::int64_t pass1_base = result.dataset.id_bound;
    result.dataset.id_bound += static_cast<std::int64_t>(batch1.rows.rows());

    SyntheticBatch survivors;
    survivors.rows = Matrix(0, train.n_cols());
    std::vector<std::int64_t> survivor_ids;
    for (std::size_t idx : filtered.kept_synthetic) {
        std::size_t j = idx - train.n_rows();  // synthetic rows follow the originals
        survivors.rows.append_row(batch1.rows.row(j));
        survivors.info.push_back(batch1.info[j]);
        survivor_ids.push_back(pass1_base + static_cast<std::int64_t>(j));
    }

    {
        // Temporarily hand out the reserved ids in survivor order.
        Dataset& ds = result.dataset;
        for (std::size_t j = 0; j < survivors.rows.rows(); ++j) {
            Dataset raw_row;
            raw_row.features = Matrix(1, survivors.rows.cols());
            std::copy(survivors.rows.row(j).begin(), survivors.rows.row(j).end(),
                      raw_row.features.row(0).begin());
            raw_row.labels = {1};
            Dataset back = standardizer.inverse_transform(raw_row);
            ds.features.append_row(back.features.row(0));
            ds.labels.push_back(1);
            ds.row_ids.push_back(survivor_ids[j]);
            result.provenance.push_back(Provenance::synthetic_pass1);
            result.lineage.push_back({survivor_ids[j], pool.row_ids[survivors.info[j].parent_i],
                                      pool.row_ids[survivors.info[j].parent_l],
                                      survivors.info[j].gap});
        }
    }

    // Pass 2: top up from the merged pool (original minority + survivors).
    MinorityPool pool2 = pool;
    for (std::size_t j = 0; j < survivors.rows.rows(); ++j) {
        pool2.rows_std.append_row(survivors.rows.row(j));
        pool2.row_ids.push_back(survivor_ids[j]);
    }
    std::size_t merged_min = n_min + survivors.rows.rows();
    std::size_t need2 = smote_deficit(merged_min, n_maj, sc.target_ratio);
    if (need2 > 0) {
        Rng rng2(derive_seed(sc.seed, "smote_pass", 2));
        SyntheticBatch batch2 = smote_generate(pool2.rows_std, need2, sc.k_neighbors, rng2);
        append_batch(result, standardizer, batch2, pool2, Provenance::synthetic_pass2);
    }
    return result;
}

}  // namespace imbf
