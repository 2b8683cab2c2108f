#include "imbf/learners/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imbf/learners/linear.hpp"  // sigmoid

namespace imbf {

double gbt_leaf_weight(double grad_sum, double hess_sum, double lambda, double alpha) {
    double g = grad_sum;
    if (g > alpha)
        g -= alpha;
    else if (g < -alpha)
        g += alpha;
    else
        g = 0.0;
    return -g / (hess_sum + lambda);
}

double gbt_split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
    double g = gl + gr, h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma;
}

namespace {

struct GbtBuilder {
    const Matrix& X;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const GbtConfig& cfg;
    Tree tree;

    int build(std::vector<std::size_t>& rows, std::size_t depth) {
        double g_sum = 0.0, h_sum = 0.0;
        for (std::size_t r : rows) {
            g_sum += grad[r];
            h_sum += hess[r];
        }

        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().value = gbt_leaf_weight(g_sum, h_sum, cfg.lambda, cfg.alpha);
        if (depth >= cfg.max_depth || rows.size() < 2) return idx;

        // Exact greedy search over every (feature, boundary) pair.
        int best_f = -1;
        double best_thr = 0.0, best_gain = 0.0;
        std::vector<std::pair<double, std::size_t>> vals(rows.size());
        for (std::size_t f = 0; f < X.cols(); ++f) {
            for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {X(rows[i], f), rows[i]};
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue;
            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                gl += grad[vals[i].second];
                hl += hess[vals[i].second];
                if (vals[i].first == vals[i + 1].first) continue;
                double gain = gbt_split_gain(gl, hl, g_sum - gl, h_sum - hl, cfg.lambda, cfg.gamma);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = static_cast<int>(f);
                    best_thr = (vals[i].first + vals[i + 1].first) / 2.0;
                }
            }
        }
        if (best_f < 0) return idx;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows)
            (X(r, static_cast<std::size_t>(best_f)) < best_thr ? left_rows : right_rows)
                .push_back(r);
        int left = build(left_rows, depth + 1);
        int right = build(right_rows, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
        node.feature = best_f;
        node.threshold = best_thr;
        node.left = left;
        node.right = right;
        return idx;
    }
};

double mean_logloss(const std::vector<double>& raw, const std::vector<int>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double p = std::clamp(sigmoid(raw[i]), 1e-15, 1.0 - 1e-15);
        loss -= y[i] ? std::log(p) : std::log(1.0 - p);
    }
    return loss / static_cast<double>(raw.size());
}

}  // namespace

GbtModel::GbtModel(const ClassifierSpec& spec) {
    config.n_rounds = static_cast<std::size_t>(spec.param_or("n_rounds", 200));
    config.eta = spec.param_or("eta", 0.1);
    config.lambda = spec.param_or("lambda", 1.0);
    config.alpha = spec.param_or("alpha", 0.0);
    config.max_depth = static_cast<std::size_t>(spec.param_or("max_depth", 4));
    config.gamma = spec.param_or("gamma", 0.0);
}

void GbtModel::fit(const Dataset& ds) {
    require_two_classes(ds);
    const std::size_t n = ds.n_rows();
    std::vector<double> raw(n, 0.0), grad(n), hess(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});

    trees.clear();
    loss_history.clear();
    loss_history.push_back(mean_logloss(raw, ds.labels));
    for (std::size_t round = 0; round < config.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = sigmoid(raw[i]);
            grad[i] = p - static_cast<double>(ds.labels[i]);
            hess[i] = p * (1.0 - p);
        }
        GbtBuilder builder{ds.features, grad, hess, config, {}};
        std::vector<std::size_t> rows = all;
        builder.build(rows, 0);
        trees.push_back(std::move(builder.tree));
        for (std::size_t i = 0; i < n; ++i)
            raw[i] += config.eta * trees.back().predict(ds.features.row(i));
        loss_history.push_back(mean_logloss(raw, ds.labels));
    }
}

double GbtModel::raw_score(std::span<const double> row) const {
    double raw = 0.0;
    for (const Tree& t : trees) raw += config.eta * t.predict(row);
    return raw;
}

double GbtModel::predict_proba(std::span<const double> row) const {
    return sigmoid(raw_score(row));
}

nlohmann::json GbtModel::to_json() const {
    nlohmann::json members = nlohmann::json::array();
    for (const Tree& t : trees) members.push_back(tree_to_json(t));
    return {{"format_version", kModelFormatVersion},
            {"kind", kind()},
            {"hyperparameters",
             {{"n_rounds", config.n_rounds},
              {"eta", config.eta},
              {"lambda", config.lambda},
              {"alpha", config.alpha},
              {"max_depth", config.max_depth},
              {"gamma", config.gamma}}},
            {"trees", members}};
}

std::unique_ptr<GbtModel> gbt_from_json(const nlohmann::json& j) {
    auto model = std::make_unique<GbtModel>();
    const auto& hp = j.at("hyperparameters");
    model->config.n_rounds = hp.at("n_rounds").get<std::size_t>();
    model->config.eta = hp.at("eta").get<double>();
    model->config.lambda = hp.at("lambda").get<double>();
    model->config.alpha = hp.at("alpha").get<double>();
    model->config.max_depth = hp.at("max_depth").get<std::size_t>();
    model->config.gamma = hp.at("gamma").get<double>();
    for (const auto& tj : j.at("trees")) model->trees.push_back(tree_from_json(tj));
    return model;
}

}  // namespace imbf
