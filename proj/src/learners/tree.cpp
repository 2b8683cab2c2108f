#include "imbf/learners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace imbf {

namespace {

std::size_t node_depth(const std::vector<TreeNode>& nodes, int idx) {
    const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
    if (n.feature < 0) return 0;
    return 1 + std::max(node_depth(nodes, n.left), node_depth(nodes, n.right));
}

}  // namespace

std::size_t Tree::depth() const { return nodes.empty() ? 0 : node_depth(nodes, 0); }

std::size_t Tree::leaf_count() const {
    std::size_t c = 0;
    for (const TreeNode& n : nodes)
        if (n.feature < 0) ++c;
    return c;
}

CartSplit best_gini_split(const Matrix& X, const std::vector<int>& y,
                          const std::vector<std::size_t>& rows,
                          const std::vector<int>& candidates, std::size_t min_leaf) {
    const std::size_t n = rows.size();
    std::size_t n_pos = 0;
    for (std::size_t r : rows) n_pos += static_cast<std::size_t>(y[r]);
    const double parent = gini_impurity(n_pos, n);

    CartSplit best;
    std::vector<std::pair<double, int>> vals(n);  // (value, label), sorted per feature
    for (int f : candidates) {
        for (std::size_t i = 0; i < n; ++i)
            vals[i] = {X(rows[i], static_cast<std::size_t>(f)), y[rows[i]]};
        std::sort(vals.begin(), vals.end());
        if (vals.front().first == vals.back().first) continue;

        std::size_t left_n = 0, left_pos = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            ++left_n;
            left_pos += static_cast<std::size_t>(vals[i].second);
            if (vals[i].first == vals[i + 1].first) continue;  // not a boundary
            std::size_t right_n = n - left_n;
            if (left_n < min_leaf || right_n < min_leaf) continue;
            std::size_t right_pos = n_pos - left_pos;
            double weighted = (static_cast<double>(left_n) * gini_impurity(left_pos, left_n) +
                               static_cast<double>(right_n) * gini_impurity(right_pos, right_n)) /
                              static_cast<double>(n);
            double decrease = parent - weighted;
            // Strict > keeps the lowest feature index / lowest threshold on ties,
            // because candidates and thresholds are scanned in ascending order.
            if (decrease > best.impurity_decrease ||
                (!best.found && decrease > 0.0)) {
                best.found = true;
                best.feature = f;
                best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                best.impurity_decrease = decrease;
            }
        }
    }
    return best;
}

namespace {

struct CartBuilder {
    const Matrix& X;
    const std::vector<int>& y;
    const CartConfig& config;
    Rng* rng;
    Tree tree;

    std::vector<int> sample_features() {
        const std::size_t d = X.cols();
        std::size_t m = config.features_per_split;
        if (m == 0 || m >= d || rng == nullptr) {
            std::vector<int> all(d);
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        // Partial Fisher-Yates for m distinct features, then ascending order
        // so tie-breaking stays by feature index.
        std::vector<int> pool(d);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t j = i + rng->uniform_index(d - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    int build(const std::vector<std::size_t>& rows, std::size_t depth) {
        std::size_t n_pos = 0;
        for (std::size_t r : rows) n_pos += static_cast<std::size_t>(y[r]);

        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().value = static_cast<double>(n_pos) / static_cast<double>(rows.size());

        if (depth >= config.max_depth || n_pos == 0 || n_pos == rows.size() ||
            rows.size() < 2 * config.min_leaf)
            return idx;

        CartSplit split = best_gini_split(X, y, rows, sample_features(), config.min_leaf);
        if (!split.found) return idx;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            if (X(r, static_cast<std::size_t>(split.feature)) < split.threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        int left = build(left_rows, depth + 1);
        int right = build(right_rows, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return idx;
    }
};

}  // namespace

nlohmann::json tree_to_json(const Tree& tree) {
    nlohmann::json features = nlohmann::json::array();
    nlohmann::json thresholds = nlohmann::json::array();
    nlohmann::json lefts = nlohmann::json::array();
    nlohmann::json rights = nlohmann::json::array();
    nlohmann::json values = nlohmann::json::array();
    for (const TreeNode& n : tree.nodes) {
        features.push_back(n.feature);
        thresholds.push_back(n.threshold);
        lefts.push_back(n.left);
        rights.push_back(n.right);
        values.push_back(n.value);
    }
    return {{"feature", features},
            {"threshold", thresholds},
            {"left", lefts},
            {"right", rights},
            {"value", values}};
}

Tree tree_from_json(const nlohmann::json& j) {
    Tree tree;
    const auto& features = j.at("feature");
    for (std::size_t i = 0; i < features.size(); ++i) {
        TreeNode n;
        n.feature = features[i].get<int>();
        n.threshold = j.at("threshold")[i].get<double>();
        n.left = j.at("left")[i].get<int>();
        n.right = j.at("right")[i].get<int>();
        n.value = j.at("value")[i].get<double>();
        tree.nodes.push_back(n);
    }
    return tree;
}

Tree build_cart(const Matrix& X, const std::vector<int>& y, const std::vector<std::size_t>& rows,
                const CartConfig& config, Rng* rng) {
    CartBuilder builder{X, y, config, rng, {}};
    builder.build(rows, 0);
    return builder.tree;
}

DecisionTreeModel::DecisionTreeModel(const ClassifierSpec& spec) {
    config_.max_depth = static_cast<std::size_t>(spec.param_or("max_depth", 8));
    config_.min_leaf = static_cast<std::size_t>(spec.param_or("min_leaf", 5));
}

void DecisionTreeModel::fit(const Dataset& ds) {
    require_two_classes(ds);
    std::vector<std::size_t> rows(ds.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    tree_ = build_cart(ds.features, ds.labels, rows, config_);
}

double DecisionTreeModel::predict_proba(std::span<const double> row) const {
    return tree_.predict(row);
}

nlohmann::json DecisionTreeModel::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", kind()},
            {"hyperparameters",
             {{"max_depth", config_.max_depth}, {"min_leaf", config_.min_leaf}}},
            {"tree", tree_to_json(tree_)}};
}

RandomForestModel::RandomForestModel(const ClassifierSpec& spec) {
    n_trees = static_cast<std::size_t>(spec.param_or("n_trees", 100));
    cart.max_depth = static_cast<std::size_t>(spec.param_or("max_depth", 8));
    cart.min_leaf = static_cast<std::size_t>(spec.param_or("min_leaf", 5));
    cart.features_per_split = static_cast<std::size_t>(spec.param_or("features_per_split", 0));
    bootstrap = spec.param_or("bootstrap", 1) != 0;
    seed = spec.seed;
}

void RandomForestModel::fit(const Dataset& ds) {
    require_two_classes(ds);
    const std::size_t n = ds.n_rows();
    CartConfig tree_cfg = cart;
    if (tree_cfg.features_per_split == 0) {
        auto m = static_cast<std::size_t>(std::sqrt(static_cast<double>(ds.n_cols())));
        tree_cfg.features_per_split = std::max<std::size_t>(1, m);
    }
    trees_.clear();
    trees_.reserve(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng(derive_seed(seed, "rf_tree", t));
        std::vector<std::size_t> rows(n);
        if (bootstrap)
            for (std::size_t i = 0; i < n; ++i) rows[i] = rng.uniform_index(n);
        else
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        trees_.push_back(build_cart(ds.features, ds.labels, rows, tree_cfg, &rng));
    }
}

double RandomForestModel::predict_proba(std::span<const double> row) const {
    std::size_t votes = 0;
    for (const Tree& t : trees_)
        if (t.predict(row) >= 0.5) ++votes;
    return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

nlohmann::json RandomForestModel::to_json() const {
    nlohmann::json members = nlohmann::json::array();
    for (const Tree& t : trees_) members.push_back(tree_to_json(t));
    return {{"format_version", kModelFormatVersion},
            {"kind", kind()},
            {"hyperparameters",
             {{"n_trees", n_trees},
              {"max_depth", cart.max_depth},
              {"min_leaf", cart.min_leaf},
              {"features_per_split", cart.features_per_split},
              {"bootstrap", bootstrap ? 1 : 0},
              {"seed", seed}}},
            {"trees", members}};
}

std::unique_ptr<DecisionTreeModel> DecisionTreeModel::from_json(const nlohmann::json& j) {
    CartConfig cfg;
    cfg.max_depth = j.at("hyperparameters").at("max_depth").get<std::size_t>();
    cfg.min_leaf = j.at("hyperparameters").at("min_leaf").get<std::size_t>();
    return std::make_unique<DecisionTreeModel>(tree_from_json(j.at("tree")), cfg);
}

std::unique_ptr<RandomForestModel> RandomForestModel::from_json(const nlohmann::json& j) {
    ClassifierSpec spec;
    spec.kind = ClassifierKind::random_forest;
    auto model = std::make_unique<RandomForestModel>(spec);
    const auto& hp = j.at("hyperparameters");
    model->n_trees = hp.at("n_trees").get<std::size_t>();
    model->cart.max_depth = hp.at("max_depth").get<std::size_t>();
    model->cart.min_leaf = hp.at("min_leaf").get<std::size_t>();
    model->cart.features_per_split = hp.at("features_per_split").get<std::size_t>();
    model->bootstrap = hp.at("bootstrap").get<int>() != 0;
    model->seed = hp.at("seed").get<std::uint64_t>();
    std::vector<Tree> trees;
    for (const auto& tj : j.at("trees")) trees.push_back(tree_from_json(tj));
    model->set_trees(std::move(trees));
    return model;
}

}  // namespace imbf
