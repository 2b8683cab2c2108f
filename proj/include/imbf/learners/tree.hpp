#pragma once

#include <cstdint>
#include <vector>

#include "imbf/classifier.hpp"
#include "imbf/matrix.hpp"
#include "imbf/rng.hpp"

namespace imbf {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf payload: class fraction (CART) or weight (GBT)
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
            idx = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(idx)].value;
    }

    std::size_t depth() const;
    std::size_t leaf_count() const;
};

inline double gini_impurity(std::size_t n_pos, std::size_t n_total) {
    if (n_total == 0) return 0.0;
    double p = static_cast<double>(n_pos) / static_cast<double>(n_total);
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct CartConfig {
    std::size_t max_depth = 8;
    std::size_t min_leaf = 5;
    // 0 means all features; otherwise this many are sampled per split.
    std::size_t features_per_split = 0;
};

struct CartSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

// Best Gini split over the given rows, maximizing impurity decrease; ties go
// to the lowest feature index, then the lowest threshold. `candidates` lists
// the features to consider, in ascending order.
CartSplit best_gini_split(const Matrix& X, const std::vector<int>& y,
                          const std::vector<std::size_t>& rows,
                          const std::vector<int>& candidates, std::size_t min_leaf);

// Grows a CART classification tree. `rng` is only consulted when the config
// asks for per-split feature subsampling.
Tree build_cart(const Matrix& X, const std::vector<int>& y, const std::vector<std::size_t>& rows,
                const CartConfig& config, Rng* rng = nullptr);

nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

class DecisionTreeModel : public Classifier {
public:
    explicit DecisionTreeModel(const ClassifierSpec& spec);
    DecisionTreeModel(Tree tree, CartConfig config) : tree_(std::move(tree)), config_(config) {}

    void fit(const Dataset& ds) override;
    double predict_proba(std::span<const double> row) const override;
    std::string kind() const override { return "decision_tree"; }
    nlohmann::json to_json() const override;
    static std::unique_ptr<DecisionTreeModel> from_json(const nlohmann::json& j);

    const Tree& tree() const { return tree_; }
    const CartConfig& config() const { return config_; }

private:
    Tree tree_;
    CartConfig config_;
};

class RandomForestModel : public Classifier {
public:
    explicit RandomForestModel(const ClassifierSpec& spec);

    void fit(const Dataset& ds) override;
    // Mean of the trees' hard votes, so outputs live on {0, 1/n, ..., 1}.
    double predict_proba(std::span<const double> row) const override;
    std::string kind() const override { return "random_forest"; }
    nlohmann::json to_json() const override;
    static std::unique_ptr<RandomForestModel> from_json(const nlohmann::json& j);

    const std::vector<Tree>& trees() const { return trees_; }
    void set_trees(std::vector<Tree> trees) { trees_ = std::move(trees); }

    std::size_t n_trees = 100;
    CartConfig cart;  // features_per_split 0 resolves to floor(sqrt(d)) at fit
    bool bootstrap = true;
    std::uint64_t seed = 0;

private:
    std::vector<Tree> trees_;
};

}  // namespace imbf
