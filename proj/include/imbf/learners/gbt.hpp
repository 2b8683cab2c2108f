#pragma once

#include <cstdint>
#include <vector>

#include "imbf/classifier.hpp"
#include "imbf/learners/tree.hpp"

namespace imbf {

struct GbtConfig {
    std::size_t n_rounds = 200;
    double eta = 0.1;
    double lambda = 1.0;  // L2 on leaf weights
    double alpha = 0.0;   // L1 on leaf weights (soft threshold)
    std::size_t max_depth = 4;
    double gamma = 0.0;  // split gain penalty
};

// Leaf weight -soft(G, alpha) / (H + lambda).
double gbt_leaf_weight(double grad_sum, double hess_sum, double lambda, double alpha);

// Gain of splitting (G, H) into (Gl, Hl) and (Gr, Hr), gamma already deducted.
double gbt_split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma);

// Second-order boosting on logistic loss: each round fits a regression tree
// to (g, h) = (p - y, p(1 - p)) and predictions accumulate eta * leaf weight.
class GbtModel : public Classifier {
public:
    GbtModel() = default;
    explicit GbtModel(const ClassifierSpec& spec);

    void fit(const Dataset& ds) override;
    double predict_proba(std::span<const double> row) const override;
    std::string kind() const override { return "gbt"; }
    nlohmann::json to_json() const override;

    double raw_score(std::span<const double> row) const;

    GbtConfig config;
    std::vector<Tree> trees;                // leaf values are unscaled weights
    std::vector<double> loss_history;       // training logloss, index 0 = before boosting
};

std::unique_ptr<GbtModel> gbt_from_json(const nlohmann::json& j);

}  // namespace imbf
