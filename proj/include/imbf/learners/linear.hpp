#pragma once

#include <cstdint>
#include <vector>

#include "imbf/classifier.hpp"

namespace imbf {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// Full-batch L2-regularized cross-entropy and its gradient; the training loop
// and the finite-difference tests share this one definition.
double logistic_loss_and_grad(const Matrix& X, const std::vector<int>& y,
                              std::span<const double> w, double b, double l2,
                              std::span<double> grad_w, double& grad_b);

class LogisticModel : public Classifier {
public:
    LogisticModel() = default;
    explicit LogisticModel(const ClassifierSpec& spec);

    void fit(const Dataset& ds) override;
    double predict_proba(std::span<const double> row) const override;
    std::string kind() const override { return "logistic"; }
    nlohmann::json to_json() const override;

    std::size_t epochs = 200;
    double lr = 0.5;
    double l2 = 1e-4;
    std::size_t batch = 64;
    std::uint64_t seed = 0;

    std::vector<double> w;
    double b = 0.0;
};

// Hinge-loss linear classifier trained by mini-batch subgradient descent.
// Raw margins are mapped to [0, 1] by a one-dimensional logistic link fitted
// on the training margins after the main loop.
class LinearSvmModel : public Classifier {
public:
    LinearSvmModel() = default;
    explicit LinearSvmModel(const ClassifierSpec& spec);

    void fit(const Dataset& ds) override;
    double predict_proba(std::span<const double> row) const override;
    std::string kind() const override { return "linear_svm"; }
    nlohmann::json to_json() const override;

    double margin(std::span<const double> row) const;

    std::size_t epochs = 200;
    double lr = 0.1;
    double reg = 1e-3;
    std::size_t batch = 64;
    std::uint64_t seed = 0;

    std::vector<double> w;
    double b = 0.0;
    double link_scale = 1.0;   // a in sigma(a * margin + c)
    double link_offset = 0.0;  // c
};

std::unique_ptr<LogisticModel> logistic_from_json(const nlohmann::json& j);
std::unique_ptr<LinearSvmModel> linear_svm_from_json(const nlohmann::json& j);

}  // namespace imbf
