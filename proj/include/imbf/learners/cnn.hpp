#pragma once

#include <cstdint>
#include <vector>

#include "imbf/classifier.hpp"
#include "imbf/matrix.hpp"

namespace imbf {

// 1-D convolution over the feature vector -> ReLU -> max-pool (width 2)
// -> dense sigmoid head.
class Cnn1dModel : public Classifier {
public:
    Cnn1dModel() = default;
    explicit Cnn1dModel(const ClassifierSpec& spec);

    void fit(const Dataset& ds) override;
    double predict_proba(std::span<const double> row) const override;
    std::string kind() const override { return "cnn1d"; }
    nlohmann::json to_json() const override;

    // Pre-activation convolution map, filters x (d - kernel + 1).
    Matrix conv_map(std::span<const double> row) const;

    void init_params(std::size_t input_dim, std::uint64_t init_seed);

    std::size_t param_count() const;
    std::vector<double> get_params() const;
    void set_params(std::span<const double> flat);

    double loss_and_grad(const Matrix& X, const std::vector<int>& y,
                         const std::vector<std::size_t>& rows, std::vector<double>& grad) const;

    static std::size_t pooled_length(std::size_t input_dim, std::size_t kernel) {
        return (input_dim - kernel + 1) / 2;
    }

    std::size_t filters = 8;
    std::size_t kernel = 3;
    std::size_t epochs = 30;
    double lr = 0.1;
    std::size_t batch = 64;
    std::uint64_t seed = 0;

    Matrix conv_w;               // filters x kernel
    std::vector<double> conv_b;  // per filter
    std::vector<double> head_w;  // filters * pooled_len
    double head_b = 0.0;
    std::size_t input_dim = 0;
};

std::unique_ptr<Cnn1dModel> cnn1d_from_json(const nlohmann::json& j);

}  // namespace imbf
