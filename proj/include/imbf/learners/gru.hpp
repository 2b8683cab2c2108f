#pragma once

#include <cstdint>
#include <vector>

#include "imbf/classifier.hpp"
#include "imbf/matrix.hpp"

namespace imbf {

// Gate weights act on the concatenation [h_{t-1}, x_t], so each W is
// hidden x (hidden + input).
struct GruParams {
    std::size_t hidden = 0;
    std::size_t input = 0;
    Matrix Wz, Wr, Wc;
    std::vector<double> bz, br, bc;

    std::size_t param_count() const { return 3 * hidden * (hidden + input) + 3 * hidden; }
};

// One GRU step:
//   z = sigma(Wz [h, x] + bz)
//   r = sigma(Wr [h, x] + br)
//   hc = tanh(Wc [r .* h, x] + bc)
//   h' = (1 - z) .* h + z .* hc
std::vector<double> gru_step(const GruParams& params, std::span<const double> h_prev,
                             std::span<const double> x_t);

// Per-step activations recorded during the forward pass; everything the
// backward pass needs to replay the sequence.
struct GruTape {
    Matrix h_prev, z, r, hcand;  // seq_len x hidden each

    void resize(std::size_t seq_len, std::size_t hidden) {
        h_prev = Matrix(seq_len, hidden);
        z = Matrix(seq_len, hidden);
        r = Matrix(seq_len, hidden);
        hcand = Matrix(seq_len, hidden);
    }
};

struct GruGrads {
    Matrix Wz, Wr, Wc;
    std::vector<double> bz, br, bc;

    void resize_like(const GruParams& p);
    void add_scaled(const GruGrads& other, double scale);
    void scale(double s);
};

// Runs the GRU over a scalar sequence, recording the tape. Returns the final
// hidden state.
std::vector<double> gru_run(const GruParams& params, std::span<const double> sequence,
                            GruTape* tape = nullptr);

// Backpropagation through time from a gradient on the final hidden state.
void gru_backward(const GruParams& params, std::span<const double> sequence, const GruTape& tape,
                  std::span<const double> dh_final, GruGrads& grads);

// Bidirectional GRU over each row treated as a length-d sequence of scalars,
// final forward/backward states concatenated into a dense sigmoid head.
class BiGruModel : public Classifier {
public:
    BiGruModel() = default;
    explicit BiGruModel(const ClassifierSpec& spec);

    void fit(const Dataset& ds) override;
    double predict_proba(std::span<const double> row) const override;
    std::string kind() const override { return "bigru"; }
    nlohmann::json to_json() const override;

    // (final forward state, final backward state) for one row.
    std::pair<std::vector<double>, std::vector<double>> encode(std::span<const double> row) const;

    void init_params(std::size_t input_dim, std::uint64_t init_seed);

    std::size_t param_count() const;
    std::vector<double> get_params() const;
    void set_params(std::span<const double> flat);

    // Mean cross-entropy over the given rows plus its gradient in the
    // flattened parameter layout of get_params().
    double loss_and_grad(const Matrix& X, const std::vector<int>& y,
                         const std::vector<std::size_t>& rows, std::vector<double>& grad) const;

    std::size_t hidden = 16;
    std::size_t epochs = 30;
    double lr = 0.1;
    std::size_t batch = 64;
    std::uint64_t seed = 0;

    GruParams fwd, bwd;
    std::vector<double> head_w;  // size 2 * hidden
    double head_b = 0.0;
    std::size_t seq_len = 0;
};

std::unique_ptr<BiGruModel> bigru_from_json(const nlohmann::json& j);

}  // namespace imbf
