#include "imbf/learners/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imbf/learners/linear.hpp"  // sigmoid
#include "imbf/rng.hpp"

namespace imbf {

Cnn1dModel::Cnn1dModel(const ClassifierSpec& spec) {
    filters = static_cast<std::size_t>(spec.param_or("filters", 8));
    kernel = static_cast<std::size_t>(spec.param_or("kernel", 3));
    epochs = static_cast<std::size_t>(spec.param_or("epochs", 30));
    lr = spec.param_or("lr", 0.1);
    batch = static_cast<std::size_t>(spec.param_or("batch", 64));
    seed = spec.seed;
}

void Cnn1dModel::init_params(std::size_t d, std::uint64_t init_seed) {
    if (d < kernel)
        throw ShapeError("cnn1d: input dimension " + std::to_string(d) +
                         " is smaller than kernel " + std::to_string(kernel));
    input_dim = d;
    const std::size_t pooled = pooled_length(d, kernel);
    if (pooled == 0) throw ShapeError("cnn1d: pooled output would be empty; input too short");

    Rng rng(derive_seed(init_seed, "cnn_init", filters));
    conv_w = Matrix(filters, kernel);
    double limit = std::sqrt(6.0 / static_cast<double>(kernel + filters * kernel));
    for (double& v : conv_w.data()) v = (2.0 * rng.uniform() - 1.0) * limit;
    conv_b.assign(filters, 0.0);

    head_w.assign(filters * pooled, 0.0);
    limit = std::sqrt(6.0 / static_cast<double>(head_w.size() + 1));
    for (double& v : head_w) v = (2.0 * rng.uniform() - 1.0) * limit;
    head_b = 0.0;
}

Matrix Cnn1dModel::conv_map(std::span<const double> row) const {
    if (row.size() != input_dim) throw ShapeError("cnn1d: feature dimension mismatch");
    const std::size_t conv_len = input_dim - kernel + 1;
    Matrix out(filters, conv_len);
    for (std::size_t f = 0; f < filters; ++f) {
        auto w = conv_w.row(f);
        for (std::size_t t = 0; t < conv_len; ++t) {
            double acc = conv_b[f];
            for (std::size_t j = 0; j < kernel; ++j) acc += w[j] * row[t + j];
            out(f, t) = acc;
        }
    }
    return out;
}

double Cnn1dModel::predict_proba(std::span<const double> row) const {
    Matrix conv = conv_map(row);
    const std::size_t pooled = pooled_length(input_dim, kernel);
    double logit = head_b;
    for (std::size_t f = 0; f < filters; ++f) {
        for (std::size_t t = 0; t < pooled; ++t) {
            double a = std::max(0.0, conv(f, 2 * t));
            double b = std::max(0.0, conv(f, 2 * t + 1));
            logit += head_w[f * pooled + t] * std::max(a, b);
        }
    }
    return sigmoid(logit);
}

std::size_t Cnn1dModel::param_count() const {
    return conv_w.data().size() + conv_b.size() + head_w.size() + 1;
}

std::vector<double> Cnn1dModel::get_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    out.insert(out.end(), conv_w.data().begin(), conv_w.data().end());
    out.insert(out.end(), conv_b.begin(), conv_b.end());
    out.insert(out.end(), head_w.begin(), head_w.end());
    out.push_back(head_b);
    return out;
}

void Cnn1dModel::set_params(std::span<const double> flat) {
    if (flat.size() != param_count()) throw ShapeError("cnn1d: parameter vector size mismatch");
    std::size_t off = 0;
    std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(conv_w.data().size()),
              conv_w.data().begin());
    off += conv_w.data().size();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + conv_b.size()), conv_b.begin());
    off += conv_b.size();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + head_w.size()), head_w.begin());
    off += head_w.size();
    head_b = flat[off];
}

double Cnn1dModel::loss_and_grad(const Matrix& X, const std::vector<int>& y,
                                 const std::vector<std::size_t>& rows,
                                 std::vector<double>& grad) const {
    const std::size_t pooled = pooled_length(input_dim, kernel);

    Matrix g_conv_w(filters, kernel);
    std::vector<double> g_conv_b(filters, 0.0);
    std::vector<double> g_head_w(head_w.size(), 0.0);
    double g_head_b = 0.0;
    double loss = 0.0;

    for (std::size_t r : rows) {
        auto row = X.row(r);
        Matrix conv = conv_map(row);
        // relu + max-pool, keeping the winning position for backprop
        std::vector<double> z(filters * pooled);
        std::vector<std::size_t> win(filters * pooled);
        double logit = head_b;
        for (std::size_t f = 0; f < filters; ++f) {
            for (std::size_t t = 0; t < pooled; ++t) {
                double a = std::max(0.0, conv(f, 2 * t));
                double b = std::max(0.0, conv(f, 2 * t + 1));
                std::size_t idx = f * pooled + t;
                // ties go to the earlier position
                if (a >= b) {
                    z[idx] = a;
                    win[idx] = 2 * t;
                } else {
                    z[idx] = b;
                    win[idx] = 2 * t + 1;
                }
                logit += head_w[idx] * z[idx];
            }
        }
        double p = sigmoid(logit);
        double pc = std::clamp(p, 1e-15, 1.0 - 1e-15);
        loss -= y[r] ? std::log(pc) : std::log(1.0 - pc);

        double dlogit = p - static_cast<double>(y[r]);
        g_head_b += dlogit;
        for (std::size_t f = 0; f < filters; ++f) {
            for (std::size_t t = 0; t < pooled; ++t) {
                std::size_t idx = f * pooled + t;
                g_head_w[idx] += dlogit * z[idx];
                // gradient flows only through the pooled winner, and only if
                // relu was active there
                std::size_t pos = win[idx];
                if (conv(f, pos) <= 0.0) continue;
                double dconv = dlogit * head_w[idx];
                for (std::size_t j = 0; j < kernel; ++j) g_conv_w(f, j) += dconv * row[pos + j];
                g_conv_b[f] += dconv;
            }
        }
    }

    const auto n = static_cast<double>(rows.size());
    grad.clear();
    grad.reserve(param_count());
    for (double v : g_conv_w.data()) grad.push_back(v / n);
    for (double v : g_conv_b) grad.push_back(v / n);
    for (double v : g_head_w) grad.push_back(v / n);
    grad.push_back(g_head_b / n);
    return loss / n;
}

void Cnn1dModel::fit(const Dataset& ds) {
    require_two_classes(ds);
    init_params(ds.n_cols(), seed);

    const std::size_t n = ds.n_rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "cnn_batches", 0));

    std::vector<double> params = get_params();
    std::vector<double> grad;
    std::vector<std::size_t> rows;
    for (std::size_t e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            std::size_t stop = std::min(n, start + batch);
            rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
            double loss = loss_and_grad(ds.features, ds.labels, rows, grad);
            if (!std::isfinite(loss))
                throw DivergenceError("cnn1d training diverged; try a lower lr");
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
            set_params(params);
        }
    }
}

nlohmann::json Cnn1dModel::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", kind()},
            {"hyperparameters",
             {{"filters", filters},
              {"kernel", kernel},
              {"epochs", epochs},
              {"lr", lr},
              {"batch", batch},
              {"seed", seed},
              {"input_dim", input_dim}}},
            {"params", get_params()}};
}

std::unique_ptr<Cnn1dModel> cnn1d_from_json(const nlohmann::json& j) {
    auto model = std::make_unique<Cnn1dModel>();
    const auto& hp = j.at("hyperparameters");
    model->filters = hp.at("filters").get<std::size_t>();
    model->kernel = hp.at("kernel").get<std::size_t>();
    model->epochs = hp.at("epochs").get<std::size_t>();
    model->lr = hp.at("lr").get<double>();
    model->batch = hp.at("batch").get<std::size_t>();
    model->seed = hp.at("seed").get<std::uint64_t>();
    model->init_params(hp.at("input_dim").get<std::size_t>(), model->seed);
    auto params = j.at("params").get<std::vector<double>>();
    model->set_params(params);
    return model;
}

}  // namespace imbf
