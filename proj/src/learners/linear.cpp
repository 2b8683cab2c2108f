#include "imbf/learners/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imbf/rng.hpp"

namespace imbf {

double logistic_loss_and_grad(const Matrix& X, const std::vector<int>& y,
                              std::span<const double> w, double b, double l2,
                              std::span<double> grad_w, double& grad_b) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = X.row(i);
        double z = b;
        for (std::size_t c = 0; c < d; ++c) z += w[c] * row[c];
        double p = sigmoid(z);
        double pc = std::clamp(p, 1e-15, 1.0 - 1e-15);
        loss -= y[i] ? std::log(pc) : std::log(1.0 - pc);
        double err = p - static_cast<double>(y[i]);
        for (std::size_t c = 0; c < d; ++c) grad_w[c] += err * row[c];
        grad_b += err;
    }
    loss /= static_cast<double>(n);
    grad_b /= static_cast<double>(n);
    double reg = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        grad_w[c] = grad_w[c] / static_cast<double>(n) + l2 * w[c];
        reg += w[c] * w[c];
    }
    return loss + 0.5 * l2 * reg;  // bias excluded from regularization
}

namespace {

// Shared mini-batch loop for the two linear models. step(rows) applies one
// update from the given batch.
template <typename Step>
void minibatch_epochs(std::size_t n, std::size_t epochs, std::size_t batch, std::uint64_t seed,
                      Step step) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "minibatch", 0));
    std::vector<std::size_t> rows;
    for (std::size_t e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            std::size_t stop = std::min(n, start + batch);
            rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
            step(rows);
        }
    }
}

// One-dimensional logistic link p = sigma(a * m + c), fitted by plain
// gradient descent on cross-entropy.
std::pair<double, double> fit_logistic_link(const std::vector<double>& margins,
                                            const std::vector<int>& y) {
    double a = 1.0, c = 0.0;
    const auto n = static_cast<double>(margins.size());
    for (int iter = 0; iter < 500; ++iter) {
        double ga = 0.0, gc = 0.0;
        for (std::size_t i = 0; i < margins.size(); ++i) {
            double err = sigmoid(a * margins[i] + c) - static_cast<double>(y[i]);
            ga += err * margins[i];
            gc += err;
        }
        a -= 0.5 * ga / n;
        c -= 0.5 * gc / n;
        if (!std::isfinite(a) || !std::isfinite(c))
            throw DivergenceError("svm score calibration diverged");
    }
    return {a, c};
}

}  // namespace

LogisticModel::LogisticModel(const ClassifierSpec& spec) {
    epochs = static_cast<std::size_t>(spec.param_or("epochs", 200));
    lr = spec.param_or("lr", 0.5);
    l2 = spec.param_or("l2", 1e-4);
    batch = static_cast<std::size_t>(spec.param_or("batch", 64));
    seed = spec.seed;
}

void LogisticModel::fit(const Dataset& ds) {
    require_two_classes(ds);
    const std::size_t n = ds.n_rows();
    const std::size_t d = ds.n_cols();
    w.assign(d, 0.0);
    b = 0.0;

    std::vector<double> gw(d);
    minibatch_epochs(n, epochs, batch, seed, [&](const std::vector<std::size_t>& rows) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t r : rows) {
            auto row = ds.features.row(r);
            double z = b;
            for (std::size_t c = 0; c < d; ++c) z += w[c] * row[c];
            double err = sigmoid(z) - static_cast<double>(ds.labels[r]);
            for (std::size_t c = 0; c < d; ++c) gw[c] += err * row[c];
            gb += err;
        }
        const auto m = static_cast<double>(rows.size());
        for (std::size_t c = 0; c < d; ++c) w[c] -= lr * (gw[c] / m + l2 * w[c]);
        b -= lr * (gb / m);
        for (double v : w)
            if (!std::isfinite(v))
                throw DivergenceError("logistic training diverged; try a lower lr");
    });
}

double LogisticModel::predict_proba(std::span<const double> row) const {
    double z = b;
    for (std::size_t c = 0; c < row.size(); ++c) z += w[c] * row[c];
    return sigmoid(z);
}

nlohmann::json LogisticModel::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", kind()},
            {"hyperparameters",
             {{"epochs", epochs}, {"lr", lr}, {"l2", l2}, {"batch", batch}, {"seed", seed}}},
            {"weights", w},
            {"bias", b}};
}

std::unique_ptr<LogisticModel> logistic_from_json(const nlohmann::json& j) {
    auto model = std::make_unique<LogisticModel>();
    const auto& hp = j.at("hyperparameters");
    model->epochs = hp.at("epochs").get<std::size_t>();
    model->lr = hp.at("lr").get<double>();
    model->l2 = hp.at("l2").get<double>();
    model->batch = hp.at("batch").get<std::size_t>();
    model->seed = hp.at("seed").get<std::uint64_t>();
    model->w = j.at("weights").get<std::vector<double>>();
    model->b = j.at("bias").get<double>();
    return model;
}

LinearSvmModel::LinearSvmModel(const ClassifierSpec& spec) {
    epochs = static_cast<std::size_t>(spec.param_or("epochs", 200));
    lr = spec.param_or("lr", 0.1);
    reg = spec.param_or("reg", 1e-3);
    batch = static_cast<std::size_t>(spec.param_or("batch", 64));
    seed = spec.seed;
}

void LinearSvmModel::fit(const Dataset& ds) {
    require_two_classes(ds);
    const std::size_t n = ds.n_rows();
    const std::size_t d = ds.n_cols();
    w.assign(d, 0.0);
    b = 0.0;

    std::vector<double> gw(d);
    minibatch_epochs(n, epochs, batch, seed, [&](const std::vector<std::size_t>& rows) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t r : rows) {
            auto row = ds.features.row(r);
            double s = ds.labels[r] ? 1.0 : -1.0;
            double m = b;
            for (std::size_t c = 0; c < d; ++c) m += w[c] * row[c];
            if (s * m < 1.0) {
                for (std::size_t c = 0; c < d; ++c) gw[c] -= s * row[c];
                gb -= s;
            }
        }
        const auto m = static_cast<double>(rows.size());
        for (std::size_t c = 0; c < d; ++c) w[c] -= lr * (gw[c] / m + reg * w[c]);
        b -= lr * (gb / m);
        for (double v : w)
            if (!std::isfinite(v)) throw DivergenceError("svm training diverged; try a lower lr");
    });

    std::vector<double> margins(n);
    for (std::size_t i = 0; i < n; ++i) margins[i] = margin(ds.features.row(i));
    std::tie(link_scale, link_offset) = fit_logistic_link(margins, ds.labels);
}

double LinearSvmModel::margin(std::span<const double> row) const {
    double m = b;
    for (std::size_t c = 0; c < row.size(); ++c) m += w[c] * row[c];
    return m;
}

double LinearSvmModel::predict_proba(std::span<const double> row) const {
    return sigmoid(link_scale * margin(row) + link_offset);
}

nlohmann::json LinearSvmModel::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", kind()},
            {"hyperparameters",
             {{"epochs", epochs}, {"lr", lr}, {"reg", reg}, {"batch", batch}, {"seed", seed}}},
            {"weights", w},
            {"bias", b},
            {"link_scale", link_scale},
            {"link_offset", link_offset}};
}

std::unique_ptr<LinearSvmModel> linear_svm_from_json(const nlohmann::json& j) {
    auto model = std::make_unique<LinearSvmModel>();
    const auto& hp = j.at("hyperparameters");
    model->epochs = hp.at("epochs").get<std::size_t>();
    model->lr = hp.at("lr").get<double>();
    model->reg = hp.at("reg").get<double>();
    model->batch = hp.at("batch").get<std::size_t>();
    model->seed = hp.at("seed").get<std::uint64_t>();
    model->w = j.at("weights").get<std::vector<double>>();
    model->b = j.at("bias").get<double>();
    model->link_scale = j.at("link_scale").get<double>();
    model->link_offset = j.at("link_offset").get<double>();
    return model;
}

}  // namespace imbf
