#include "imbf/learners/gru.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imbf/learners/linear.hpp"  // sigmoid
#include "imbf/rng.hpp"

namespace imbf {

namespace {

// y = W [h, x] + b, where W is hidden x (hidden + input).
void gate_preactivation(const Matrix& W, const std::vector<double>& bias,
                        std::span<const double> h, std::span<const double> x,
                        std::span<double> out) {
    const std::size_t hidden = W.rows();
    const std::size_t input = W.cols() - h.size();
    for (std::size_t i = 0; i < hidden; ++i) {
        double acc = bias[i];
        auto wrow = W.row(i);
        for (std::size_t j = 0; j < h.size(); ++j) acc += wrow[j] * h[j];
        for (std::size_t j = 0; j < input; ++j) acc += wrow[h.size() + j] * x[j];
        out[i] = acc;
    }
}

void glorot_fill(Matrix& W, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : W.data()) v = (2.0 * rng.uniform() - 1.0) * limit;
}

}  // namespace

std::vector<double> gru_step(const GruParams& params, std::span<const double> h_prev,
                             std::span<const double> x_t) {
    const std::size_t hidden = params.hidden;
    if (h_prev.size() != hidden || x_t.size() != params.input ||
        params.Wz.rows() != hidden || params.Wz.cols() != hidden + params.input ||
        params.Wr.rows() != hidden || params.Wr.cols() != hidden + params.input ||
        params.Wc.rows() != hidden || params.Wc.cols() != hidden + params.input ||
        params.bz.size() != hidden || params.br.size() != hidden || params.bc.size() != hidden)
        throw ShapeError("gru_step: inconsistent parameter dimensions");

    std::vector<double> z(hidden), r(hidden), rh(hidden), hc(hidden), h(hidden);
    gate_preactivation(params.Wz, params.bz, h_prev, x_t, z);
    gate_preactivation(params.Wr, params.br, h_prev, x_t, r);
    for (std::size_t i = 0; i < hidden; ++i) {
        z[i] = sigmoid(z[i]);
        r[i] = sigmoid(r[i]);
        rh[i] = r[i] * h_prev[i];
    }
    gate_preactivation(params.Wc, params.bc, rh, x_t, hc);
    for (std::size_t i = 0; i < hidden; ++i) {
        hc[i] = std::tanh(hc[i]);
        h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];
    }
    return h;
}

void GruGrads::resize_like(const GruParams& p) {
    Wz = Matrix(p.hidden, p.hidden + p.input);
    Wr = Matrix(p.hidden, p.hidden + p.input);
    Wc = Matrix(p.hidden, p.hidden + p.input);
    bz.assign(p.hidden, 0.0);
    br.assign(p.hidden, 0.0);
    bc.assign(p.hidden, 0.0);
}

void GruGrads::add_scaled(const GruGrads& other, double scale) {
    auto axpy = [scale](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    };
    axpy(Wz.data(), other.Wz.data());
    axpy(Wr.data(), other.Wr.data());
    axpy(Wc.data(), other.Wc.data());
    axpy(bz, other.bz);
    axpy(br, other.br);
    axpy(bc, other.bc);
}

void GruGrads::scale(double s) {
    for (double& v : Wz.data()) v *= s;
    for (double& v : Wr.data()) v *= s;
    for (double& v : Wc.data()) v *= s;
    for (double& v : bz) v *= s;
    for (double& v : br) v *= s;
    for (double& v : bc) v *= s;
}

std::vector<double> gru_run(const GruParams& params, std::span<const double> sequence,
                            GruTape* tape) {
    const std::size_t hidden = params.hidden;
    const std::size_t steps = sequence.size() / params.input;
    if (tape) tape->resize(steps, hidden);

    std::vector<double> h(hidden, 0.0);
    std::vector<double> z(hidden), r(hidden), rh(hidden), hc(hidden);
    for (std::size_t t = 0; t < steps; ++t) {
        auto x_t = sequence.subspan(t * params.input, params.input);
        gate_preactivation(params.Wz, params.bz, h, x_t, z);
        gate_preactivation(params.Wr, params.br, h, x_t, r);
        for (std::size_t i = 0; i < hidden; ++i) {
            z[i] = sigmoid(z[i]);
            r[i] = sigmoid(r[i]);
            rh[i] = r[i] * h[i];
        }
        gate_preactivation(params.Wc, params.bc, rh, x_t, hc);
        for (std::size_t i = 0; i < hidden; ++i) hc[i] = std::tanh(hc[i]);
        if (tape) {
            std::copy(h.begin(), h.end(), tape->h_prev.row(t).begin());
            std::copy(z.begin(), z.end(), tape->z.row(t).begin());
            std::copy(r.begin(), r.end(), tape->r.row(t).begin());
            std::copy(hc.begin(), hc.end(), tape->hcand.row(t).begin());
        }
        for (std::size_t i = 0; i < hidden; ++i) h[i] = (1.0 - z[i]) * h[i] + z[i] * hc[i];
    }
    return h;
}

void gru_backward(const GruParams& params, std::span<const double> sequence, const GruTape& tape,
                  std::span<const double> dh_final, GruGrads& grads) {
    const std::size_t hidden = params.hidden;
    const std::size_t input = params.input;
    const std::size_t steps = sequence.size() / input;

    std::vector<double> dh(dh_final.begin(), dh_final.end());
    std::vector<double> da_z(hidden), da_r(hidden), da_c(hidden), dh_next(hidden), drh(hidden);
    for (std::size_t t = steps; t-- > 0;) {
        auto x_t = sequence.subspan(t * input, input);
        auto h_prev = tape.h_prev.row(t);
        auto z = tape.z.row(t);
        auto r = tape.r.row(t);
        auto hc = tape.hcand.row(t);

        // h = (1 - z) .* h_prev + z .* hc
        for (std::size_t i = 0; i < hidden; ++i) {
            double dz = dh[i] * (hc[i] - h_prev[i]);
            double dhc = dh[i] * z[i];
            dh_next[i] = dh[i] * (1.0 - z[i]);
            da_c[i] = dhc * (1.0 - hc[i] * hc[i]);
            da_z[i] = dz * z[i] * (1.0 - z[i]);
        }
        // hc = tanh(Wc [r .* h_prev, x] + bc)
        for (std::size_t i = 0; i < hidden; ++i) {
            auto wrow = grads.Wc.row(i);
            for (std::size_t j = 0; j < hidden; ++j) wrow[j] += da_c[i] * r[j] * h_prev[j];
            for (std::size_t j = 0; j < input; ++j) wrow[hidden + j] += da_c[i] * x_t[j];
            grads.bc[i] += da_c[i];
        }
        for (std::size_t j = 0; j < hidden; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < hidden; ++i) acc += params.Wc(i, j) * da_c[i];
            drh[j] = acc;
        }
        for (std::size_t j = 0; j < hidden; ++j) {
            double dr = drh[j] * h_prev[j];
            da_r[j] = dr * r[j] * (1.0 - r[j]);
            dh_next[j] += drh[j] * r[j];
        }
        // z and r gates share the [h_prev, x] input layout.
        for (std::size_t i = 0; i < hidden; ++i) {
            auto zrow = grads.Wz.row(i);
            auto rrow = grads.Wr.row(i);
            for (std::size_t j = 0; j < hidden; ++j) {
                zrow[j] += da_z[i] * h_prev[j];
                rrow[j] += da_r[i] * h_prev[j];
            }
            for (std::size_t j = 0; j < input; ++j) {
                zrow[hidden + j] += da_z[i] * x_t[j];
                rrow[hidden + j] += da_r[i] * x_t[j];
            }
            grads.bz[i] += da_z[i];
            grads.br[i] += da_r[i];
        }
        for (std::size_t j = 0; j < hidden; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < hidden; ++i)
                acc += params.Wz(i, j) * da_z[i] + params.Wr(i, j) * da_r[i];
            dh_next[j] += acc;
        }
        dh = dh_next;
    }
}

BiGruModel::BiGruModel(const ClassifierSpec& spec) {
    hidden = static_cast<std::size_t>(spec.param_or("hidden", 16));
    epochs = static_cast<std::size_t>(spec.param_or("epochs", 30));
    lr = spec.param_or("lr", 0.1);
    batch = static_cast<std::size_t>(spec.param_or("batch", 64));
    seed = spec.seed;
}

void BiGruModel::init_params(std::size_t input_dim, std::uint64_t init_seed) {
    seq_len = input_dim;
    Rng rng(derive_seed(init_seed, "bigru_init", hidden));
    auto init_dir = [&](GruParams& p) {
        p.hidden = hidden;
        p.input = 1;
        p.Wz = Matrix(hidden, hidden + 1);
        p.Wr = Matrix(hidden, hidden + 1);
        p.Wc = Matrix(hidden, hidden + 1);
        glorot_fill(p.Wz, hidden + 1, hidden, rng);
        glorot_fill(p.Wr, hidden + 1, hidden, rng);
        glorot_fill(p.Wc, hidden + 1, hidden, rng);
        p.bz.assign(hidden, 0.0);
        p.br.assign(hidden, 0.0);
        p.bc.assign(hidden, 0.0);
    };
    init_dir(fwd);
    init_dir(bwd);
    head_w.assign(2 * hidden, 0.0);
    double limit = std::sqrt(6.0 / static_cast<double>(2 * hidden + 1));
    for (double& v : head_w) v = (2.0 * rng.uniform() - 1.0) * limit;
    head_b = 0.0;
}

std::pair<std::vector<double>, std::vector<double>> BiGruModel::encode(
    std::span<const double> row) const {
    if (row.size() != seq_len) throw ShapeError("bigru: feature dimension mismatch");
    std::vector<double> reversed(row.rbegin(), row.rend());
    return {gru_run(fwd, row), gru_run(bwd, reversed)};
}

double BiGruModel::predict_proba(std::span<const double> row) const {
    auto [hf, hb] = encode(row);
    double logit = head_b;
    for (std::size_t i = 0; i < hidden; ++i)
        logit += head_w[i] * hf[i] + head_w[hidden + i] * hb[i];
    return sigmoid(logit);
}

std::size_t BiGruModel::param_count() const {
    return fwd.param_count() + bwd.param_count() + head_w.size() + 1;
}

namespace {

void flatten_dir(const GruParams& p, std::vector<double>& out) {
    out.insert(out.end(), p.Wz.data().begin(), p.Wz.data().end());
    out.insert(out.end(), p.Wr.data().begin(), p.Wr.data().end());
    out.insert(out.end(), p.Wc.data().begin(), p.Wc.data().end());
    out.insert(out.end(), p.bz.begin(), p.bz.end());
    out.insert(out.end(), p.br.begin(), p.br.end());
    out.insert(out.end(), p.bc.begin(), p.bc.end());
}

void flatten_grads(const GruGrads& g, std::vector<double>& out) {
    out.insert(out.end(), g.Wz.data().begin(), g.Wz.data().end());
    out.insert(out.end(), g.Wr.data().begin(), g.Wr.data().end());
    out.insert(out.end(), g.Wc.data().begin(), g.Wc.data().end());
    out.insert(out.end(), g.bz.begin(), g.bz.end());
    out.insert(out.end(), g.br.begin(), g.br.end());
    out.insert(out.end(), g.bc.begin(), g.bc.end());
}

std::size_t unflatten_dir(GruParams& p, std::span<const double> flat, std::size_t off) {
    auto take_mat = [&](Matrix& m) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + m.data().size()),
                  m.data().begin());
        off += m.data().size();
    };
    auto take_vec = [&](std::vector<double>& v) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + v.size()), v.begin());
        off += v.size();
    };
    take_mat(p.Wz);
    take_mat(p.Wr);
    take_mat(p.Wc);
    take_vec(p.bz);
    take_vec(p.br);
    take_vec(p.bc);
    return off;
}

}  // namespace

std::vector<double> BiGruModel::get_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    flatten_dir(fwd, out);
    flatten_dir(bwd, out);
    out.insert(out.end(), head_w.begin(), head_w.end());
    out.push_back(head_b);
    return out;
}

void BiGruModel::set_params(std::span<const double> flat) {
    if (flat.size() != param_count()) throw ShapeError("bigru: parameter vector size mismatch");
    std::size_t off = unflatten_dir(fwd, flat, 0);
    off = unflatten_dir(bwd, flat, off);
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + head_w.size()), head_w.begin());
    off += head_w.size();
    head_b = flat[off];
}

double BiGruModel::loss_and_grad(const Matrix& X, const std::vector<int>& y,
                                 const std::vector<std::size_t>& rows,
                                 std::vector<double>& grad) const {
    GruGrads gf, gb;
    gf.resize_like(fwd);
    gb.resize_like(bwd);
    std::vector<double> ghead(head_w.size(), 0.0);
    double ghead_b = 0.0;
    double loss = 0.0;

    GruTape tape_f, tape_b;
    std::vector<double> dh_f(hidden), dh_b(hidden);
    for (std::size_t r : rows) {
        auto row = X.row(r);
        std::vector<double> reversed(row.rbegin(), row.rend());
        std::vector<double> hf = gru_run(fwd, row, &tape_f);
        std::vector<double> hb = gru_run(bwd, reversed, &tape_b);

        double logit = head_b;
        for (std::size_t i = 0; i < hidden; ++i)
            logit += head_w[i] * hf[i] + head_w[hidden + i] * hb[i];
        double p = sigmoid(logit);
        double pc = std::clamp(p, 1e-15, 1.0 - 1e-15);
        loss -= y[r] ? std::log(pc) : std::log(1.0 - pc);

        double dlogit = p - static_cast<double>(y[r]);
        for (std::size_t i = 0; i < hidden; ++i) {
            ghead[i] += dlogit * hf[i];
            ghead[hidden + i] += dlogit * hb[i];
            dh_f[i] = dlogit * head_w[i];
            dh_b[i] = dlogit * head_w[hidden + i];
        }
        ghead_b += dlogit;
        gru_backward(fwd, row, tape_f, dh_f, gf);
        gru_backward(bwd, reversed, tape_b, dh_b, gb);
    }

    const auto n = static_cast<double>(rows.size());
    gf.scale(1.0 / n);
    gb.scale(1.0 / n);
    grad.clear();
    grad.reserve(param_count());
    flatten_grads(gf, grad);
    flatten_grads(gb, grad);
    for (double v : ghead) grad.push_back(v / n);
    grad.push_back(ghead_b / n);
    return loss / n;
}

void BiGruModel::fit(const Dataset& ds) {
    require_two_classes(ds);
    init_params(ds.n_cols(), seed);

    const std::size_t n = ds.n_rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "bigru_batches", 0));

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
                throw DivergenceError("bigru training diverged; try a lower lr");
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
            set_params(params);
        }
    }
}

nlohmann::json BiGruModel::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", kind()},
            {"hyperparameters",
             {{"hidden", hidden},
              {"epochs", epochs},
              {"lr", lr},
              {"batch", batch},
              {"seed", seed},
              {"seq_len", seq_len}}},
            {"params", get_params()}};
}

std::unique_ptr<BiGruModel> bigru_from_json(const nlohmann::json& j) {
    auto model = std::make_unique<BiGruModel>();
    const auto& hp = j.at("hyperparameters");
    model->hidden = hp.at("hidden").get<std::size_t>();
    model->epochs = hp.at("epochs").get<std::size_t>();
    model->lr = hp.at("lr").get<double>();
    model->batch = hp.at("batch").get<std::size_t>();
    model->seed = hp.at("seed").get<std::uint64_t>();
    model->init_params(hp.at("seq_len").get<std::size_t>(), model->seed);
    auto params = j.at("params").get<std::vector<double>>();
    model->set_params(params);
    return model;
}

}  // namespace imbf
