// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <string>
#include <vector>

namespace wdmlab::rnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Dataset make_windows(const std::vector<SymbolStream>& in_lanes,
                     const std::vector<SymbolStream>& target_lanes, const WindowSpec& spec,
                     int stride_override) {
    if (in_lanes.empty() || target_lanes.empty())
        throw ConfigError("make_windows: need at least one lane");
    if (spec.window_len < 1 || spec.window_len % 2 == 0)
        throw ConfigError("make_windows: window length must be odd");
    if (spec.edge_discard < 0 || spec.l_eff() < 1)
        throw ConfigError("make_windows: edge discard leaves no central symbols");

    const size_t n = in_lanes[0].size();
    for (const auto& lane : in_lanes)
        if (lane.size() != n) throw ConfigError("make_windows: input lane length mismatch");
    for (const auto& lane : target_lanes)
        if (lane.size() != n) throw ConfigError("make_windows: target lane length mismatch");

    const int l = spec.window_len;
    if (n < size_t(l)) throw ConfigError("make_windows: stream shorter than one window");
    const int stride = stride_override > 0 ? stride_override : spec.l_eff();

    Dataset ds;
    ds.window_len = l;
    ds.edge_discard = spec.edge_discard;
    ds.stride = stride;
    ds.n_features = 2 * int(in_lanes.size());
    ds.n_outputs = 2 * int(target_lanes.size());
    ds.n_words = (n - size_t(l)) / size_t(stride) + 1;
    ds.inputs.resize(ds.n_words * size_t(l) * size_t(ds.n_features));
    ds.targets.resize(ds.n_words * size_t(l) * size_t(ds.n_outputs));

    for (size_t w = 0; w < ds.n_words; ++w) {
        const size_t s0 = w * size_t(stride);
        double* in = &ds.inputs[w * size_t(l) * size_t(ds.n_features)];
        double* tg = &ds.targets[w * size_t(l) * size_t(ds.n_outputs)];
        for (int t = 0; t < l; ++t) {
            for (size_t lane = 0; lane < in_lanes.size(); ++lane) {
                const cd v = in_lanes[lane][s0 + size_t(t)];
                *in++ = v.real();
                *in++ = v.imag();
            }
            for (size_t lane = 0; lane < target_lanes.size(); ++lane) {
                const cd v = target_lanes[lane][s0 + size_t(t)];
                *tg++ = v.real();
                *tg++ = v.imag();
            }
        }
    }
    return ds;
}

namespace {

MatrixXd glorot(int rows, int cols, double fan_in, double fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = (2.0 * rng.unit() - 1.0) * limit;
    return m;
}

MatrixXd orthogonal(int n, Rng& rng) {
    MatrixXd g(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g(r, c) = rng.gaussian();
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
    const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < n; ++c)
        if (r(c, c) < 0.0) q.col(c) *= -1.0;
    return q;
}

}  // namespace

BiVrnnModel init_model(int hidden, int n_features, int n_outputs, Seed seed) {
    if (hidden < 1 || n_features < 1 || n_outputs < 1 || n_outputs % 2 != 0)
        throw ConfigError("init_model: bad dimensions");
    Rng rng(seed);
    BiVrnnModel m;
    m.hidden = hidden;
    m.n_features = n_features;
    m.n_outputs = n_outputs;
    m.w_fwd = orthogonal(hidden, rng);
    m.u_fwd = glorot(hidden, n_features, n_features, hidden, rng);
    m.w_bwd = orthogonal(hidden, rng);
    m.u_bwd = glorot(hidden, n_features, n_features, hidden, rng);
    m.head_w = glorot(n_outputs, 2 * hidden, 2.0 * hidden, 2.0, rng);
    m.head_b = VectorXd::Zero(n_outputs);
    return m;
}

namespace {

struct BatchBuffers {
    std::vector<MatrixXd> x;    // L of F x B
    std::vector<MatrixXd> tgt;  // L of y x B
    std::vector<MatrixXd> hf, hb, err;
};

/// Gather words from a dataset into per-time-step matrices.
void gather(const Dataset& ds, const size_t* words, size_t b, BatchBuffers& buf) {
    const int l = ds.window_len;
    const int f = ds.n_features;
    const int y = ds.n_outputs;
    buf.x.assign(size_t(l), MatrixXd(f, Eigen::Index(b)));
    buf.tgt.assign(size_t(l), MatrixXd(y, Eigen::Index(b)));
    for (size_t col = 0; col < b; ++col) {
        const double* in = ds.word_in(words[col]);
        const double* tg = ds.word_target(words[col]);
        for (int t = 0; t < l; ++t) {
            for (int j = 0; j < f; ++j) buf.x[size_t(t)](j, Eigen::Index(col)) = *in++;
            for (int j = 0; j < y; ++j) buf.tgt[size_t(t)](j, Eigen::Index(col)) = *tg++;
        }
    }
}

/// Forward pass over a gathered batch; fills hf/hb/err and returns the total
/// squared error. When grads is non-null, accumulates exact BPTT gradients of
/// mean-over-(L*y*B) squared error.
double batch_pass(const BiVrnnModel& m, BatchBuffers& buf, int l, size_t b,
                  Gradients* grads) {
    const int h = m.hidden;
    const auto bi = Eigen::Index(b);
    buf.hf.assign(size_t(l), MatrixXd(h, bi));
    buf.hb.assign(size_t(l), MatrixXd(h, bi));
    buf.err.assign(size_t(l), MatrixXd(m.n_outputs, bi));

    MatrixXd pre(h, bi);
    for (int t = 0; t < l; ++t) {
        pre.noalias() = m.u_fwd * buf.x[size_t(t)];
        if (t > 0) pre.noalias() += m.w_fwd * buf.hf[size_t(t - 1)];
        buf.hf[size_t(t)] = pre.array().tanh();
    }
    for (int t = l - 1; t >= 0; --t) {
        pre.noalias() = m.u_bwd * buf.x[size_t(t)];
        if (t + 1 < l) pre.noalias() += m.w_bwd * buf.hb[size_t(t + 1)];
        buf.hb[size_t(t)] = pre.array().tanh();
    }

    const auto head_f = m.head_w.leftCols(h);
    const auto head_b_blk = m.head_w.rightCols(h);
    double sum_sq = 0.0;
    for (int t = 0; t < l; ++t) {
        MatrixXd z = head_f * buf.hf[size_t(t)] + head_b_blk * buf.hb[size_t(t)];
        z.colwise() += m.head_b;
        buf.err[size_t(t)] = z - buf.tgt[size_t(t)];
        sum_sq += buf.err[size_t(t)].squaredNorm();
    }
    if (!grads) return sum_sq;

    const double scale = 2.0 / (double(l) * double(m.n_outputs) * double(b));
    grads->w_fwd = MatrixXd::Zero(h, h);
    grads->u_fwd = MatrixXd::Zero(h, m.n_features);
    grads->w_bwd = MatrixXd::Zero(h, h);
    grads->u_bwd = MatrixXd::Zero(h, m.n_features);
    grads->head_w = MatrixXd::Zero(m.n_outputs, 2 * h);
    grads->head_b = VectorXd::Zero(m.n_outputs);

    std::vector<MatrixXd> gf(static_cast<size_t>(l)), gb(static_cast<size_t>(l));
    for (int t = 0; t < l; ++t) {
        const MatrixXd dz = scale * buf.err[size_t(t)];
        grads->head_w.leftCols(h).noalias() += dz * buf.hf[size_t(t)].transpose();
        grads->head_w.rightCols(h).noalias() += dz * buf.hb[size_t(t)].transpose();
        grads->head_b.noalias() += dz.rowwise().sum();
        gf[size_t(t)].noalias() = head_f.transpose() * dz;
        gb[size_t(t)].noalias() = head_b_blk.transpose() * dz;
    }

    MatrixXd carry = MatrixXd::Zero(h, bi);
    MatrixXd da(h, bi);
    for (int t = l - 1; t >= 0; --t) {
        const MatrixXd g = gf[size_t(t)] + carry;
        da = g.array() * (1.0 - buf.hf[size_t(t)].array().square());
        if (t > 0) grads->w_fwd.noalias() += da * buf.hf[size_t(t - 1)].transpose();
        grads->u_fwd.noalias() += da * buf.x[size_t(t)].transpose();
        carry.noalias() = m.w_fwd.transpose() * da;
    }
    carry.setZero();
    for (int t = 0; t < l; ++t) {
        const MatrixXd g = gb[size_t(t)] + carry;
        da = g.array() * (1.0 - buf.hb[size_t(t)].array().square());
        if (t + 1 < l) grads->w_bwd.noalias() += da * buf.hb[size_t(t + 1)].transpose();
        grads->u_bwd.noalias() += da * buf.x[size_t(t)].transpose();
        carry.noalias() = m.w_bwd.transpose() * da;
    }
    return sum_sq;
}

}  // namespace

Eigen::MatrixXd forward(const BiVrnnModel& model, const double* word, int window_len) {
    const int l = window_len;
    const int h = model.hidden;
    const int f = model.n_features;
    std::vector<VectorXd> hf(static_cast<size_t>(l)), hb(static_cast<size_t>(l));
    VectorXd x(f);
    for (int t = 0; t < l; ++t) {
        for (int j = 0; j < f; ++j) x(j) = word[size_t(t) * size_t(f) + size_t(j)];
        VectorXd pre = model.u_fwd * x;
        if (t > 0) pre.noalias() += model.w_fwd * hf[size_t(t - 1)];
        hf[size_t(t)] = pre.array().tanh();
    }
    for (int t = l - 1; t >= 0; --t) {
        for (int j = 0; j < f; ++j) x(j) = word[size_t(t) * size_t(f) + size_t(j)];
        VectorXd pre = model.u_bwd * x;
        if (t + 1 < l) pre.noalias() += model.w_bwd * hb[size_t(t + 1)];
        hb[size_t(t)] = pre.array().tanh();
    }
    MatrixXd out(l, model.n_outputs);
    for (int t = 0; t < l; ++t) {
        VectorXd cat(2 * h);
        cat << hf[size_t(t)], hb[size_t(t)];
        out.row(t) = (model.head_w * cat + model.head_b).transpose();
    }
    return out;
}

double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw ConfigError("mse_loss: shape mismatch");
    return (pred - target).squaredNorm() / double(pred.size());
}

Gradients bptt_gradients(const BiVrnnModel& model, const double* word, const double* target,
                         int window_len) {
    Dataset one;
    one.window_len = window_len;
    one.n_features = model.n_features;
    one.n_outputs = model.n_outputs;
    one.n_words = 1;
    one.stride = 1;
    const size_t nf = size_t(window_len) * size_t(model.n_features);
    const size_t ny = size_t(window_len) * size_t(model.n_outputs);
    one.inputs.assign(word, word + nf);
    one.targets.assign(target, target + ny);

    BatchBuffers buf;
    const size_t w0 = 0;
    gather(one, &w0, 1, buf);
    Gradients g;
    batch_pass(model, buf, window_len, 1, &g);
    return g;
}

namespace {

template <typename Fn>
void for_each_block(BiVrnnModel& m, Gradients& g, Gradients& adam_m, Gradients& adam_v, Fn fn) {
    fn(m.w_fwd, g.w_fwd, adam_m.w_fwd, adam_v.w_fwd);
    fn(m.u_fwd, g.u_fwd, adam_m.u_fwd, adam_v.u_fwd);
    fn(m.w_bwd, g.w_bwd, adam_m.w_bwd, adam_v.w_bwd);
    fn(m.u_bwd, g.u_bwd, adam_m.u_bwd, adam_v.u_bwd);
    fn(m.head_w, g.head_w, adam_m.head_w, adam_v.head_w);
}

Gradients zeros_like(const BiVrnnModel& m) {
    Gradients g;
    g.w_fwd = MatrixXd::Zero(m.hidden, m.hidden);
    g.u_fwd = MatrixXd::Zero(m.hidden, m.n_features);
    g.w_bwd = MatrixXd::Zero(m.hidden, m.hidden);
    g.u_bwd = MatrixXd::Zero(m.hidden, m.n_features);
    g.head_w = MatrixXd::Zero(m.n_outputs, 2 * m.hidden);
    g.head_b = VectorXd::Zero(m.n_outputs);
    return g;
}

double dataset_mse(const BiVrnnModel& m, const Dataset& ds) {
    BatchBuffers buf;
    const size_t block = 256;
    std::vector<size_t> idx(block);
    double sum = 0.0;
    for (size_t w0 = 0; w0 < ds.n_words; w0 += block) {
        const size_t b = std::min(block, ds.n_words - w0);
        for (size_t i = 0; i < b; ++i) idx[i] = w0 + i;
        gather(ds, idx.data(), b, buf);
        sum += batch_pass(m, buf, ds.window_len, b, nullptr);
    }
    return sum / (double(ds.n_words) * double(ds.window_len) * double(ds.n_outputs));
}

}  // namespace

TrainResult train(const BiVrnnModel& init, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg) {
    if (train_ds.n_words == 0 || val_ds.n_words == 0)
        throw ConfigError("train: empty dataset");
    if (train_ds.n_features != init.n_features || train_ds.n_outputs != init.n_outputs)
        throw ConfigError("train: dataset does not match model dimensions");
    if (cfg.batch_words == 0 || cfg.epochs < 1) throw ConfigError("train: bad train config");

    BiVrnnModel model = init;
    Gradients adam_m = zeros_like(model), adam_v = zeros_like(model);
    Rng rng(cfg.seed);
    std::vector<size_t> perm(train_ds.n_words);
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;

    TrainResult result;
    result.model = model;
    double best_val = std::numeric_limits<double>::infinity();
    long step = 0;
    BatchBuffers buf;
    Gradients g;
    // Per-word losses are re-summed in word order so the reported history does
    // not depend on the shuffle.
    std::vector<double> word_loss(train_ds.n_words, 0.0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our own generator keeps shuffles portable.
        for (size_t i = perm.size(); i > 1; --i) {
            const size_t j = size_t(rng.below(uint32_t(i)));
            std::swap(perm[i - 1], perm[j]);
        }
        size_t batch_index = 0;
        for (size_t w0 = 0; w0 < train_ds.n_words; w0 += cfg.batch_words, ++batch_index) {
            const size_t b = std::min(cfg.batch_words, train_ds.n_words - w0);
            gather(train_ds, perm.data() + w0, b, buf);
            const double sum_sq = batch_pass(model, buf, train_ds.window_len, b, &g);
            if (!std::isfinite(sum_sq))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_index));
            for (size_t col = 0; col < b; ++col) {
                double sq = 0.0;
                for (int t = 0; t < train_ds.window_len; ++t)
                    sq += buf.err[size_t(t)].col(Eigen::Index(col)).squaredNorm();
                word_loss[perm[w0 + col]] = sq;
            }

            if (cfg.clip_norm > 0.0) {
                double norm_sq = g.head_b.squaredNorm();
                for_each_block(model, g, adam_m, adam_v,
                               [&](MatrixXd&, MatrixXd& gb, MatrixXd&, MatrixXd&) {
                                   norm_sq += gb.squaredNorm();
                               });
                const double norm = std::sqrt(norm_sq);
                if (norm > cfg.clip_norm) {
                    const double s = cfg.clip_norm / norm;
                    g.head_b *= s;
                    for_each_block(model, g, adam_m, adam_v,
                                   [&](MatrixXd&, MatrixXd& gb, MatrixXd&, MatrixXd&) { gb *= s; });
                }
            }

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
            auto update = [&](auto& param, auto& grad, auto& mm, auto& vv) {
                mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * grad;
                vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
                param.array() -=
                    cfg.lr * (mm.array() / bc1) / ((vv.array() / bc2).sqrt() + cfg.eps);
            };
            for_each_block(model, g, adam_m, adam_v, update);
            update(model.head_b, g.head_b, adam_m.head_b, adam_v.head_b);
        }

        double epoch_sum_sq = 0.0;
        for (double v : word_loss) epoch_sum_sq += v;
        result.train_mse.push_back(epoch_sum_sq / (double(train_ds.n_words) *
                                                   double(train_ds.window_len) *
                                                   double(train_ds.n_outputs)));
        const double val = dataset_mse(model, val_ds);
        result.val_mse.push_back(val);
        if (val < best_val) {
            best_val = val;
            result.model = model;
            result.best_epoch = epoch;
        }
    }
    return result;
}

namespace {

Inference infer(const BiVrnnModel& model, const Dataset& ds, bool full) {
    if (ds.n_features != model.n_features || ds.n_outputs != model.n_outputs)
        throw ConfigError("infer: dataset does not match model dimensions");
    const int l = ds.window_len;
    const int keep0 = full ? 0 : ds.edge_discard;
    const int keep = full ? l : l - 2 * ds.edge_discard;
    const size_t n_lanes = size_t(ds.n_outputs) / 2;

    Inference out;
    out.lanes.assign(n_lanes, SymbolStream());
    for (auto& lane : out.lanes) lane.reserve(ds.n_words * size_t(keep));
    out.symbol_index.reserve(ds.n_words * size_t(keep));

    BatchBuffers buf;
    const size_t block = 256;
    std::vector<size_t> idx;
    for (size_t w0 = 0; w0 < ds.n_words; w0 += block) {
        const size_t b = std::min(block, ds.n_words - w0);
        idx.resize(b);
        for (size_t i = 0; i < b; ++i) idx[i] = w0 + i;
        gather(ds, idx.data(), b, buf);
        batch_pass(model, buf, l, b, nullptr);
        for (size_t col = 0; col < b; ++col) {
            const size_t start = ds.word_start(w0 + col);
            for (int t = keep0; t < keep0 + keep; ++t) {
                // err = pred - target, so pred = err + target
                for (size_t lane = 0; lane < n_lanes; ++lane) {
                    const auto r = Eigen::Index(2 * lane);
                    const double vi = buf.err[size_t(t)](r, Eigen::Index(col)) +
                                      buf.tgt[size_t(t)](r, Eigen::Index(col));
                    const double vq = buf.err[size_t(t)](r + 1, Eigen::Index(col)) +
                                      buf.tgt[size_t(t)](r + 1, Eigen::Index(col));
                    out.lanes[lane].push_back(cd(vi, vq));
                }
                out.symbol_index.push_back(start + size_t(t));
            }
        }
    }
    return out;
}

}  // namespace

Inference infer_symbols(const BiVrnnModel& model, const Dataset& ds) {
    return infer(model, ds, false);
}

Inference infer_full(const BiVrnnModel& model, const Dataset& ds) {
    return infer(model, ds, true);
}

namespace {

nlohmann::json matrix_to_json(const MatrixXd& m) {
    std::vector<double> flat(size_t(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            flat[size_t(r) * size_t(m.cols()) + size_t(c)] = m(r, c);
    return nlohmann::json(flat);
}

MatrixXd matrix_from_json(const nlohmann::json& j, int rows, int cols, const char* name) {
    if (!j.is_array() || j.size() != size_t(rows) * size_t(cols))
        throw ParseError(std::string("checkpoint: bad shape for ") + name);
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = j[size_t(r) * size_t(cols) + size_t(c)].get<double>();
    return m;
}

}  // namespace

void save_checkpoint(const BiVrnnModel& model, const TrainConfig& cfg, const WindowSpec& spec,
                     const std::string& path) {
    nlohmann::json j;
    j["format"] = "wdmlab-bivrnn";
    j["version"] = 1;
    j["hidden"] = model.hidden;
    j["n_features"] = model.n_features;
    j["n_outputs"] = model.n_outputs;
    j["window"] = {{"window_len", spec.window_len}, {"edge_discard", spec.edge_discard}};
    j["train"] = {{"batch_words", cfg.batch_words}, {"epochs", cfg.epochs},
                  {"lr", cfg.lr},                   {"beta1", cfg.beta1},
                  {"beta2", cfg.beta2},             {"eps", cfg.eps},
                  {"clip_norm", cfg.clip_norm},     {"seed", cfg.seed}};
    j["weights"] = {{"w_fwd", matrix_to_json(model.w_fwd)},
                    {"u_fwd", matrix_to_json(model.u_fwd)},
                    {"w_bwd", matrix_to_json(model.w_bwd)},
                    {"u_bwd", matrix_to_json(model.u_bwd)},
                    {"head_w", matrix_to_json(model.head_w)},
                    {"head_b", matrix_to_json(model.head_b)}};
    std::ofstream out(path);
    if (!out) throw ConfigError("save_checkpoint: cannot write " + path);
    out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("load_checkpoint: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "wdmlab-bivrnn" || j.at("version").get<int>() != 1)
            throw ParseError("load_checkpoint: unknown format or version");
        Checkpoint ck;
        ck.model.hidden = j.at("hidden").get<int>();
        ck.model.n_features = j.at("n_features").get<int>();
        ck.model.n_outputs = j.at("n_outputs").get<int>();
        const auto& jw = j.at("window");
        ck.spec.window_len = jw.at("window_len").get<int>();
        ck.spec.edge_discard = jw.at("edge_discard").get<int>();
        const auto& jt = j.at("train");
        ck.cfg.batch_words = jt.at("batch_words").get<size_t>();
        ck.cfg.epochs = jt.at("epochs").get<int>();
        ck.cfg.lr = jt.at("lr").get<double>();
        ck.cfg.beta1 = jt.at("beta1").get<double>();
        ck.cfg.beta2 = jt.at("beta2").get<double>();
        ck.cfg.eps = jt.at("eps").get<double>();
        ck.cfg.clip_norm = jt.at("clip_norm").get<double>();
        ck.cfg.seed = jt.at("seed").get<Seed>();
        const int h = ck.model.hidden, f = ck.model.n_features, y = ck.model.n_outputs;
        const auto& ww = j.at("weights");
        ck.model.w_fwd = matrix_from_json(ww.at("w_fwd"), h, h, "w_fwd");
        ck.model.u_fwd = matrix_from_json(ww.at("u_fwd"), h, f, "u_fwd");
        ck.model.w_bwd = matrix_from_json(ww.at("w_bwd"), h, h, "w_bwd");
        ck.model.u_bwd = matrix_from_json(ww.at("u_bwd"), h, f, "u_bwd");
        ck.model.head_w = matrix_from_json(ww.at("head_w"), y, 2 * h, "head_w");
        const MatrixXd hb = matrix_from_json(ww.at("head_b"), y, 1, "head_b");
        ck.model.head_b = hb.col(0);
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("load_checkpoint: ") + e.what());
    }
}

}  // namespace wdmlab::rnn
