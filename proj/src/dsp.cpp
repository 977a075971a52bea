// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/dsp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>

#include "wdmlab/fft.hpp"
#include "wdmlab/tx.hpp"

namespace wdmlab::dsp {

namespace {

size_t resampled_length(size_t n, double fs_in, double fs_out, const char* where) {
    const double exact = double(n) * fs_out / fs_in;
    const auto n_out = size_t(std::llround(exact));
    if (n_out == 0 || std::abs(exact - double(n_out)) > 1e-6)
        throw ConfigError(std::string(where) + ": sample rates are incommensurate");
    return n_out;
}

int integer_sps(double fs, double baud, const char* where) {
    const double ratio = fs / baud;
    const int sps = int(std::llround(ratio));
    if (sps < 1 || std::abs(ratio - double(sps)) > 1e-6)
        throw ConfigError(std::string(where) + ": sample rate is not a whole sps multiple");
    return sps;
}

}  // namespace

DualPolField channel_select(const DualPolField& field, double offset_hz, const RxChain& rx) {
    field.require_consistent("channel_select");
    const double fs = field.sample_rate();
    const double bw = rx.effective_bw();
    if (bw < (1.0 + rx.rolloff) * rx.baud - 1e-3)
        throw ConfigError("channel_select: select_bw narrower than the shaped channel");
    if (std::abs(offset_hz) + bw / 2.0 > fs / 2.0)
        throw ConfigError("channel_select: offset outside the simulated band");

    DualPolField out = field;
    const double df = fftops::snap_to_bin(-offset_hz, out.size(), fs);
    const double target_rate = double(rx.target_sps) * rx.baud;
    const size_t n_out = resampled_length(out.size(), fs, target_rate, "channel_select");
    fftops::freq_shift(out, df);
    fftops::brickwall(out, bw);
    fftops::spectral_resample(out, n_out);
    out.pol_x.sample_rate_hz = target_rate;
    out.pol_y.sample_rate_hz = target_rate;
    out.center_offset_hz = 0.0;
    return out;
}

DualPolField fde(const DualPolField& field, double total_beta2_ps2) {
    field.require_consistent("fde");
    DualPolField out = field;
    const double d_total = total_beta2_ps2 * 1e-24;  // s^2
    const auto omega = fftops::bin_omegas(out.size(), out.sample_rate());
    std::vector<cd> factor(omega.size());
    for (size_t i = 0; i < omega.size(); ++i)
        factor[i] = std::polar(1.0, -0.5 * d_total * omega[i] * omega[i]);
    fftops::apply_spectral(out.pol_x, factor);
    fftops::apply_spectral(out.pol_y, factor);
    return out;
}

DualPolField resample_for_dbp(const DualPolField& field, double spacing_hz, double baud,
                              const DbpConfig& cfg) {
    field.require_consistent("resample_for_dbp");
    if (cfg.sps < 2) throw ConfigError("resample_for_dbp: sps must be >= 2");
    const double rate = double(cfg.sps) * baud;
    const double band = double(cfg.n_channels_backprop) * spacing_hz;
    if (rate < band)
        throw ConfigError("resample_for_dbp: backprop band exceeds sps * baud");
    const double fs = field.sample_rate();
    if (rate > fs + 1e-3)
        throw ConfigError("resample_for_dbp: backprop rate above the simulation rate");

    DualPolField out = field;
    const size_t n_out = resampled_length(out.size(), fs, rate, "resample_for_dbp");
    fftops::brickwall(out, band);
    fftops::spectral_resample(out, n_out);
    out.pol_x.sample_rate_hz = rate;
    out.pol_y.sample_rate_hz = rate;
    return out;
}

DualPolField dbp(const DualPolField& field, const fiber::LinkSpec& link, const DbpConfig& cfg) {
    field.require_consistent("dbp");
    if (cfg.steps_per_span < 1) throw ConfigError("dbp: steps_per_span must be >= 1");
    DualPolField out = field;
    const double g_inv = std::pow(10.0, -link.span_gain_db() / 20.0);
    const auto& f = link.fiber;
    const double span_m = f.length_km * 1e3;
    const double step_m = span_m / double(cfg.steps_per_span);
    for (int s = 0; s < link.n_spans; ++s) {
        for (auto* lane : {&out.pol_x.samples, &out.pol_y.samples})
            for (auto& v : *lane) v *= g_inv;
        fiber::split_step_manakov(out, -f.alpha_lin_m(), -f.beta2_s2_m(), -f.gamma_w_m(),
                                  span_m, step_m);
    }
    return out;
}

std::pair<SymbolStream, SymbolStream> matched_downsample(const DualPolField& field,
                                                         const RxChain& rx,
                                                         int timing_offset) {
    field.require_consistent("matched_downsample");
    const double fs = field.sample_rate();
    const int sps = integer_sps(fs, rx.baud, "matched_downsample");
    if (sps < 2) throw ConfigError("matched_downsample: need at least 2 sps");
    if (field.size() % size_t(sps) != 0)
        throw ConfigError("matched_downsample: length is not a whole symbol count");

    auto taps = tx::rrc_taps(rx.rolloff, rx.filter_span, sps);
    // 1/sqrt(sps) undoes the transmit-side scaling so a clean RRC pair lands
    // back on the unit constellation.
    const double g = 1.0 / std::sqrt(double(sps));
    for (double& v : taps) v *= g;

    const size_t n = field.size();
    const size_t n_sym = n / size_t(sps);
    const size_t shift = size_t((timing_offset % int(n) + int(n)) % int(n));
    std::pair<SymbolStream, SymbolStream> out;
    for (auto [lane, dst] : {std::pair{&field.pol_x, &out.first}, {&field.pol_y, &out.second}}) {
        ComplexSeq w = *lane;
        fftops::cyclic_filter(w, taps);
        dst->resize(n_sym);
        for (size_t k = 0; k < n_sym; ++k) (*dst)[k] = w.samples[(k * size_t(sps) + shift) % n];
    }
    return out;
}

SymbolStream adaptive_equalize(const SymbolStream& stream, const SymbolStream& ref,
                               const AdaptiveEqConfig& cfg) {
    if (cfg.n_taps < 1 || cfg.n_taps % 2 == 0)
        throw ConfigError("adaptive_equalize: n_taps must be odd");
    if (ref.empty() || ref.size() > stream.size())
        throw ConfigError("adaptive_equalize: reference must be non-empty and fit the stream");

    const int t = cfg.n_taps;
    const int c = t / 2;
    const size_t n = stream.size();
    std::vector<double> wi(size_t(t), 0.0), wq(size_t(t), 0.0);
    wi[size_t(c)] = 1.0;
    wq[size_t(c)] = 1.0;

    auto window_at = [&](size_t k, int i) -> cd {
        return stream[(k + n + size_t(i) - size_t(c)) % n];
    };

    for (size_t k = 0; k < ref.size(); ++k) {
        double yi = 0.0, yq = 0.0;
        for (int i = 0; i < t; ++i) {
            const cd v = window_at(k, i);
            yi += wi[size_t(i)] * v.real();
            yq += wq[size_t(i)] * v.imag();
        }
        const double ei = ref[k].real() - yi;
        const double eq = ref[k].imag() - yq;
        for (int i = 0; i < t; ++i) {
            const cd v = window_at(k, i);
            wi[size_t(i)] += cfg.step_size * ei * v.real();
            wq[size_t(i)] += cfg.step_size * eq * v.imag();
        }
        double norm = 0.0;
        for (int i = 0; i < t; ++i) norm += wi[size_t(i)] * wi[size_t(i)] + wq[size_t(i)] * wq[size_t(i)];
        if (norm > cfg.norm_bound)
            throw NumericError("adaptive_equalize: taps diverged, reduce step_size");
    }

    SymbolStream out(n);
    for (size_t k = 0; k < n; ++k) {
        double yi = 0.0, yq = 0.0;
        for (int i = 0; i < t; ++i) {
            const cd v = window_at(k, i);
            yi += wi[size_t(i)] * v.real();
            yq += wq[size_t(i)] * v.imag();
        }
        out[k] = cd(yi, yq);
    }
    return out;
}

SymbolStream adaptive_equalize_cma(const SymbolStream& stream, double r2,
                                   size_t training_symbols, const AdaptiveEqConfig& cfg) {
    if (cfg.n_taps < 1 || cfg.n_taps % 2 == 0)
        throw ConfigError("adaptive_equalize_cma: n_taps must be odd");
    if (r2 <= 0.0) throw ConfigError("adaptive_equalize_cma: modulus must be positive");
    const int t = cfg.n_taps;
    const int c = t / 2;
    const size_t n = stream.size();
    if (n == 0) throw ConfigError("adaptive_equalize_cma: empty stream");
    std::vector<cd> w(size_t(t), cd(0.0, 0.0));
    w[size_t(c)] = cd(1.0, 0.0);

    auto window_at = [&](size_t k, int i) -> cd {
        return stream[(k + n + size_t(i) - size_t(c)) % n];
    };

    const size_t n_train = std::min(training_symbols, n);
    for (size_t k = 0; k < n_train; ++k) {
        cd y(0.0, 0.0);
        for (int i = 0; i < t; ++i) y += w[size_t(i)] * window_at(k, i);
        const cd e = y * (std::norm(y) - r2);
        for (int i = 0; i < t; ++i)
            w[size_t(i)] -= cfg.step_size * e * std::conj(window_at(k, i));
        double norm = 0.0;
        for (int i = 0; i < t; ++i) norm += std::norm(w[size_t(i)]);
        if (norm > cfg.norm_bound)
            throw NumericError("adaptive_equalize_cma: taps diverged, reduce step_size");
    }

    SymbolStream out(n);
    for (size_t k = 0; k < n; ++k) {
        cd y(0.0, 0.0);
        for (int i = 0; i < t; ++i) y += w[size_t(i)] * window_at(k, i);
        out[k] = y;
    }
    return out;
}

LinregModel linreg_fit(const std::vector<SymbolStream>& in_lanes,
                       const std::vector<SymbolStream>& target_lanes, int window_len) {
    if (in_lanes.empty() || target_lanes.size() != in_lanes.size())
        throw ConfigError("linreg_fit: input and target lane counts must match");
    if (window_len < 1 || window_len % 2 == 0)
        throw ConfigError("linreg_fit: window length must be odd");
    const size_t n = in_lanes[0].size();
    for (const auto& lane : in_lanes)
        if (lane.size() != n) throw ConfigError("linreg_fit: lane length mismatch");
    for (const auto& lane : target_lanes)
        if (lane.size() != n) throw ConfigError("linreg_fit: target length mismatch");
    if (n < size_t(window_len)) throw ConfigError("linreg_fit: stream shorter than window");

    const int l = window_len;
    const int c = (l - 1) / 2;
    const int f = 2 * int(in_lanes.size());
    const int p = l * f + 1;
    const int y_out = f;
    const size_t rows = n - size_t(l) + 1;

    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd atb = Eigen::MatrixXd::Zero(p, y_out);

    const size_t chunk = 2048;
    Eigen::MatrixXd a(chunk, p);
    Eigen::MatrixXd b(chunk, y_out);
    size_t filled = 0;
    auto flush = [&]() {
        if (filled == 0) return;
        auto ab = a.topRows(Eigen::Index(filled));
        auto bb = b.topRows(Eigen::Index(filled));
        ata.selfadjointView<Eigen::Lower>().rankUpdate(ab.transpose(), 1.0);
        atb.noalias() += ab.transpose() * bb;
        filled = 0;
    };

    for (size_t r = 0; r < rows; ++r) {
        const size_t t0 = r;  // window covers symbols [r, r+l)
        Eigen::Index col = 0;
        for (int tstep = 0; tstep < l; ++tstep) {
            for (size_t lane = 0; lane < in_lanes.size(); ++lane) {
                const cd v = in_lanes[lane][t0 + size_t(tstep)];
                a(Eigen::Index(filled), col++) = v.real();
                a(Eigen::Index(filled), col++) = v.imag();
            }
        }
        a(Eigen::Index(filled), col) = 1.0;
        for (size_t lane = 0; lane < target_lanes.size(); ++lane) {
            const cd v = target_lanes[lane][t0 + size_t(c)];
            b(Eigen::Index(filled), Eigen::Index(2 * lane)) = v.real();
            b(Eigen::Index(filled), Eigen::Index(2 * lane + 1)) = v.imag();
        }
        if (++filled == chunk) flush();
    }
    flush();

    Eigen::MatrixXd full = ata.selfadjointView<Eigen::Lower>();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(full);
    Eigen::MatrixXd sol;
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        sol = ldlt.solve(atb);
        ok = sol.allFinite();
    }
    if (!ok) {
        std::fprintf(stderr, "linreg_fit: normal equations rank-deficient, using ridge 1e-6\n");
        Eigen::MatrixXd ridged = full + 1e-6 * Eigen::MatrixXd::Identity(p, p);
        sol = Eigen::LDLT<Eigen::MatrixXd>(ridged).solve(atb);
        if (!sol.allFinite()) throw NumericError("linreg_fit: ridge solve failed");
    }

    LinregModel model;
    model.window_len = l;
    model.n_features = f;
    model.n_outputs = y_out;
    model.weights.resize(size_t(y_out) * size_t(p));
    for (int o = 0; o < y_out; ++o)
        for (int j = 0; j < p; ++j) model.weights[size_t(o) * size_t(p) + size_t(j)] = sol(j, o);
    return model;
}

std::vector<SymbolStream> linreg_apply(const LinregModel& model,
                                       const std::vector<SymbolStream>& in_lanes) {
    if (in_lanes.empty() || 2 * int(in_lanes.size()) != model.n_features)
        throw ConfigError("linreg_apply: lane count does not match the model");
    const size_t n = in_lanes[0].size();
    for (const auto& lane : in_lanes)
        if (lane.size() != n) throw ConfigError("linreg_apply: lane length mismatch");
    const int l = model.window_len;
    if (n < size_t(l)) throw ConfigError("linreg_apply: stream shorter than window");

    const int f = model.n_features;
    const int p = l * f + 1;
    const size_t rows = n - size_t(l) + 1;
    std::vector<double> feat(static_cast<size_t>(p));
    std::vector<SymbolStream> out(in_lanes.size(), SymbolStream(rows));

    for (size_t r = 0; r < rows; ++r) {
        size_t col = 0;
        for (int tstep = 0; tstep < l; ++tstep) {
            for (size_t lane = 0; lane < in_lanes.size(); ++lane) {
                const cd v = in_lanes[lane][r + size_t(tstep)];
                feat[col++] = v.real();
                feat[col++] = v.imag();
            }
        }
        feat[col] = 1.0;
        for (size_t lane = 0; lane < in_lanes.size(); ++lane) {
            double acc_i = 0.0, acc_q = 0.0;
            const double* wi = &model.weights[(2 * lane) * size_t(p)];
            const double* wq = &model.weights[(2 * lane + 1) * size_t(p)];
            for (int j = 0; j < p; ++j) {
                acc_i += wi[j] * feat[size_t(j)];
                acc_q += wq[j] * feat[size_t(j)];
            }
            out[lane][r] = cd(acc_i, acc_q);
        }
    }
    return out;
}

}  // namespace wdmlab::dsp
