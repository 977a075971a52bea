// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "doctest.h"
#include "wdmlab/analysis.hpp"
#include "wdmlab/dsp.hpp"
#include "wdmlab/fiber.hpp"
#include "wdmlab/rng.hpp"
#include "wdmlab/sigkit.hpp"
#include "wdmlab/tx.hpp"
#include "wdmlab/types.hpp"

using namespace wdmlab;

namespace {

tx::TxSpec desk_tx(int sps) {
    tx::TxSpec t;
    t.baud = 16e9;
    t.rolloff = 0.1;
    t.sps_sim = sps;
    t.filter_span = 32;
    return t;
}

dsp::RxChain desk_rx() {
    dsp::RxChain rx;
    rx.baud = 16e9;
    rx.rolloff = 0.1;
    rx.filter_span = 32;
    rx.target_sps = 2;
    return rx;
}

DualPolField shaped(Seed seed, size_t n, int sps,
                    const sigkit::Constellation& c = sigkit::Constellation::qpsk()) {
    const auto t = desk_tx(sps);
    DualPolField f;
    f.pol_x = tx::pulse_shape(sigkit::prng_symbols(seed, n, c), t);
    f.pol_y = tx::pulse_shape(sigkit::prng_symbols(seed + 1, n, c), t);
    return f;
}

double l2_diff(const DualPolField& a, const DualPolField& b) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < a.pol_x.samples.size(); ++i) {
        num += std::norm(a.pol_x.samples[i] - b.pol_x.samples[i]);
        num += std::norm(a.pol_y.samples[i] - b.pol_y.samples[i]);
        den += std::norm(a.pol_x.samples[i]) + std::norm(a.pol_y.samples[i]);
    }
    return std::sqrt(num / den);
}

// Ideal single-coefficient carrier recovery, the same conditioning the
// receiver chain applies before slicing.
SymbolStream conditioned(const SymbolStream& rx, const SymbolStream& ref) {
    cd num(0.0, 0.0);
    double den = 0.0;
    for (size_t i = 0; i < rx.size(); ++i) {
        num += std::conj(rx[i]) * ref[i];
        den += std::norm(rx[i]);
    }
    SymbolStream out(rx.size());
    const cd a = num / den;
    for (size_t i = 0; i < rx.size(); ++i) out[i] = a * rx[i];
    return out;
}

}  // namespace

TEST_CASE("fde exactly inverts accumulated dispersion and is unitary") {
    auto f = shaped(5, 2048, 4);
    const auto ref = f;
    // 400 km of pure dispersion; gamma = alpha = 0 makes one step exact.
    fiber::split_step_manakov(f, 0.0, -20e-27, 0.0, 400e3, 400e3);

    double p_in = 0.0, p_out = 0.0;
    for (const cd& v : f.pol_x.samples) p_in += std::norm(v);
    const auto g = dsp::fde(f, -20.0 * 400.0);
    for (const cd& v : g.pol_x.samples) p_out += std::norm(v);

    CHECK(l2_diff(g, ref) < 1e-9);
    CHECK(p_out == doctest::Approx(p_in).epsilon(1e-12));
}

TEST_CASE("channel_select keeps the wanted channel and drops neighbors") {
    const auto t = desk_tx(8);
    tx::WdmGrid grid;
    grid.n_channels = 3;
    grid.spacing_hz = 20e9;

    std::vector<SymbolStream> tx_syms;
    std::vector<DualPolField> chans;
    for (int c = 0; c < 3; ++c) {
        DualPolField f;
        auto sx = sigkit::prng_symbols(Seed(40 + 2 * c), 4096, sigkit::Constellation::qpsk());
        auto sy = sigkit::prng_symbols(Seed(41 + 2 * c), 4096, sigkit::Constellation::qpsk());
        f.pol_x = tx::pulse_shape(sx, t);
        f.pol_y = tx::pulse_shape(sy, t);
        tx_syms.push_back(sx);
        chans.push_back(f);
    }
    const auto mux = tx::wdm_mux(chans, grid, {0.0, 0.0, 0.0});

    for (int c = 0; c < 3; ++c) {
        auto sel = dsp::channel_select(mux, grid.offset_of(c), desk_rx());
        CHECK(sel.sample_rate() == doctest::Approx(2.0 * 16e9));
        auto [px, py] = dsp::matched_downsample(sel, desk_rx());
        const auto eq = conditioned(px, tx_syms[size_t(c)]);
        CHECK(analysis::evm_db(eq, tx_syms[size_t(c)]) < -35.0);
    }
}

TEST_CASE("matched_downsample recovers symbols and exposes timing errors") {
    const auto& c = sigkit::Constellation::qam16();
    auto sx = sigkit::prng_symbols(60, 25000, c);
    auto sy = sigkit::prng_symbols(61, 25000, c);
    const auto t = desk_tx(8);
    DualPolField f;
    f.pol_x = tx::pulse_shape(sx, t);
    f.pol_y = tx::pulse_shape(sy, t);

    auto [px, py] = dsp::matched_downsample(f, desk_rx());
    REQUIRE(px.size() == sx.size());
    CHECK(analysis::evm_db(conditioned(px, sx), sx) < -40.0);
    CHECK(analysis::evm_db(conditioned(py, sy), sy) < -40.0);
    CHECK(analysis::ber_count(px, sx, c).bit_errors == 0);

    auto [qx, qy] = dsp::matched_downsample(f, desk_rx(), 4);  // half a symbol off
    const double on = analysis::evm_db(conditioned(px, sx), sx);
    const double off = analysis::evm_db(conditioned(qx, sx), sx);
    CHECK(off - on > 10.0);
}

TEST_CASE("matched filter normalizes awgn by the oversampling factor") {
    const auto& c = sigkit::Constellation::qpsk();
    const int sps = 8;
    auto sx = sigkit::prng_symbols(70, 30000, c);
    const auto t = desk_tx(sps);
    DualPolField f;
    f.pol_x = tx::pulse_shape(sx, t);
    f.pol_y = tx::pulse_shape(sigkit::prng_symbols(71, 30000, c), t);

    // Per-sample complex noise power 0.01*sps collapses to 0.01 per symbol
    // after the unit-energy matched filter: EVM -20 dB.
    Rng noise(72);
    const double sigma = std::sqrt(0.01 * sps / 2.0);
    for (cd& v : f.pol_x.samples) v += cd(sigma * noise.gaussian(), sigma * noise.gaussian());
    auto [px, py] = dsp::matched_downsample(f, desk_rx());
    CHECK(analysis::evm_db(px, sx) == doctest::Approx(-20.0).epsilon(0.025));
}

TEST_CASE("dbp with gamma zero reduces to the fde") {
    fiber::LinkSpec link;
    link.fiber.alpha_db_km = 0.2;
    link.fiber.beta2_ps2_km = -20.0;
    link.fiber.gamma_w_km = 0.0;
    link.fiber.length_km = 50.0;
    link.n_spans = 2;

    auto f = shaped(80, 2048, 4);
    sigkit::set_power(f, 1e-3);
    dsp::DbpConfig cfg;
    cfg.steps_per_span = 1;  // linear: exact at any resolution
    cfg.sps = 4;
    const auto via_dbp = dsp::dbp(f, link, cfg);
    const auto via_fde = dsp::fde(f, link.total_beta2_ps2());
    CHECK(l2_diff(via_dbp, via_fde) < 1e-9);
}

TEST_CASE("dbp at matched resolution is an exact inverse of the noiseless link") {
    const auto& c = sigkit::Constellation::qam16();
    auto sx = sigkit::prng_symbols(90, 4096, c);
    auto sy = sigkit::prng_symbols(91, 4096, c);
    const auto t = desk_tx(4);
    DualPolField f;
    f.pol_x = tx::pulse_shape(sx, t);
    f.pol_y = tx::pulse_shape(sy, t);
    sigkit::set_power(f, 2e-3);

    fiber::LinkSpec link;
    link.fiber.length_km = 50.0;
    link.n_spans = 2;
    fiber::propagate_link(f, link, fiber::SsfmConfig{0.5}, 7, true);

    dsp::DbpConfig cfg;
    cfg.steps_per_span = 100;  // 0.5 km, same grid as the forward pass
    cfg.sps = 4;
    auto back = dsp::dbp(f, link, cfg);

    auto [px, py] = dsp::matched_downsample(back, desk_rx());
    const auto ex = conditioned(px, sx);
    const auto ey = conditioned(py, sy);
    CHECK(analysis::evm_db(ex, sx) < -40.0);
    CHECK(analysis::evm_db(ey, sy) < -40.0);
    CHECK(analysis::ber_count(ex, sx, c).bit_errors == 0);
    CHECK(analysis::ber_count(ey, sy, c).bit_errors == 0);
}

TEST_CASE("resample_for_dbp band-limits and retunes the rate") {
    auto f = shaped(95, 2048, 8);
    dsp::DbpConfig cfg;
    cfg.sps = 4;
    cfg.n_channels_backprop = 1;
    const auto g = dsp::resample_for_dbp(f, 20e9, 16e9, cfg);
    CHECK(g.sample_rate() == doctest::Approx(4.0 * 16e9));
    CHECK(g.size() == f.size() / 2);
}

TEST_CASE("lms equalizer passes an already-equalized stream through unchanged") {
    auto s = sigkit::prng_symbols(100, 3000, sigkit::Constellation::qam16());
    dsp::AdaptiveEqConfig cfg;
    const auto out = dsp::adaptive_equalize(s, SymbolStream(s.begin(), s.begin() + 500), cfg);
    REQUIRE(out.size() == s.size());
    for (size_t i = 0; i < s.size(); ++i) CHECK(out[i] == s[i]);
}

TEST_CASE("lms equalizer opens a three-tap isi channel") {
    const auto& c = sigkit::Constellation::qpsk();
    auto clean = sigkit::prng_symbols(101, 20000, c);
    SymbolStream dirty(clean.size());
    for (size_t i = 0; i < clean.size(); ++i) {
        cd v = clean[i];
        if (i >= 1) v += 0.2 * clean[i - 1];
        if (i + 1 < clean.size()) v -= 0.15 * clean[i + 1];
        dirty[i] = v;
    }
    dsp::AdaptiveEqConfig cfg;
    cfg.step_size = 2e-3;
    const auto out =
        dsp::adaptive_equalize(dirty, SymbolStream(clean.begin(), clean.begin() + 8000), cfg);
    SymbolStream tail(out.begin() + 8000, out.end());
    SymbolStream ref(clean.begin() + 8000, clean.end());
    CHECK(analysis::evm_db(tail, ref) < -25.0);
    CHECK(analysis::evm_db(dirty, clean) > -15.0);  // the channel really was dirty
}

TEST_CASE("lms equalizer reports divergence") {
    auto s = sigkit::prng_symbols(102, 2000, sigkit::Constellation::qpsk());
    auto ref = sigkit::prng_symbols(103, 1000, sigkit::Constellation::qpsk());
    dsp::AdaptiveEqConfig cfg;
    cfg.step_size = 10.0;
    CHECK_THROWS_AS(dsp::adaptive_equalize(s, ref, cfg), NumericError);
}

TEST_CASE("cma cost does not increase with more training") {
    const auto& c = sigkit::Constellation::qpsk();
    auto clean = sigkit::prng_symbols(104, 20000, c);
    SymbolStream dirty(clean.size());
    const cd rot = std::polar(1.0, 0.4);
    for (size_t i = 0; i < clean.size(); ++i) {
        cd v = clean[i];
        if (i >= 1) v += cd(0.15, 0.1) * clean[i - 1];
        dirty[i] = rot * v;
    }
    dsp::AdaptiveEqConfig cfg;
    cfg.step_size = 5e-4;
    double cost[3];
    const size_t train[3] = {500, 2000, 8000};
    for (int k = 0; k < 3; ++k) {
        const auto out = dsp::adaptive_equalize_cma(dirty, 1.0, train[k], cfg);
        double j = 0.0;
        for (size_t i = 10000; i < out.size(); ++i) {
            const double e = std::norm(out[i]) - 1.0;
            j += e * e;
        }
        cost[k] = j / double(out.size() - 10000);
    }
    CHECK(cost[1] <= cost[0] * 1.05);
    CHECK(cost[2] <= cost[1] * 1.05);
}

TEST_CASE("linreg learns the center-tap selector exactly") {
    auto s = sigkit::prng_symbols(110, 4000, sigkit::Constellation::qam16());
    const auto model = dsp::linreg_fit({s}, {s}, 7);
    const auto out = dsp::linreg_apply(model, {s});
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].size() == s.size() - 6);
    double mse = 0.0;
    for (size_t i = 0; i < out[0].size(); ++i) mse += std::norm(out[0][i] - s[i + 3]);
    CHECK(mse / double(out[0].size()) < 1e-10);
}

TEST_CASE("linreg neither helps nor hurts on pure awgn") {
    const auto& c = sigkit::Constellation::qpsk();
    auto tx_s = sigkit::prng_symbols(111, 30000, c);
    auto rx_s = tx_s;
    Rng noise(112);
    const double sigma = 0.344;  // per-rail, BER(none) around 2e-2
    for (cd& v : rx_s) v += cd(sigma * noise.gaussian(), sigma * noise.gaussian());

    std::vector<SymbolStream> in_tr = {SymbolStream(rx_s.begin(), rx_s.begin() + 10000)};
    std::vector<SymbolStream> tg_tr = {SymbolStream(tx_s.begin(), tx_s.begin() + 10000)};
    const auto model = dsp::linreg_fit(in_tr, tg_tr, 7);

    std::vector<SymbolStream> in_te = {SymbolStream(rx_s.begin() + 10000, rx_s.end())};
    const auto out = dsp::linreg_apply(model, in_te);
    SymbolStream ref(tx_s.begin() + 10000 + 3, tx_s.begin() + 10000 + 3 + long(out[0].size()));
    SymbolStream raw(rx_s.begin() + 10000 + 3, rx_s.begin() + 10000 + 3 + long(out[0].size()));

    const double ber_eq = analysis::ber_count(out[0], ref, c).ber;
    const double ber_raw = analysis::ber_count(raw, ref, c).ber;
    CHECK(std::abs(ber_eq - ber_raw) / ber_raw < 0.15);
}
