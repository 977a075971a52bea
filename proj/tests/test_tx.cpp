// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "wdmlab/fft.hpp"
#include "wdmlab/sigkit.hpp"
#include "wdmlab/tx.hpp"
#include "wdmlab/types.hpp"

using namespace wdmlab;

TEST_CASE("rrc taps: shape, symmetry, unit energy") {
    const int span = 16, sps = 8;
    const auto h = tx::rrc_taps(0.1, span, sps);
    REQUIRE(h.size() == size_t(span * sps + 1));
    double energy = 0.0;
    for (double v : h) energy += v * v;
    CHECK(energy == doctest::Approx(1.0).epsilon(1e-9));
    const size_t mid = h.size() / 2;
    for (size_t i = 0; i < mid; ++i)
        CHECK(h[i] == doctest::Approx(h[h.size() - 1 - i]).epsilon(1e-12));
    CHECK(*std::max_element(h.begin(), h.end()) == h[mid]);
    CHECK_THROWS_AS(tx::rrc_taps(1e-4, span, sps), ConfigError);
}

TEST_CASE("rrc -40 dB bandwidth sits at (1+rolloff)/2 of the baud rate") {
    const double rolloff = 0.1;
    const int sps = 8;
    const auto h = tx::rrc_taps(rolloff, 32, sps);
    std::vector<cd> padded(16384, cd(0.0, 0.0));
    for (size_t i = 0; i < h.size(); ++i) padded[i] = cd(h[i], 0.0);
    fftops::fft(padded);
    const double peak = std::abs(padded[0]);
    // Tap spacing is 1/sps symbol periods, so FFT bin k maps to f = k*sps/N
    // in units of the baud rate.
    double edge = 0.0;
    for (size_t k = 0; k < padded.size() / 2; ++k) {
        if (std::abs(padded[k]) / peak > 1e-2) edge = double(k) * sps / double(padded.size());
    }
    CHECK(edge == doctest::Approx(0.5 * (1.0 + rolloff)).epsilon(0.05));
}

TEST_CASE("rrc self-convolution satisfies the nyquist criterion") {
    const int sps = 8;
    const auto h = tx::rrc_taps(0.1, 64, sps);
    const int n = int(h.size());
    // Raised-cosine pulse = rrc (*) rrc; symbol-spaced samples away from the
    // center must vanish.
    std::vector<double> rc(size_t(2 * n - 1), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rc[size_t(i + j)] += h[size_t(i)] * h[size_t(j)];
    const int center = n - 1;
    const double peak = rc[size_t(center)];
    for (int k = 1; k * sps + center < 2 * n - 1; ++k)
        CHECK(std::abs(rc[size_t(center + k * sps)] / peak) < 1e-3);
}

TEST_CASE("pulse_shape preserves mean power and symbol centering") {
    tx::TxSpec t;
    t.baud = 16e9;
    t.rolloff = 0.1;
    t.sps_sim = 8;
    t.filter_span = 32;

    auto syms = sigkit::prng_symbols(3, 4096, sigkit::Constellation::qam16());
    const auto shaped = tx::pulse_shape(syms, t);
    CHECK(shaped.samples.size() == syms.size() * 8);
    CHECK(shaped.sample_rate_hz == doctest::Approx(8.0 * 16e9));
    double p = 0.0;
    for (const cd& v : shaped.samples) p += std::norm(v);
    p /= double(shaped.samples.size());
    CHECK(p == doctest::Approx(sigkit::mean_power(syms)).epsilon(0.02));

    SymbolStream one(256, cd(0.0, 0.0));
    one[5] = cd(1.0, 0.0);
    const auto pulse = tx::pulse_shape(one, t);
    size_t peak_at = 0;
    double best = 0.0;
    for (size_t i = 0; i < pulse.samples.size(); ++i)
        if (std::abs(pulse.samples[i]) > best) {
            best = std::abs(pulse.samples[i]);
            peak_at = i;
        }
    CHECK(peak_at == 5 * 8);
}

TEST_CASE("auto_sps picks the smallest power of two with guard margin") {
    tx::WdmGrid desk;
    desk.n_channels = 3;
    desk.spacing_hz = 20e9;
    CHECK(tx::auto_sps(desk, 16e9, 0.1) == 8);

    tx::WdmGrid paper;
    paper.n_channels = 9;
    paper.spacing_hz = 75e9;
    CHECK(tx::auto_sps(paper, 64e9, 0.1) == 16);

    tx::WdmGrid single;
    single.n_channels = 1;
    single.spacing_hz = 20e9;
    CHECK(tx::auto_sps(single, 16e9, 0.1) == 4);
}

TEST_CASE("wdm grid offsets are symmetric around zero") {
    tx::WdmGrid g;
    g.n_channels = 3;
    g.spacing_hz = 20e9;
    CHECK(g.offset_of(0) == doctest::Approx(-20e9));
    CHECK(g.offset_of(1) == doctest::Approx(0.0));
    CHECK(g.offset_of(2) == doctest::Approx(20e9));
}

namespace {

DualPolField shaped_channel(Seed seed, const tx::TxSpec& t, size_t n) {
    DualPolField f;
    f.pol_x = tx::pulse_shape(sigkit::prng_symbols(seed, n, sigkit::Constellation::qpsk()), t);
    f.pol_y =
        tx::pulse_shape(sigkit::prng_symbols(seed + 1, n, sigkit::Constellation::qpsk()), t);
    return f;
}

}  // namespace

TEST_CASE("wdm_mux sets per-channel launch power and adds disjoint spectra") {
    tx::TxSpec t;
    t.baud = 16e9;
    t.rolloff = 0.1;
    t.sps_sim = 8;
    tx::WdmGrid g;
    g.n_channels = 1;
    g.spacing_hz = 20e9;

    const auto one = tx::wdm_mux({shaped_channel(10, t, 2048)}, g, {3.0});
    CHECK(sigkit::power_of(one) == doctest::Approx(dbm_to_watts(3.0)).epsilon(1e-9));

    g.n_channels = 3;
    const auto three = tx::wdm_mux(
        {shaped_channel(10, t, 2048), shaped_channel(20, t, 2048), shaped_channel(30, t, 2048)},
        g, {0.0, 0.0, 0.0});
    CHECK(sigkit::power_of(three) == doctest::Approx(3.0 * 1e-3).epsilon(0.02));
}

TEST_CASE("wdm_mux rejects a grid wider than the sample rate") {
    tx::TxSpec t;
    t.baud = 16e9;
    t.rolloff = 0.1;
    t.sps_sim = 8;
    tx::WdmGrid g;
    g.n_channels = 3;
    g.spacing_hz = 60e9;  // occupied band 137.6 GHz > 128 GHz rate
    CHECK_THROWS_AS(tx::wdm_mux({shaped_channel(1, t, 1024), shaped_channel(2, t, 1024),
                                 shaped_channel(3, t, 1024)},
                                g, {0.0, 0.0, 0.0}),
                    ConfigError);
}
