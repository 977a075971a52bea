// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/tx.hpp"

#include <cmath>
#include <numbers>

#include "wdmlab/fft.hpp"
#include "wdmlab/sigkit.hpp"

namespace wdmlab::tx {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<double> rrc_taps(double rolloff, int span_symbols, int sps) {
    if (rolloff < 1e-3 || rolloff > 1.0)
        throw ConfigError("rrc_taps: rolloff out of range [1e-3, 1]");
    if (span_symbols <= 0 || span_symbols % 2 != 0)
        throw ConfigError("rrc_taps: span must be a positive even symbol count");
    if (sps < 1) throw ConfigError("rrc_taps: sps must be >= 1");

    const int n = span_symbols * sps + 1;
    const int mid = span_symbols * sps / 2;
    std::vector<double> h(n);
    const double b = rolloff;
    for (int i = 0; i < n; ++i) {
        const double t = double(i - mid) / double(sps);  // in symbol periods
        double v;
        if (std::abs(t) < 1e-12) {
            v = 1.0 + b * (4.0 / kPi - 1.0);
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
            v = (b / std::sqrt(2.0)) *
                ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                 (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            const double num = std::sin(kPi * t * (1.0 - b)) +
                               4.0 * b * t * std::cos(kPi * t * (1.0 + b));
            v = num / (kPi * t * (1.0 - 16.0 * b * b * t * t));
        }
        h[i] = v;
    }
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= scale;
    return h;
}

ComplexSeq pulse_shape(const SymbolStream& stream, const TxSpec& t) {
    if (stream.empty()) throw ConfigError("pulse_shape: empty symbol stream");
    const int sps = t.sps_sim;
    if (sps < 2) throw ConfigError("pulse_shape: sps_sim must be >= 2");

    ComplexSeq out;
    out.sample_rate_hz = t.baud * double(sps);
    out.samples.assign(stream.size() * size_t(sps), cd(0.0, 0.0));
    for (size_t k = 0; k < stream.size(); ++k) out.samples[k * size_t(sps)] = stream[k];

    auto taps = rrc_taps(t.rolloff, t.filter_span, sps);
    // sqrt(sps) keeps the waveform mean power equal to the symbol power after
    // the unit-energy kernel spreads each impulse.
    const double g = std::sqrt(double(sps));
    for (double& v : taps) v *= g;
    fftops::cyclic_filter(out, taps);
    return out;
}

int auto_sps(const WdmGrid& grid, double baud, double rolloff) {
    if (baud <= 0.0) throw ConfigError("auto_sps: baud must be positive");
    const double band = grid.rate_band(baud, rolloff);
    int sps = 2;
    while (band > 0.9 * baud * double(sps)) {
        sps *= 2;
        if (sps > (1 << 16)) throw ConfigError("auto_sps: grid does not fit any sane rate");
    }
    return sps;
}

DualPolField wdm_mux(const std::vector<DualPolField>& channels, const WdmGrid& grid,
                     const std::vector<double>& powers_dbm) {
    if (channels.empty()) throw ConfigError("wdm_mux: no channels");
    if (int(channels.size()) != grid.n_channels)
        throw ConfigError("wdm_mux: channel count does not match grid");
    if (powers_dbm.size() != channels.size())
        throw ConfigError("wdm_mux: power list does not match channel count");
    if (grid.n_channels % 2 == 0) throw ConfigError("wdm_mux: channel count must be odd");

    const size_t n = channels[0].size();
    const double fs = channels[0].sample_rate();
    for (const auto& ch : channels) {
        ch.require_consistent("wdm_mux");
        if (ch.size() != n || ch.sample_rate() != fs)
            throw ConfigError("wdm_mux: channels must share length and rate");
    }
    // One full spacing per channel has to fit; carrier offsets alone would
    // let the shaped skirts of the edge channels alias.
    if (grid.n_channels > 1 && double(grid.n_channels) * grid.spacing_hz > fs)
        throw ConfigError("wdm_mux: grid exceeds the simulation bandwidth");

    DualPolField out;
    out.center_offset_hz = 0.0;
    out.pol_x.sample_rate_hz = fs;
    out.pol_y.sample_rate_hz = fs;
    out.pol_x.samples.assign(n, cd(0.0, 0.0));
    out.pol_y.samples.assign(n, cd(0.0, 0.0));

    for (int c = 0; c < grid.n_channels; ++c) {
        DualPolField ch = channels[size_t(c)];
        sigkit::set_power(ch, dbm_to_watts(powers_dbm[size_t(c)]));
        const double df = fftops::snap_to_bin(grid.offset_of(c), n, fs);
        fftops::freq_shift(ch, df);
        for (size_t i = 0; i < n; ++i) {
            out.pol_x.samples[i] += ch.pol_x.samples[i];
            out.pol_y.samples[i] += ch.pol_y.samples[i];
        }
    }
    return out;
}

}  // namespace wdmlab::tx
