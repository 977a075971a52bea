// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/sigkit.hpp"

#include <cmath>
#include <limits>

namespace wdmlab::sigkit {

namespace {

// Per-rail Gray code for 2-bit amplitudes: 00 01 11 10 -> -3 -1 +1 +3.
// Neighboring amplitudes differ in exactly one bit.
double gray2_amplitude(int g) {
    switch (g) {
        case 0b00: return -3.0;
        case 0b01: return -1.0;
        case 0b11: return +1.0;
        default:   return +3.0;  // 0b10
    }
}

Constellation make_qpsk() {
    Constellation c;
    c.order = 4;
    c.name = "qpsk";
    c.points.resize(4);
    const double a = 1.0 / std::sqrt(2.0);
    for (int label = 0; label < 4; ++label) {
        const int bi = (label >> 1) & 1;
        const int bq = label & 1;
        c.points[size_t(label)] = cd(bi ? -a : a, bq ? -a : a);
    }
    return c;
}

Constellation make_qam16() {
    Constellation c;
    c.order = 16;
    c.name = "16qam";
    c.points.resize(16);
    const double s = 1.0 / std::sqrt(10.0);  // E|s|^2 = (9+1+1+9)/4 * 2 / 10 = 1
    for (int label = 0; label < 16; ++label) {
        const int gi = (label >> 2) & 0b11;
        const int gq = label & 0b11;
        c.points[size_t(label)] = cd(gray2_amplitude(gi) * s, gray2_amplitude(gq) * s);
    }
    return c;
}

}  // namespace

int Constellation::bits_per_symbol() const {
    int b = 0;
    while ((1 << b) < order) ++b;
    return b;
}

int Constellation::nearest_label(cd v) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int label = 0; label < order; ++label) {
        const double d = std::norm(v - points[size_t(label)]);
        if (d < best_d) {
            best_d = d;
            best = label;
        }
    }
    return best;
}

const Constellation& Constellation::qpsk() {
    static const Constellation c = make_qpsk();
    return c;
}

const Constellation& Constellation::qam16() {
    static const Constellation c = make_qam16();
    return c;
}

const Constellation& Constellation::by_name(const std::string& name) {
    if (name == "qpsk") return qpsk();
    if (name == "16qam" || name == "qam16") return qam16();
    throw ConfigError("unknown constellation '" + name + "' (expected qpsk or 16qam)");
}

SymbolStream prng_symbols(Seed seed, size_t n, const Constellation& c) {
    if (n == 0) throw ConfigError("prng_symbols: n must be > 0");
    Rng rng(seed);
    SymbolStream out(n);
    for (size_t i = 0; i < n; ++i) out[i] = c.points[rng.below(uint32_t(c.order))];
    return out;
}

SymbolStream qam_map(const std::vector<uint8_t>& bits, const Constellation& c) {
    const int bps = c.bits_per_symbol();
    if (bits.size() % size_t(bps) != 0) {
        throw ConfigError("qam_map: bit count not divisible by bits per symbol");
    }
    SymbolStream out(bits.size() / size_t(bps));
    for (size_t i = 0; i < out.size(); ++i) {
        int label = 0;
        for (int b = 0; b < bps; ++b) label = (label << 1) | (bits[i * size_t(bps) + size_t(b)] & 1);
        out[i] = c.points[size_t(label)];
    }
    return out;
}

std::vector<uint8_t> qam_demap(const SymbolStream& stream, const Constellation& c) {
    const int bps = c.bits_per_symbol();
    std::vector<uint8_t> bits;
    bits.reserve(stream.size() * size_t(bps));
    for (const cd& v : stream) {
        const int label = c.nearest_label(v);
        for (int b = bps - 1; b >= 0; --b) bits.push_back(uint8_t((label >> b) & 1));
    }
    return bits;
}

double power_of(const DualPolField& f) {
    f.require_consistent("power_of");
    double acc = 0.0;
    for (size_t i = 0; i < f.size(); ++i) {
        acc += std::norm(f.pol_x.samples[i]) + std::norm(f.pol_y.samples[i]);
    }
    return acc / double(f.size());
}

void set_power(DualPolField& f, double watts) {
    const double p = power_of(f);
    if (p <= 0.0) throw ConfigError("set_power: field has zero power");
    const double g = std::sqrt(watts / p);
    for (auto& v : f.pol_x.samples) v *= g;
    for (auto& v : f.pol_y.samples) v *= g;
}

double mean_power(const SymbolStream& s) {
    if (s.empty()) return 0.0;
    double acc = 0.0;
    for (const cd& v : s) acc += std::norm(v);
    return acc / double(s.size());
}

void normalize_mean_power(SymbolStream& s) {
    const double p = mean_power(s);
    if (p <= 0.0) return;
    const double g = 1.0 / std::sqrt(p);
    for (auto& v : s) v *= g;
}

}  // namespace wdmlab::sigkit
