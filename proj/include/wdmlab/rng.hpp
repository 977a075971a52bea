// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_RNG_HPP
#define WDMLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace wdmlab {

/// MT19937 with hand-rolled integer/Gaussian draws. The standard library
/// distributions are implementation-defined, so drawing through the raw
/// engine keeps streams bit-identical across toolchains.
class Rng {
public:
    explicit Rng(uint32_t seed) : eng_(seed) {}

    uint32_t next_u32() { return eng_(); }

    /// Unbiased uniform integer in [0, n). Rejection sampling; for n a power
    /// of two this never rejects.
    uint32_t below(uint32_t n) {
        const uint64_t span = uint64_t(1) << 32;
        const uint32_t limit = uint32_t(span - span % n);
        uint32_t r;
        do {
            r = eng_();
        } while (limit != 0 && r >= limit);
        return r % n;
    }

    /// Uniform double in (0, 1].
    double unit() { return (double(eng_()) + 1.0) * (1.0 / 4294967296.0); }

    /// Standard normal via Box-Muller (pairs cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = unit();
        const double u2 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix32; decorrelates seeds for derived streams (per-span noise,
/// per-point sweep seeds).
inline uint32_t derive_seed(uint32_t base, uint32_t stream) {
    uint32_t z = base + 0x9E3779B9u * (stream + 1u);
    z = (z ^ (z >> 16)) * 0x85EBCA6Bu;
    z = (z ^ (z >> 13)) * 0xC2B2AE35u;
    return z ^ (z >> 16);
}

/// Per-lane data seeds are seed_base + lane_index so lanes stay statistically
/// independent while remaining easy to reproduce one at a time.
inline uint32_t lane_seed(uint32_t base, uint32_t lane_index) { return base + lane_index; }

}  // namespace wdmlab

#endif
