// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_SIGKIT_HPP
#define WDMLAB_SIGKIT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wdmlab/rng.hpp"
#include "wdmlab/types.hpp"

namespace wdmlab::sigkit {

/// Gray-labelled square constellation normalized to unit average power.
/// points[label] is the symbol carrying that bit label; labels split the bits
/// MSB-first between the I rail and the Q rail.
struct Constellation {
    int order = 0;
    std::vector<cd> points;
    std::string name;

    int bits_per_symbol() const;

    /// Minimum-Euclidean-distance label; exact ties go to the lowest label.
    int nearest_label(cd v) const;

    static const Constellation& qpsk();
    static const Constellation& qam16();
    static const Constellation& by_name(const std::string& name);
};

/// n symbols drawn uniformly from the constellation, deterministic in seed.
SymbolStream prng_symbols(Seed seed, size_t n, const Constellation& c);

/// Map bits (one per element, MSB of each symbol first) onto symbols.
SymbolStream qam_map(const std::vector<uint8_t>& bits, const Constellation& c);

/// Hard-decision demap to bit labels.
std::vector<uint8_t> qam_demap(const SymbolStream& stream, const Constellation& c);

/// Mean of |pol_x|^2 + |pol_y|^2 in watts.
double power_of(const DualPolField& f);

/// Scale the field so power_of(f) == watts.
void set_power(DualPolField& f, double watts);

double mean_power(const SymbolStream& s);

/// Scale a stream to unit mean power (ideal AGC).
void normalize_mean_power(SymbolStream& s);

}  // namespace wdmlab::sigkit

#endif
