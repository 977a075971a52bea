// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_TX_HPP
#define WDMLAB_TX_HPP

#include <vector>

#include "wdmlab/types.hpp"

namespace wdmlab::tx {

struct TxSpec {
    double baud = 16e9;
    double rolloff = 0.1;
    int sps_sim = 0;       // 0 = derive from the grid via auto_sps
    int filter_span = 32;  // symbols, even
};

struct WdmGrid {
    int n_channels = 3;  // odd; the channel of interest sits at offset 0
    double spacing_hz = 20e9;

    double offset_of(int ch) const {
        return (double(ch) - double(n_channels - 1) / 2.0) * spacing_hz;
    }
    /// Physical band actually occupied by shaped channels (alias check).
    double occupied_band(double baud, double rolloff) const {
        return double(n_channels - 1) * spacing_hz + (1.0 + rolloff) * baud;
    }
    /// Band figure used by the sample-rate rule, one full spacing per channel.
    double rate_band(double baud, double rolloff) const {
        return double(n_channels) * spacing_hz + (1.0 + rolloff) * baud;
    }
};

/// Root-raised-cosine taps, symmetric, unit energy, length span*sps + 1.
/// The removable singularities at t = 0 and |t| = T/(4*rolloff) use their
/// analytic limits. rolloff below 1e-3 is rejected.
std::vector<double> rrc_taps(double rolloff, int span_symbols, int sps);

/// Zero-stuff by sps_sim and RRC-filter (cyclic, zero-phase kernel, so symbol
/// k stays centered on sample k*sps_sim). Output mean power equals the mean
/// symbol power.
ComplexSeq pulse_shape(const SymbolStream& stream, const TxSpec& t);

/// Smallest power-of-two oversampling such that n_channels*spacing plus one
/// shaped channel fits in 90% of the simulation rate.
int auto_sps(const WdmGrid& grid, double baud, double rolloff);

/// Scale each channel to its launch power, shift to its grid offset and sum.
/// Offsets are snapped to FFT bins of the common block. Throws ConfigError if
/// the band does not fit the sample rate.
DualPolField wdm_mux(const std::vector<DualPolField>& channels, const WdmGrid& grid,
                     const std::vector<double>& powers_dbm);

}  // namespace wdmlab::tx

#endif
