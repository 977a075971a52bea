// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_DSP_HPP
#define WDMLAB_DSP_HPP

#include <utility>
#include <vector>

#include "wdmlab/fiber.hpp"
#include "wdmlab/types.hpp"

namespace wdmlab::dsp {

struct RxChain {
    double baud = 16e9;
    double rolloff = 0.1;
    int filter_span = 32;
    double select_bw = 0.0;  // 0 = (1+rolloff)*baud
    int target_sps = 2;

    double effective_bw() const { return select_bw > 0.0 ? select_bw : (1.0 + rolloff) * baud; }
};

struct DbpConfig {
    int steps_per_span = 20;
    int sps = 4;
    int n_channels_backprop = 1;
};

enum class EqMode { lms, cma };

struct AdaptiveEqConfig {
    int n_taps = 21;
    double step_size = 1e-3;
    EqMode mode = EqMode::lms;
    double norm_bound = 1e6;  // squared tap norm treated as divergence
};

/// Shift the wanted channel to baseband (offset snapped to an FFT bin),
/// brick-wall bandpass, resample to target_sps * baud.
DualPolField channel_select(const DualPolField& field, double offset_hz, const RxChain& rx);

/// All-pass inverse of the accumulated dispersion phase.
DualPolField fde(const DualPolField& field, double total_beta2_ps2);

/// Full-field digital backpropagation: per span in reverse order, undo the
/// amplifier gain, then split-step with negated alpha, beta2, gamma at
/// steps_per_span resolution. The caller hands in a field already resampled
/// to the backpropagation rate (see resample_for_dbp).
DualPolField dbp(const DualPolField& field, const fiber::LinkSpec& link, const DbpConfig& cfg);

/// Band-limit to n_channels_backprop * spacing and resample to sps * baud.
DualPolField resample_for_dbp(const DualPolField& field, double spacing_hz, double baud,
                              const DbpConfig& cfg);

/// Matched RRC filter then one sample per symbol at k*sps + timing_offset
/// (cyclic). Returns (pol x, pol y) symbol streams.
std::pair<SymbolStream, SymbolStream> matched_downsample(const DualPolField& field,
                                                         const RxChain& rx,
                                                         int timing_offset = 0);

/// Tapped adaptive equalizer. LMS mode adapts real taps per rail against the
/// reference over the reference's length, then applies the frozen taps to the
/// whole stream. CMA mode adapts complex taps toward constant modulus^2 = r2
/// over the training_symbols prefix. Both keep the center tap aligned so the
/// output has zero delay.
SymbolStream adaptive_equalize(const SymbolStream& stream, const SymbolStream& ref,
                               const AdaptiveEqConfig& cfg);
SymbolStream adaptive_equalize_cma(const SymbolStream& stream, double r2,
                                   size_t training_symbols, const AdaptiveEqConfig& cfg);

struct LinregModel {
    int window_len = 0;
    int n_features = 0;  // real features per time step
    int n_outputs = 0;   // real outputs (center symbol)
    std::vector<double> weights;  // n_outputs x (window_len*n_features + 1), row-major
};

/// Least-squares linear map from the flattened L x F window (plus bias) to
/// the center symbol's outputs, fit on the training lanes. Lanes are complex
/// streams; I/Q split into separate real features in lane order.
LinregModel linreg_fit(const std::vector<SymbolStream>& in_lanes,
                       const std::vector<SymbolStream>& target_lanes, int window_len);

/// Apply a fit model to every symbol that can be centered; returns equalized
/// lanes (shorter than input by window_len-1, starting at index (L-1)/2).
std::vector<SymbolStream> linreg_apply(const LinregModel& model,
                                       const std::vector<SymbolStream>& in_lanes);

}  // namespace wdmlab::dsp

#endif
