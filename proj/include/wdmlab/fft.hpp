// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_FFT_HPP
#define WDMLAB_FFT_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "wdmlab/types.hpp"

namespace wdmlab::fftops {

/// In-place forward DFT, unnormalized (FFTW backend, any length).
void fft(std::vector<cd>& v);

/// In-place inverse DFT, scaled by 1/N so ifft(fft(x)) == x.
void ifft(std::vector<cd>& v);

/// Bin center frequencies in Hz for an N-point DFT at rate fs, in FFT order
/// (bin k holds k*fs/N for k < N/2, (k-N)*fs/N above).
std::vector<double> bin_freqs_hz(size_t n, double fs);

/// Angular frequencies (rad/s) in FFT order.
std::vector<double> bin_omegas(size_t n, double fs);

/// Nearest DFT bin for a frequency offset; offsets snapped to bins keep the
/// cyclic block exactly periodic.
long nearest_bin(double freq_hz, size_t n, double fs);
double snap_to_bin(double freq_hz, size_t n, double fs);

/// Cyclic convolution with a zero-phase real kernel given as taps centered on
/// index 0 (taps.size() odd, center tap at taps[taps.size()/2]). No group
/// delay is introduced.
void cyclic_filter(ComplexSeq& seq, std::span<const double> centered_taps);

/// Multiply by exp(+j*2*pi*df*t); df is snapped to the nearest bin first.
void freq_shift(ComplexSeq& seq, double df_hz);
void freq_shift(DualPolField& f, double df_hz);

/// Ideal brick-wall bandpass keeping |f| <= bw/2 (band edges inclusive).
void brickwall(ComplexSeq& seq, double bw_hz);
void brickwall(DualPolField& f, double bw_hz);

/// Fourier-domain resampling of the cyclic block to new_len samples.
/// Waveform amplitudes are preserved; content outside the new Nyquist band is
/// discarded (truncation) or zero (extension).
void spectral_resample(ComplexSeq& seq, size_t new_len);
void spectral_resample(DualPolField& f, size_t new_len);

/// Multiply the spectrum by per-bin complex factors (FFT bin order).
void apply_spectral(ComplexSeq& seq, std::span<const cd> factors);

}  // namespace wdmlab::fftops

#endif
