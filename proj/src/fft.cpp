// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace wdmlab::fftops {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Plans are cached per (size, direction). Creation is serialized (FFTW
// planning is not thread-safe); execution through fftw_execute_dft is.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    fftw_plan get(size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cd> scratch(n);
        auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = fftw_plan_dft_1d(int(n), ptr, ptr, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

private:
    PlanCache() = default;
    std::mutex mu_;
    std::map<std::pair<size_t, int>, fftw_plan> plans_;
};

void run(std::vector<cd>& v, int sign) {
    if (v.empty()) throw ConfigError("fft: empty sequence");
    fftw_plan p = PlanCache::instance().get(v.size(), sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(p, ptr, ptr);
}

}  // namespace

void fft(std::vector<cd>& v) { run(v, FFTW_FORWARD); }

void ifft(std::vector<cd>& v) {
    run(v, FFTW_BACKWARD);
    const double s = 1.0 / double(v.size());
    for (auto& x : v) x *= s;
}

std::vector<double> bin_freqs_hz(size_t n, double fs) {
    std::vector<double> f(n);
    const double df = fs / double(n);
    for (size_t k = 0; k < n; ++k) {
        const long kk = (k < (n + 1) / 2) ? long(k) : long(k) - long(n);
        f[k] = double(kk) * df;
    }
    return f;
}

std::vector<double> bin_omegas(size_t n, double fs) {
    auto f = bin_freqs_hz(n, fs);
    for (auto& x : f) x *= kTwoPi;
    return f;
}

long nearest_bin(double freq_hz, size_t n, double fs) {
    return std::lround(freq_hz * double(n) / fs);
}

double snap_to_bin(double freq_hz, size_t n, double fs) {
    return double(nearest_bin(freq_hz, n, fs)) * fs / double(n);
}

void cyclic_filter(ComplexSeq& seq, std::span<const double> taps) {
    const size_t n = seq.size();
    if (n == 0) throw ConfigError("cyclic_filter: empty sequence");
    if (taps.size() % 2 == 0) throw ConfigError("cyclic_filter: taps must have odd length");
    if (taps.size() > n) throw ConfigError("cyclic_filter: kernel longer than block");
    const long half = long(taps.size() / 2);

    std::vector<cd> kernel(n, cd(0.0, 0.0));
    for (long k = -half; k <= half; ++k) {
        const size_t idx = size_t((k + long(n)) % long(n));
        kernel[idx] = cd(taps[size_t(k + half)], 0.0);
    }
    fft(kernel);
    fft(seq.samples);
    for (size_t i = 0; i < n; ++i) seq.samples[i] *= kernel[i];
    ifft(seq.samples);
}

void freq_shift(ComplexSeq& seq, double df_hz) {
    const size_t n = seq.size();
    const long bin = nearest_bin(df_hz, n, seq.sample_rate_hz);
    if (bin == 0) return;
    const double w = kTwoPi * double(bin) / double(n);
    for (size_t i = 0; i < n; ++i) seq.samples[i] *= std::polar(1.0, w * double(i));
}

void freq_shift(DualPolField& f, double df_hz) {
    freq_shift(f.pol_x, df_hz);
    freq_shift(f.pol_y, df_hz);
}

void brickwall(ComplexSeq& seq, double bw_hz) {
    const size_t n = seq.size();
    const auto freqs = bin_freqs_hz(n, seq.sample_rate_hz);
    fft(seq.samples);
    for (size_t k = 0; k < n; ++k) {
        if (std::abs(freqs[k]) > bw_hz / 2.0) seq.samples[k] = cd(0.0, 0.0);
    }
    ifft(seq.samples);
}

void brickwall(DualPolField& f, double bw_hz) {
    brickwall(f.pol_x, bw_hz);
    brickwall(f.pol_y, bw_hz);
}

void spectral_resample(ComplexSeq& seq, size_t new_len) {
    const size_t n = seq.size();
    if (new_len == 0) throw ConfigError("spectral_resample: zero target length");
    if (new_len == n) return;
    fft(seq.samples);
    std::vector<cd> out(new_len, cd(0.0, 0.0));
    const size_t m = std::min(n, new_len);
    const size_t pos = (m + 1) / 2;      // bins 0 .. pos-1
    const size_t neg = m - pos;          // bins -neg .. -1
    for (size_t k = 0; k < pos; ++k) out[k] = seq.samples[k];
    for (size_t k = 1; k <= neg; ++k) out[new_len - k] = seq.samples[n - k];
    const double scale = double(new_len) / double(n);
    for (auto& x : out) x *= scale;
    seq.samples = std::move(out);
    seq.sample_rate_hz *= scale;
    ifft(seq.samples);
}

void spectral_resample(DualPolField& f, size_t new_len) {
    spectral_resample(f.pol_x, new_len);
    spectral_resample(f.pol_y, new_len);
}

void apply_spectral(ComplexSeq& seq, std::span<const cd> factors) {
    if (factors.size() != seq.size()) throw ConfigError("apply_spectral: size mismatch");
    fft(seq.samples);
    for (size_t i = 0; i < seq.size(); ++i) seq.samples[i] *= factors[i];
    ifft(seq.samples);
}

}  // namespace wdmlab::fftops
