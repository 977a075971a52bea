// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/fiber.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "wdmlab/fft.hpp"

namespace wdmlab::fiber {

namespace {

std::vector<cd> linear_factor(const std::vector<double>& omega, double alpha_lin_m,
                              double beta2_s2_m, double dz) {
    std::vector<cd> f(omega.size());
    const double att = std::exp(-0.5 * alpha_lin_m * dz);
    for (size_t i = 0; i < omega.size(); ++i) {
        const double phase = 0.5 * beta2_s2_m * omega[i] * omega[i] * dz;
        f[i] = std::polar(att, phase);
    }
    return f;
}

void apply_linear(DualPolField& field, const std::vector<cd>& factor) {
    fftops::apply_spectral(field.pol_x, factor);
    fftops::apply_spectral(field.pol_y, factor);
}

double effective_step(double alpha_lin_m, double h) {
    if (std::abs(alpha_lin_m * h) < 1e-12) return h;
    return 2.0 * std::sinh(0.5 * alpha_lin_m * h) / alpha_lin_m;
}

void nonlinear_rotate(DualPolField& field, double gamma_w_m, double xi) {
    const double k = (8.0 / 9.0) * gamma_w_m * xi;
    auto& x = field.pol_x.samples;
    auto& y = field.pol_y.samples;
    for (size_t i = 0; i < x.size(); ++i) {
        const double p = std::norm(x[i]) + std::norm(y[i]);
        const cd rot = std::polar(1.0, k * p);
        x[i] *= rot;
        y[i] *= rot;
    }
}

// After a spectral step any non-finite sample has contaminated every bin, so
// probing one sample per lane is enough to detect blow-up.
bool probe_finite(const DualPolField& field) {
    const cd a = field.pol_x.samples[0];
    const cd b = field.pol_y.samples[0];
    return std::isfinite(a.real()) && std::isfinite(a.imag()) && std::isfinite(b.real()) &&
           std::isfinite(b.imag());
}

}  // namespace

void split_step_manakov(DualPolField& field, double alpha_lin_m, double beta2_s2_m,
                        double gamma_w_m, double length_m, double step_m) {
    field.require_consistent("split_step_manakov");
    if (length_m <= 0.0) throw ConfigError("split_step_manakov: length must be positive");
    if (step_m <= 0.0) throw ConfigError("split_step_manakov: step must be positive");

    // Whole steps of step_m plus a shorter remainder step when the step does
    // not divide the length.
    std::vector<double> steps;
    const int n_full = int(std::floor(length_m / step_m + 1e-9));
    double rem = length_m - double(n_full) * step_m;
    if (rem < 1e-6 * step_m) rem = 0.0;
    steps.assign(size_t(n_full), step_m);
    if (rem > 0.0) steps.push_back(rem);
    if (steps.empty()) steps.push_back(length_m);

    // With no loss and no dispersion the linear operator is the identity;
    // skipping the FFT round trip keeps the output bit-exact.
    const bool linear_is_identity = alpha_lin_m == 0.0 && beta2_s2_m == 0.0;

    const auto omega = fftops::bin_omegas(field.size(), field.sample_rate());
    const auto half = linear_factor(omega, alpha_lin_m, beta2_s2_m, 0.5 * step_m);
    const auto full = linear_factor(omega, alpha_lin_m, beta2_s2_m, step_m);
    const double xi_full = effective_step(alpha_lin_m, step_m);

    auto factor_for = [&](double dz) -> std::vector<cd> {
        return linear_factor(omega, alpha_lin_m, beta2_s2_m, dz);
    };
    auto linear = [&](const std::vector<cd>& factor) {
        if (!linear_is_identity) apply_linear(field, factor);
    };

    linear(steps.front() == step_m ? half : factor_for(0.5 * steps.front()));
    for (size_t s = 0; s < steps.size(); ++s) {
        const double h = steps[s];
        nonlinear_rotate(field, gamma_w_m, h == step_m ? xi_full : effective_step(alpha_lin_m, h));
        if (s + 1 < steps.size()) {
            const double dz = 0.5 * (h + steps[s + 1]);
            linear(dz == step_m ? full : factor_for(dz));
        } else {
            linear(h == step_m ? half : factor_for(0.5 * h));
        }
        if (!probe_finite(field))
            throw NumericError("split_step_manakov: non-finite field after step " +
                               std::to_string(s));
    }
}

void ssfm_span(DualPolField& field, const FiberSpec& fiber, const SsfmConfig& cfg) {
    split_step_manakov(field, fiber.alpha_lin_m(), fiber.beta2_s2_m(), fiber.gamma_w_m(),
                       fiber.length_km * 1e3, cfg.step_km * 1e3);
}

void edfa(DualPolField& field, double gain_db, double nf_db, Seed seed, bool noiseless,
          double center_wavelength_nm) {
    field.require_consistent("edfa");
    if (gain_db < 0.0) throw ConfigError("edfa: gain must be non-negative");
    const double g_amp = std::pow(10.0, gain_db / 20.0);
    if (noiseless) {
        for (auto* lane : {&field.pol_x.samples, &field.pol_y.samples})
            for (auto& v : *lane) v *= g_amp;
        return;
    }
    const double g_pow = g_amp * g_amp;
    const double n_sp = std::pow(10.0, nf_db / 10.0) / 2.0;
    const double nu = constants::light_speed_m_s / (center_wavelength_nm * 1e-9);
    const double p_ase = (g_pow - 1.0) * constants::planck_js * nu * n_sp * field.sample_rate();
    const double sigma = std::sqrt(p_ase / 2.0);

    Rng rng(seed);
    for (auto* lane : {&field.pol_x.samples, &field.pol_y.samples}) {
        for (auto& v : *lane) {
            v *= g_amp;
            v += cd(sigma * rng.gaussian(), sigma * rng.gaussian());
        }
    }
}

void propagate_link(DualPolField& field, const LinkSpec& link, const SsfmConfig& cfg,
                    Seed seed, bool noiseless) {
    if (link.n_spans < 1) throw ConfigError("propagate_link: need at least one span");
    for (int s = 0; s < link.n_spans; ++s) {
        ssfm_span(field, link.fiber, cfg);
        edfa(field, link.span_gain_db(), link.nf_db, derive_seed(seed, uint32_t(s)),
             noiseless, link.center_wavelength_nm);
    }
}

}  // namespace wdmlab::fiber
