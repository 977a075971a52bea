// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_FIBER_HPP
#define WDMLAB_FIBER_HPP

#include <cmath>

#include "wdmlab/rng.hpp"
#include "wdmlab/types.hpp"

namespace wdmlab::fiber {

struct FiberSpec {
    double alpha_db_km = 0.2;
    double beta2_ps2_km = -20.0;
    double gamma_w_km = 1.3;
    double length_km = 50.0;

    double alpha_lin_m() const { return alpha_db_km * std::log(10.0) / 10.0 / 1e3; }
    double beta2_s2_m() const { return beta2_ps2_km * 1e-27; }
    double gamma_w_m() const { return gamma_w_km / 1e3; }
};

struct SsfmConfig {
    double step_km = 0.1;  // whole steps of this size, remainder as a short last step
};

struct LinkSpec {
    FiberSpec fiber;  // one span
    int n_spans = 8;
    double nf_db = 5.0;
    double center_wavelength_nm = 1550.0;

    double total_km() const { return fiber.length_km * double(n_spans); }
    double span_gain_db() const { return fiber.alpha_db_km * fiber.length_km; }
    double total_beta2_ps2() const { return fiber.beta2_ps2_km * total_km(); }
    double center_freq_hz() const {
        return constants::light_speed_m_s / (center_wavelength_nm * 1e-9);
    }
};

/// Symmetric split-step integration of the Manakov equation over a uniform
/// fiber stretch. Signed coefficients, so backpropagation reuses the same
/// engine with alpha, beta2 and gamma negated. The nonlinear phase per step
/// uses the mid-step field with effective length 2*sinh(alpha*h/2)/alpha,
/// which makes the continuous-wave phase exact at any step size and a
/// matched-resolution inverse pass an exact algebraic inverse.
void split_step_manakov(DualPolField& field, double alpha_lin_m, double beta2_s2_m,
                        double gamma_w_m, double length_m, double step_m);

/// One span of forward propagation.
void ssfm_span(DualPolField& field, const FiberSpec& fiber, const SsfmConfig& cfg);

/// Flat gain followed by white ASE, (G-1)*h*nu*n_sp*B_sim per polarization,
/// n_sp = 10^(NF/10)/2. Noise order: pol x samples then pol y, re/im pairs.
void edfa(DualPolField& field, double gain_db, double nf_db, Seed seed,
          bool noiseless = false, double center_wavelength_nm = 1550.0);

/// n_spans times: SSFM over one span, then an EDFA that exactly undoes the
/// span loss. Span s uses derive_seed(seed, s) for its amplifier noise.
void propagate_link(DualPolField& field, const LinkSpec& link, const SsfmConfig& cfg,
                    Seed seed, bool noiseless = false);

}  // namespace wdmlab::fiber

#endif
