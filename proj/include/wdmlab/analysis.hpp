// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_ANALYSIS_HPP
#define WDMLAB_ANALYSIS_HPP

#include <functional>
#include <map>
#include <vector>

#include "wdmlab/sigkit.hpp"
#include "wdmlab/types.hpp"

namespace wdmlab::analysis {

struct LaneBer {
    size_t bit_errors = 0;
    size_t bits = 0;
    double ber = 0.0;
};

struct BerReport {
    size_t bit_errors = 0;
    size_t bits = 0;
    double ber = 0.0;
    std::vector<LaneBer> lanes;
};

/// Min-distance demap both streams and compare bit labels.
BerReport ber_count(const SymbolStream& equalized, const SymbolStream& reference,
                    const sigkit::Constellation& c);
BerReport ber_count_lanes(const std::vector<SymbolStream>& equalized,
                          const std::vector<SymbolStream>& reference,
                          const sigkit::Constellation& c);

/// RMS error vector magnitude in dB relative to the reference power.
double evm_db(const SymbolStream& equalized, const SymbolStream& reference);

struct ComplexityInputs {
    // bi-VRNN side
    int f = 0, h = 0, y = 0, l = 0, l_eff = 0;
    // DBP / FDE side
    int n_stpsp = 0, n_spans = 0, n_fft = 0, n_d = 0, n_s = 0, m_order = 0;
};

struct BivrnnCost {
    double total = 0.0;     // real multiplications per word
    double detected = 0.0;  // symbols detected per word
    long mps = 0;
};
BivrnnCost bivrnn_mults(const ComplexityInputs& inp);

struct DbpCost {
    double per_bit = 0.0;
    double per_symbol = 0.0;
};
DbpCost dbp_complexity(const ComplexityInputs& inp);

long fde_complexity(const ComplexityInputs& inp);

double reduction_percent(double a, double b);

/// BER-like functional evaluated at a relative shift: lane b is advanced by
/// `shift` symbols before the joint metric is computed.
using ShiftEvaluator = std::function<double(const std::vector<SymbolStream>& lanes_a,
                                            const std::vector<SymbolStream>& lanes_b,
                                            int shift)>;

struct AlignConfig {
    int search_radius = 1000;
    int coarse_step = 100;
    int fine_step = 10;
    double dip_threshold = 0.2;  // (mean-min)/mean below this means no alignment
    int jobs = 1;
};

struct AlignmentResult {
    bool found = false;
    int best_shift = 0;
    double best_value = 0.0;
    double dip_depth = 0.0;
    std::map<int, double> ber_map;  // every evaluated shift
};

/// Three-stage grid search (coarse, fine, unit step) for the shift minimizing
/// the evaluator; ties resolve to the lowest shift. A landscape whose dip is
/// shallower than dip_threshold reports found = false.
AlignmentResult align_search(const std::vector<SymbolStream>& lanes_a,
                             const std::vector<SymbolStream>& lanes_b, const AlignConfig& cfg,
                             const ShiftEvaluator& evaluator);

/// Cheap alignment functional: cross-channel phase noise on lane a correlates
/// with power fluctuations of lane b only when the lanes are aligned. Returns
/// a pseudo-BER in [0, 0.5] that dips at the true offset. Uses the raw
/// correlation plus a moving-average-smoothed one so coarse grids still see
/// the dip.
ShiftEvaluator xpm_surrogate(const sigkit::Constellation& c, int smooth_window = 101);

/// Horizontal gap between two BER curves at a target BER, interpolating
/// log10(BER) linearly between samples. Positive when curve_a crosses at a
/// higher x than curve_b.
double osnr_gain_at_ber(const std::vector<std::pair<double, double>>& curve_a,
                        const std::vector<std::pair<double, double>>& curve_b,
                        double target_ber);

}  // namespace wdmlab::analysis

#endif
