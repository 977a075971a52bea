// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace wdmlab::analysis {

namespace {

long round_half_up(double v) { return long(std::floor(v + 0.5)); }

LaneBer lane_ber(const SymbolStream& eq, const SymbolStream& ref,
                 const sigkit::Constellation& c) {
    if (eq.size() != ref.size()) throw ConfigError("ber_count: length mismatch");
    if (eq.empty()) throw ConfigError("ber_count: empty stream");
    const int bps = c.bits_per_symbol();
    LaneBer out;
    for (size_t k = 0; k < eq.size(); ++k) {
        const int a = c.nearest_label(eq[k]);
        const int b = c.nearest_label(ref[k]);
        int diff = a ^ b;
        while (diff) {
            out.bit_errors += size_t(diff & 1);
            diff >>= 1;
        }
        out.bits += size_t(bps);
    }
    out.ber = double(out.bit_errors) / double(out.bits);
    return out;
}

}  // namespace

BerReport ber_count(const SymbolStream& equalized, const SymbolStream& reference,
                    const sigkit::Constellation& c) {
    return ber_count_lanes({equalized}, {reference}, c);
}

BerReport ber_count_lanes(const std::vector<SymbolStream>& equalized,
                          const std::vector<SymbolStream>& reference,
                          const sigkit::Constellation& c) {
    if (equalized.empty() || equalized.size() != reference.size())
        throw ConfigError("ber_count: lane count mismatch");
    BerReport report;
    for (size_t l = 0; l < equalized.size(); ++l) {
        report.lanes.push_back(lane_ber(equalized[l], reference[l], c));
        report.bit_errors += report.lanes.back().bit_errors;
        report.bits += report.lanes.back().bits;
    }
    report.ber = double(report.bit_errors) / double(report.bits);
    return report;
}

double evm_db(const SymbolStream& equalized, const SymbolStream& reference) {
    if (equalized.size() != reference.size() || equalized.empty())
        throw ConfigError("evm_db: length mismatch");
    double err = 0.0, sig = 0.0;
    for (size_t k = 0; k < equalized.size(); ++k) {
        err += std::norm(equalized[k] - reference[k]);
        sig += std::norm(reference[k]);
    }
    if (sig <= 0.0) throw ConfigError("evm_db: zero reference power");
    return 10.0 * std::log10(err / sig);
}

BivrnnCost bivrnn_mults(const ComplexityInputs& inp) {
    if (inp.l_eff <= 0) throw ConfigError("bivrnn_mults: l_eff must be positive");
    if (inp.f <= 0 || inp.h <= 0 || inp.y <= 0 || inp.l <= 0)
        throw ConfigError("bivrnn_mults: dimensions must be positive");
    BivrnnCost out;
    const double f = inp.f, h = inp.h, y = inp.y, l = inp.l;
    out.total = 2.0 * (f * h + h * h) * l + 2.0 * h * l * y;
    out.detected = double(inp.l_eff) * (y / 2.0);
    out.mps = round_half_up(out.total / out.detected);
    return out;
}

DbpCost dbp_complexity(const ComplexityInputs& inp) {
    if (inp.n_fft <= 0 || inp.n_d >= inp.n_fft + 1)
        throw ConfigError("dbp_complexity: need N_d < N + 1");
    if (inp.m_order < 2) throw ConfigError("dbp_complexity: modulation order must be >= 2");
    const double n = inp.n_fft;
    const double log2n = std::log2(n);
    const double log2m = std::log2(double(inp.m_order));
    const double fft_term = n * (log2n + 1.0) * double(inp.n_s) /
                            ((n - double(inp.n_d) + 1.0) * log2m);
    DbpCost out;
    out.per_bit = 4.0 * double(inp.n_stpsp) * double(inp.n_spans) * (fft_term + double(inp.n_s));
    out.per_symbol = out.per_bit * log2m;
    return out;
}

long fde_complexity(const ComplexityInputs& inp) {
    if (inp.n_fft <= 0 || inp.n_d >= inp.n_fft + 1)
        throw ConfigError("fde_complexity: need N_d < N + 1");
    const double n = inp.n_fft;
    const double v = 4.0 * (n * (std::log2(n) + 1.0) * double(inp.n_s) /
                            (n - double(inp.n_d) + 1.0));
    return round_half_up(v);
}

double reduction_percent(double a, double b) {
    if (a <= 0.0) throw ConfigError("reduction_percent: baseline must be positive");
    return 100.0 * (a - b) / a;
}

namespace {

void evaluate_shifts(const std::vector<int>& shifts, const std::vector<SymbolStream>& a,
                     const std::vector<SymbolStream>& b, const ShiftEvaluator& eval, int jobs,
                     std::map<int, double>& ber_map) {
    std::vector<int> todo;
    for (int s : shifts)
        if (!ber_map.count(s)) todo.push_back(s);
    if (todo.empty()) return;
    std::vector<double> values(todo.size());
    const int n_threads = std::max(1, std::min<int>(jobs, int(todo.size())));
    if (n_threads == 1) {
        for (size_t i = 0; i < todo.size(); ++i) values[i] = eval(a, b, todo[i]);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&]() {
                for (size_t i = next.fetch_add(1); i < todo.size(); i = next.fetch_add(1))
                    values[i] = eval(a, b, todo[i]);
            });
        for (auto& th : pool) th.join();
    }
    for (size_t i = 0; i < todo.size(); ++i) ber_map[todo[i]] = values[i];
}

std::pair<int, double> map_minimum(const std::map<int, double>& m) {
    int best = 0;
    double val = std::numeric_limits<double>::infinity();
    for (const auto& [s, v] : m)
        if (v < val) {  // map iterates shifts ascending, so ties keep the lowest
            val = v;
            best = s;
        }
    return {best, val};
}

}  // namespace

AlignmentResult align_search(const std::vector<SymbolStream>& lanes_a,
                             const std::vector<SymbolStream>& lanes_b, const AlignConfig& cfg,
                             const ShiftEvaluator& evaluator) {
    if (lanes_a.empty() || lanes_b.empty()) throw ConfigError("align_search: empty lanes");
    if (cfg.coarse_step < 1 || cfg.fine_step < 1 || cfg.search_radius < cfg.coarse_step)
        throw ConfigError("align_search: bad step configuration");

    AlignmentResult res;
    std::vector<int> stage;
    for (int s = -cfg.search_radius; s <= cfg.search_radius; s += cfg.coarse_step)
        stage.push_back(s);
    evaluate_shifts(stage, lanes_a, lanes_b, evaluator, cfg.jobs, res.ber_map);
    auto [coarse_best, coarse_val] = map_minimum(res.ber_map);

    stage.clear();
    for (int s = coarse_best - cfg.coarse_step; s <= coarse_best + cfg.coarse_step;
         s += cfg.fine_step)
        stage.push_back(s);
    evaluate_shifts(stage, lanes_a, lanes_b, evaluator, cfg.jobs, res.ber_map);
    auto [fine_best, fine_val] = map_minimum(res.ber_map);

    stage.clear();
    for (int s = fine_best - cfg.fine_step; s <= fine_best + cfg.fine_step; ++s)
        stage.push_back(s);
    evaluate_shifts(stage, lanes_a, lanes_b, evaluator, cfg.jobs, res.ber_map);
    auto [best, best_val] = map_minimum(res.ber_map);

    double mean = 0.0;
    for (const auto& [s, v] : res.ber_map) mean += v;
    mean /= double(res.ber_map.size());
    res.best_shift = best;
    res.best_value = best_val;
    res.dip_depth = mean > 0.0 ? (mean - best_val) / mean : 0.0;
    res.found = res.dip_depth >= cfg.dip_threshold;
    return res;
}

ShiftEvaluator xpm_surrogate(const sigkit::Constellation& c, int smooth_window) {
    if (smooth_window < 1 || smooth_window % 2 == 0)
        throw ConfigError("xpm_surrogate: smoothing window must be odd");
    return [c, smooth_window](const std::vector<SymbolStream>& lanes_a,
                              const std::vector<SymbolStream>& lanes_b, int shift) -> double {
        const SymbolStream& a = lanes_a[0];
        const SymbolStream& b = lanes_b[0];
        if (a.size() != b.size() || a.empty())
            throw ConfigError("xpm_surrogate: lanes must share a positive length");
        const size_t n = a.size();

        // Decision-directed phase error of lane a.
        std::vector<double> phase(n), power(n);
        for (size_t k = 0; k < n; ++k) {
            const cd dec = c.points[size_t(c.nearest_label(a[k]))];
            phase[k] = std::arg(a[k] * std::conj(dec));
            power[k] = std::norm(b[k]);
        }

        auto correlation = [&](const std::vector<double>& p) -> double {
            double ma = 0.0, mb = 0.0;
            for (size_t k = 0; k < n; ++k) {
                ma += phase[k];
                mb += p[k];
            }
            ma /= double(n);
            mb /= double(n);
            double num = 0.0, va = 0.0, vb = 0.0;
            const size_t off = size_t((shift % int(n) + int(n)));
            for (size_t k = 0; k < n; ++k) {
                const double x = phase[k] - ma;
                const double y = p[(k + off) % n] - mb;
                num += x * y;
                va += x * x;
                vb += y * y;
            }
            if (va <= 0.0 || vb <= 0.0) return 0.0;
            return num / std::sqrt(va * vb);
        };

        // Centered moving average so the coarse grid still sees the dip.
        std::vector<double> smooth(n, 0.0);
        const int hw = smooth_window / 2;
        double acc = 0.0;
        for (int i = -hw; i <= hw; ++i) acc += power[size_t((i + int(n)) % int(n))];
        for (size_t k = 0; k < n; ++k) {
            smooth[k] = acc / double(smooth_window);
            acc -= power[(k + n - size_t(hw)) % n];
            acc += power[(k + size_t(hw) + 1) % n];
        }

        const double rho_raw = std::abs(correlation(power));
        const double rho_smooth = std::abs(correlation(smooth));
        return 0.5 * (1.0 - 0.5 * (rho_raw + rho_smooth));
    };
}

namespace {

double crossing(const std::vector<std::pair<double, double>>& curve, double target) {
    if (curve.size() < 2) throw ConfigError("osnr_gain_at_ber: need at least two points");
    const double lt = std::log10(target);
    for (size_t i = 0; i + 1 < curve.size(); ++i) {
        const auto [x0, b0] = curve[i];
        const auto [x1, b1] = curve[i + 1];
        if (b0 <= 0.0 || b1 <= 0.0) throw ConfigError("osnr_gain_at_ber: BER must be positive");
        const double l0 = std::log10(b0), l1 = std::log10(b1);
        if ((l0 - lt) * (l1 - lt) <= 0.0) {
            if (l0 == l1) return x0;
            return x0 + (x1 - x0) * (lt - l0) / (l1 - l0);
        }
    }
    throw ConfigError("osnr_gain_at_ber: curve does not cross the target BER");
}

}  // namespace

double osnr_gain_at_ber(const std::vector<std::pair<double, double>>& curve_a,
                        const std::vector<std::pair<double, double>>& curve_b,
                        double target_ber) {
    if (target_ber <= 0.0) throw ConfigError("osnr_gain_at_ber: target must be positive");
    return crossing(curve_a, target_ber) - crossing(curve_b, target_ber);
}

}  // namespace wdmlab::analysis
