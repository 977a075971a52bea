// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_TYPES_HPP
#define WDMLAB_TYPES_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdmlab {

using cd = std::complex<double>;

/// Bad or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failure during simulation or training (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file (CLI exit code 4).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Complex baseband waveform with sample-rate metadata. |a|^2 is instantaneous
/// power in watts.
struct ComplexSeq {
    std::vector<cd> samples;
    double sample_rate_hz = 0.0;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

/// Dual-polarization field. Both polarizations share length and sample rate.
/// center_offset_hz is the offset of this field's center from the simulation
/// band center (0 for the full multiplexed field).
struct DualPolField {
    ComplexSeq pol_x;
    ComplexSeq pol_y;
    double center_offset_hz = 0.0;

    size_t size() const { return pol_x.size(); }
    double sample_rate() const { return pol_x.sample_rate_hz; }

    void require_consistent(const char* where) const {
        if (pol_x.samples.size() != pol_y.samples.size() ||
            pol_x.sample_rate_hz != pol_y.sample_rate_hz) {
            throw ConfigError(std::string(where) + ": polarizations disagree in length or rate");
        }
        if (pol_x.empty()) throw ConfigError(std::string(where) + ": empty field");
        if (pol_x.sample_rate_hz <= 0.0) throw ConfigError(std::string(where) + ": sample rate must be > 0");
    }
};

/// One lane of complex symbols at 1 sample/symbol.
using SymbolStream = std::vector<cd>;

/// 32-bit seed. Identical seeds give bit-identical streams.
using Seed = uint32_t;

namespace constants {
inline constexpr double planck_js = 6.62607015e-34;
inline constexpr double light_speed_m_s = 2.99792458e8;
}  // namespace constants

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace wdmlab

#endif
