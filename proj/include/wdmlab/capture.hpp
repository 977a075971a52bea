// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_CAPTURE_HPP
#define WDMLAB_CAPTURE_HPP

#include <string>
#include <vector>

#include "wdmlab/types.hpp"

namespace wdmlab::harness {

/// Symbol-rate lane capture. On disk: one header line
///   #wdm-capture v1; lanes=<n>; baud=<Hz>; constellation=<name>
/// then one CSV row per symbol: index, lane0_I, lane0_Q, lane1_I, ...
/// Values are written with 17 significant digits so the round trip is
/// bit-exact.
struct Capture {
    std::vector<SymbolStream> lanes;
    double baud_hz = 0.0;
    std::string constellation;
};

void export_capture(const Capture& cap, const std::string& path);
Capture import_capture(const std::string& path);

}  // namespace wdmlab::harness

#endif
