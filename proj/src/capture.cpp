// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/capture.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wdmlab::harness {

void export_capture(const Capture& cap, const std::string& path) {
    if (cap.lanes.empty()) throw ConfigError("export_capture: no lanes");
    const size_t n = cap.lanes[0].size();
    if (n == 0) throw ConfigError("export_capture: empty lanes");
    for (const auto& lane : cap.lanes)
        if (lane.size() != n) throw ConfigError("export_capture: lane length mismatch");
    if (cap.baud_hz <= 0.0) throw ConfigError("export_capture: baud must be positive");
    if (cap.constellation.empty()) throw ConfigError("export_capture: constellation name empty");

    std::ofstream out(path);
    if (!out) throw ConfigError("export_capture: cannot write " + path);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", cap.baud_hz);
    out << "#wdm-capture v1; lanes=" << cap.lanes.size() << "; baud=" << buf
        << "; constellation=" << cap.constellation << "\n";
    for (size_t k = 0; k < n; ++k) {
        out << k;
        for (const auto& lane : cap.lanes) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", lane[k].real(), lane[k].imag());
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw ConfigError("export_capture: write failed for " + path);
}

namespace {

std::string header_field(const std::string& header, const std::string& key, size_t line) {
    const std::string needle = key + "=";
    const size_t pos = header.find(needle);
    if (pos == std::string::npos)
        throw ParseError("capture: missing header field '" + key + "' at line " +
                         std::to_string(line));
    size_t end = header.find(';', pos);
    if (end == std::string::npos) end = header.size();
    std::string v = header.substr(pos + needle.size(), end - pos - needle.size());
    while (!v.empty() && (v.back() == ' ' || v.back() == '\r')) v.pop_back();
    while (!v.empty() && v.front() == ' ') v.erase(v.begin());
    return v;
}

}  // namespace

Capture import_capture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("capture: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("capture: empty file " + path);
    if (line.rfind("#wdm-capture v1;", 0) != 0)
        throw ParseError("capture: bad magic at line 1, expected '#wdm-capture v1;'");

    Capture cap;
    size_t n_lanes = 0;
    try {
        n_lanes = std::stoul(header_field(line, "lanes", 1));
        cap.baud_hz = std::stod(header_field(line, "baud", 1));
    } catch (const std::logic_error&) {
        throw ParseError("capture: malformed numeric header field at line 1");
    }
    cap.constellation = header_field(line, "constellation", 1);
    if (n_lanes == 0) throw ParseError("capture: lanes must be >= 1 at line 1");
    if (cap.baud_hz <= 0.0) throw ParseError("capture: baud must be positive at line 1");
    if (cap.constellation.empty())
        throw ParseError("capture: constellation name empty at line 1");
    cap.lanes.assign(n_lanes, SymbolStream());

    size_t row = 0;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* endp = nullptr;
        const unsigned long long idx = std::strtoull(p, &endp, 10);
        if (endp == p)
            throw ParseError("capture: bad index field at line " + std::to_string(line_no));
        if (idx != row)
            throw ParseError("capture: index " + std::to_string(idx) + " out of order at line " +
                             std::to_string(line_no) + " (expected " + std::to_string(row) + ")");
        p = endp;
        for (size_t lane = 0; lane < n_lanes; ++lane) {
            double v[2];
            for (int part = 0; part < 2; ++part) {
                if (*p != ',')
                    throw ParseError("capture: lane " + std::to_string(lane) +
                                     " misaligned row at line " + std::to_string(line_no));
                ++p;
                v[part] = std::strtod(p, &endp);
                if (endp == p)
                    throw ParseError("capture: bad value for lane " + std::to_string(lane) +
                                     " at line " + std::to_string(line_no));
                p = endp;
            }
            cap.lanes[lane].push_back(cd(v[0], v[1]));
        }
        while (*p == ' ') ++p;
        if (*p != '\0')
            throw ParseError("capture: trailing data at line " + std::to_string(line_no));
        ++row;
    }
    if (row == 0) throw ParseError("capture: no data rows in " + path);
    return cap;
}

}  // namespace wdmlab::harness
