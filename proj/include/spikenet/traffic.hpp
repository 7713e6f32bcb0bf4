/*
 * Copyright 2026 The spikenet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikenet/event.hpp"

namespace spikenet {

/// How spikes enter the simulation.
struct TrafficSpec {
    enum class Kind : uint8_t { PoissonRate, Trace };
    enum class DestDist : uint8_t { Uniform, Fixed, Weighted };

    Kind kind = Kind::PoissonRate;
    double rate = 0.0;               // events per cycle per FPGA, [0, 1]
    DestDist dest_dist = DestDist::Uniform;
    uint32_t fixed_dest_fpga = 0;    // FPGA index, for DestDist::Fixed
    // FPGA index -> integer weight, for DestDist::Weighted. A sender skips
    // its own entry unless it is the only FPGA.
    std::vector<std::pair<uint32_t, uint32_t>> dest_weights;
    std::string trace_path;          // for Kind::Trace
    uint32_t deadline_slack = 1000;  // system-time units added to each deadline

    void validate() const {
        SPIKENET_CHECK(rate >= 0.0 && rate <= 1.0, "injection rate must be within [0, 1]");
        SPIKENET_CHECK(deadline_slack < kTimestampHalfWindow,
                       "deadline slack must stay below half the timestamp period");
        if (dest_dist == DestDist::Weighted) {
            SPIKENET_CHECK(!dest_weights.empty(), "weighted distribution needs dest_weight entries");
            for (const auto& [fpga, weight] : dest_weights)
                SPIKENET_CHECK(weight > 0, "destination weights must be positive");
        }
    }
};

class TraceError : public std::runtime_error {
public:
    TraceError(std::string file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

/// One line of a trace or delivery log:
///   cycle fpga_id hicann_link pulse_address timestamp
struct TraceEvent {
    uint64_t cycle = 0;
    uint32_t fpga = 0;
    uint8_t hicann_link = 0;
    uint16_t pulse_address = 0;
    uint16_t timestamp = 0;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Loads a trace. Lines must be sorted by non-decreasing cycle so the
/// simulator can stream them. `#` starts a comment.
inline std::vector<TraceEvent> load_trace(std::istream& in,
                                          const std::string& filename = "<stream>") {
    std::vector<TraceEvent> events;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream iss(line);
        uint64_t cycle;
        uint32_t fpga, link, pulse, ts;
        if (!(iss >> cycle)) continue;  // blank or comment-only line
        if (!(iss >> fpga >> link >> pulse >> ts))
            throw TraceError(filename, lineno,
                             "expected: cycle fpga_id hicann_link pulse_address timestamp");
        std::string rest;
        if (iss >> rest) throw TraceError(filename, lineno, "trailing field '" + rest + "'");
        if (link >= 8) throw TraceError(filename, lineno, "hicann_link out of 0..7");
        if (pulse >= kPulseAddressLimit)
            throw TraceError(filename, lineno, "pulse_address out of 12-bit range");
        if (ts >= kTimestampPeriod)
            throw TraceError(filename, lineno, "timestamp out of 15-bit range");
        if (!events.empty() && cycle < events.back().cycle)
            throw TraceError(filename, lineno, "cycles must be non-decreasing");
        events.push_back(TraceEvent{cycle, fpga, static_cast<uint8_t>(link),
                                    static_cast<uint16_t>(pulse), static_cast<uint16_t>(ts)});
    }
    return events;
}

inline std::vector<TraceEvent> load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TraceError(path, 0, "cannot open file");
    return load_trace(in, path);
}

inline void write_trace_line(std::ostream& out, const TraceEvent& ev) {
    out << ev.cycle << ' ' << ev.fpga << ' ' << unsigned(ev.hicann_link) << ' '
        << ev.pulse_address << ' ' << ev.timestamp << '\n';
}

}  // namespace spikenet
