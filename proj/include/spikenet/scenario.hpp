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
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "spikenet/sim.hpp"

namespace spikenet {

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

/// Synthetic routing-table generation for rate-driven experiments.
struct AutoTableParams {
    enum class Multicast : uint8_t { Single, All, Spread };

    uint32_t pulses_per_link = 64;  // mapped pulse addresses per chip link
    Multicast multicast = Multicast::Single;
};

/// Builds one consistent table set per FPGA: every (link, pulse) key below
/// pulses_per_link maps round-robin onto the other FPGAs (onto itself only
/// in a single-FPGA build), with GUIDs assigned per destination table and a
/// matching multicast entry installed there.
inline std::vector<std::shared_ptr<const RoutingTables>> build_auto_tables(
    const TopologySpec& topo, const AutoTableParams& params) {
    SPIKENET_CHECK(params.pulses_per_link >= 1 && params.pulses_per_link <= kPulseAddressLimit,
                   "pulses_per_link out of range");
    const uint32_t nf = topo.fpga_count();
    const uint32_t hicanns = topo.hicanns_per_fpga;
    const uint8_t full_mask = static_cast<uint8_t>((1u << hicanns) - 1);

    std::vector<RoutingTables> tables(nf);
    std::vector<uint32_t> next_guid(nf, 0);

    for (uint32_t f = 0; f < nf; ++f) {
        std::vector<uint32_t> eligible;
        for (uint32_t g = 0; g < nf; ++g)
            if (g != f || nf == 1) eligible.push_back(g);

        for (uint32_t link = 0; link < hicanns; ++link) {
            for (uint32_t pulse = 0; pulse < params.pulses_per_link; ++pulse) {
                const uint32_t stream = link * params.pulses_per_link + pulse;
                // Offset the round robin per sender so sparse maps do not
                // concentrate everyone's traffic on the same destinations.
                const uint32_t dest = eligible[(stream + f) % eligible.size()];
                if (next_guid[dest] >= kGuidLimit)
                    throw TopologyError(
                        "guid space exhausted for destination fpga " + std::to_string(dest) +
                        "; lower pulses_per_link");
                const Guid guid{next_guid[dest]++};

                uint8_t mask = 0;
                switch (params.multicast) {
                    case AutoTableParams::Multicast::Single:
                        mask = static_cast<uint8_t>(1u << (pulse % hicanns));
                        break;
                    case AutoTableParams::Multicast::All:
                        mask = full_mask;
                        break;
                    case AutoTableParams::Multicast::Spread:
                        mask = static_cast<uint8_t>(full_mask >> (pulse % hicanns));
                        break;
                }

                tables[f].source.insert(
                    SourceKey{static_cast<uint8_t>(link), static_cast<uint16_t>(pulse)},
                    SourceEntry{topo.fpga_address(dest), guid});
                tables[dest].dest.insert(guid, mask);
            }
        }
    }

    std::vector<std::shared_ptr<const RoutingTables>> out;
    out.reserve(nf);
    for (uint32_t f = 0; f < nf; ++f)
        out.push_back(std::make_shared<const RoutingTables>(std::move(tables[f])));
    return out;
}

// ---------------------------------------------------------------------------
// Scenario file: line oriented `key = value`, `#` starts a comment. Keys and
// defaults are documented in the README. Unknown keys are errors.
// ---------------------------------------------------------------------------

namespace detail {

struct ScenarioStaging {
    std::string tables_mode;  // "", "auto", or a path
    std::vector<std::pair<uint32_t, std::string>> table_overrides;
    std::string trace_path;
    AutoTableParams auto_params;
};

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> value_tokens(const std::string& v) {
    std::istringstream iss(v);
    std::vector<std::string> toks;
    std::string t;
    while (iss >> t) toks.push_back(t);
    return toks;
}

template <typename T>
T parse_number(const std::string& tok, const std::string& file, int line, const char* key) {
    std::istringstream iss(tok);
    T v{};
    iss >> v;
    if (iss.fail() || !iss.eof())
        throw ScenarioError(file, line, std::string("bad value '") + tok + "' for " + key);
    return v;
}

inline bool parse_on_off(const std::string& tok, const std::string& file, int line,
                         const char* key) {
    if (tok == "on" || tok == "true" || tok == "1") return true;
    if (tok == "off" || tok == "false" || tok == "0") return false;
    throw ScenarioError(file, line, std::string("expected on/off for ") + key);
}

inline std::string resolve_path(const std::string& base_dir, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (std::filesystem::path(base_dir) / path).string();
}

}  // namespace detail

/// Parses a scenario. Paths inside the file resolve relative to base_dir.
/// Returns a SimConfig ready for Simulation, with tables materialized.
inline SimConfig parse_scenario(std::istream& in, const std::string& filename,
                                const std::string& base_dir) {
    using detail::parse_number;
    using detail::parse_on_off;

    SimConfig cfg;
    detail::ScenarioStaging staging;
    std::string line;
    int lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string text = detail::trim(line);
        if (text.empty()) continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ScenarioError(filename, lineno, "expected 'key = value'");
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        const std::vector<std::string> toks = detail::value_tokens(value);
        if (toks.empty()) throw ScenarioError(filename, lineno, "missing value for " + key);

        auto want = [&](std::size_t n) {
            if (toks.size() != n)
                throw ScenarioError(filename, lineno,
                                    key + " expects " + std::to_string(n) + " value(s)");
        };

        if (key == "torus") {
            want(3);
            cfg.topo.torus = TorusDims{parse_number<uint16_t>(toks[0], filename, lineno, "torus"),
                                       parse_number<uint16_t>(toks[1], filename, lineno, "torus"),
                                       parse_number<uint16_t>(toks[2], filename, lineno, "torus")};
        } else if (key == "wafers") {
            want(1);
            cfg.topo.wafers = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "fpgas_per_wafer") {
            want(1);
            cfg.topo.fpgas_per_wafer = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "concentrators_per_wafer") {
            want(1);
            cfg.topo.concentrators_per_wafer =
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "fpgas_per_concentrator") {
            want(1);
            cfg.topo.fpgas_per_concentrator =
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "hicanns_per_fpga") {
            want(1);
            cfg.topo.hicanns_per_fpga = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "link_bandwidth") {
            want(1);
            cfg.topo.link_bandwidth_bps = parse_number<double>(toks[0], filename, lineno, key.c_str());
        } else if (key == "hicann_link_bandwidth") {
            want(1);
            cfg.topo.hicann_link_bandwidth_bps =
                parse_number<double>(toks[0], filename, lineno, key.c_str());
        } else if (key == "nic_links") {
            want(1);
            cfg.topo.nic_links = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "frequency") {
            want(1);
            cfg.topo.frequency_hz = parse_number<double>(toks[0], filename, lineno, key.c_str());
        } else if (key == "fpga_port_words_per_cycle") {
            want(1);
            cfg.topo.fpga_port_words_per_cycle =
                parse_number<double>(toks[0], filename, lineno, key.c_str());
        } else if (key == "hop_latency") {
            want(1);
            cfg.topo.hop_latency = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "concentrator_at") {
            want(4);
            const uint32_t idx = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
            TorusCoord c{parse_number<uint16_t>(toks[1], filename, lineno, key.c_str()),
                         parse_number<uint16_t>(toks[2], filename, lineno, key.c_str()),
                         parse_number<uint16_t>(toks[3], filename, lineno, key.c_str())};
            if (cfg.topo.concentrator_placement.size() <= idx)
                cfg.topo.concentrator_placement.resize(idx + 1);
            cfg.topo.concentrator_placement[idx] = c;
        } else if (key == "bucket_pool") {
            want(1);
            cfg.bucket.pool_size = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "bucket_capacity") {
            want(1);
            cfg.bucket.capacity = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "drain_rate") {
            want(1);
            cfg.bucket.drain_rate = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "traffic") {
            want(1);
            if (toks[0] == "poisson") cfg.traffic.kind = TrafficSpec::Kind::PoissonRate;
            else if (toks[0] == "trace") cfg.traffic.kind = TrafficSpec::Kind::Trace;
            else throw ScenarioError(filename, lineno, "traffic must be poisson or trace");
        } else if (key == "rate") {
            want(1);
            cfg.traffic.rate = parse_number<double>(toks[0], filename, lineno, key.c_str());
            if (cfg.traffic.rate < 0.0 || cfg.traffic.rate > 1.0)
                throw ScenarioError(filename, lineno, "rate must be within [0, 1]");
        } else if (key == "dest") {
            if (toks[0] == "uniform") {
                want(1);
                cfg.traffic.dest_dist = TrafficSpec::DestDist::Uniform;
            } else if (toks[0] == "fixed") {
                want(2);
                cfg.traffic.dest_dist = TrafficSpec::DestDist::Fixed;
                cfg.traffic.fixed_dest_fpga =
                    parse_number<uint32_t>(toks[1], filename, lineno, key.c_str());
            } else if (toks[0] == "weighted") {
                want(1);
                cfg.traffic.dest_dist = TrafficSpec::DestDist::Weighted;
            } else {
                throw ScenarioError(filename, lineno,
                                    "dest must be 'uniform', 'fixed <fpga>' or 'weighted'");
            }
        } else if (key == "dest_weight") {
            want(2);
            cfg.traffic.dest_weights.emplace_back(
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str()),
                parse_number<uint32_t>(toks[1], filename, lineno, key.c_str()));
        } else if (key == "deadline_slack") {
            want(1);
            cfg.traffic.deadline_slack = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
            if (cfg.traffic.deadline_slack >= kTimestampHalfWindow)
                throw ScenarioError(filename, lineno,
                                    "deadline_slack must stay below 16384 (half the timestamp "
                                    "period)");
        } else if (key == "trace_file") {
            want(1);
            staging.trace_path = detail::resolve_path(base_dir, toks[0]);
        } else if (key == "tables") {
            want(1);
            staging.tables_mode =
                toks[0] == "auto" ? "auto" : detail::resolve_path(base_dir, toks[0]);
        } else if (key == "table") {
            want(2);
            staging.table_overrides.emplace_back(
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str()),
                detail::resolve_path(base_dir, toks[1]));
        } else if (key == "pulses_per_link") {
            want(1);
            staging.auto_params.pulses_per_link =
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "multicast") {
            want(1);
            if (toks[0] == "single") staging.auto_params.multicast = AutoTableParams::Multicast::Single;
            else if (toks[0] == "all") staging.auto_params.multicast = AutoTableParams::Multicast::All;
            else if (toks[0] == "spread")
                staging.auto_params.multicast = AutoTableParams::Multicast::Spread;
            else throw ScenarioError(filename, lineno, "multicast must be single, all or spread");
        } else if (key == "monitor") {
            want(1);
            cfg.host.monitor = parse_on_off(toks[0], filename, lineno, key.c_str());
        } else if (key == "ring_size") {
            want(1);
            cfg.host.ring.size = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "notification_latency") {
            want(1);
            cfg.host.ring.notification_latency =
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "notification_batch") {
            want(1);
            cfg.host.ring.notification_batch =
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "host_poll_interval") {
            want(1);
            cfg.host.host_poll_interval =
                parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "seed") {
            want(1);
            cfg.seed = parse_number<uint64_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "until") {
            want(1);
            cfg.until = parse_number<uint64_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "time_unit_cycles") {
            want(1);
            cfg.time_unit_cycles = parse_number<uint32_t>(toks[0], filename, lineno, key.c_str());
        } else if (key == "audit") {
            want(1);
            cfg.audit = parse_on_off(toks[0], filename, lineno, key.c_str());
        } else if (key == "allow_inconsistent_tables") {
            want(1);
            cfg.allow_inconsistent_tables = parse_on_off(toks[0], filename, lineno, key.c_str());
        } else {
            throw ScenarioError(filename, lineno, "unknown key '" + key + "'");
        }
    }

    // Materialize tables.
    try {
        cfg.topo.validate();
    } catch (const TopologyError& e) {
        throw ScenarioError(filename, 0, e.what());
    }
    const uint32_t nf = cfg.topo.fpga_count();
    cfg.tables.assign(nf, nullptr);
    if (staging.tables_mode == "auto") {
        cfg.tables = build_auto_tables(cfg.topo, staging.auto_params);
    } else if (!staging.tables_mode.empty()) {
        auto shared = std::make_shared<const RoutingTables>(load_tables_file(staging.tables_mode));
        for (auto& t : cfg.tables) t = shared;
    }
    for (const auto& [idx, path] : staging.table_overrides) {
        if (idx >= nf)
            throw ScenarioError(filename, 0,
                                "table override for fpga " + std::to_string(idx) + " but only " +
                                    std::to_string(nf) + " fpgas exist");
        cfg.tables[idx] = std::make_shared<const RoutingTables>(load_tables_file(path));
    }
    for (uint32_t f = 0; f < nf; ++f) {
        if (!cfg.tables[f])
            throw ScenarioError(filename, 0,
                                "no routing table for fpga " + std::to_string(f) +
                                    "; set 'tables = auto', 'tables = <file>' or per-fpga "
                                    "'table <idx> <file>' lines");
    }

    if (cfg.traffic.kind == TrafficSpec::Kind::Trace) {
        if (staging.trace_path.empty())
            throw ScenarioError(filename, 0, "traffic = trace requires trace_file");
        cfg.trace = load_trace_file(staging.trace_path);
    }
    cfg.traffic.trace_path = staging.trace_path;

    return cfg;
}

inline SimConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path, 0, "cannot open file");
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return parse_scenario(in, path, dir);
}

}  // namespace spikenet
