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

#include <sstream>
#include <string>

#include <json.hpp>

#include "spikenet/sim.hpp"

namespace spikenet {

/// Stable-schema JSON view of a run's statistics. Field names and order are
/// a contract; bump schema_version on breaking changes.
inline nlohmann::ordered_json stats_to_json(const SimStats& s) {
    nlohmann::ordered_json j;
    j["schema_version"] = s.schema_version;
    j["cycles"] = s.cycles;
    j["topology"] = {{"torus_nodes", s.torus_nodes}, {"fpgas", s.fpgas}};
    j["events"] = {{"injected", s.events_injected},
                   {"routed", s.events_routed},
                   {"egressed", s.events_egressed},
                   {"delivered", s.events_delivered},
                   {"sink_deliveries", s.sink_deliveries},
                   {"dropped_source_miss", s.dropped_source_miss},
                   {"dropped_dest_miss", s.dropped_dest_miss},
                   {"dropped_unreachable", s.dropped_unreachable},
                   {"in_flight", s.events_in_flight},
                   {"deadline_misses", s.deadline_misses}};
    j["packets"] = {{"sent", s.packets_sent},
                    {"delivered", s.packets_delivered},
                    {"mean_occupancy", s.mean_packet_occupancy}};
    nlohmann::ordered_json occ = nlohmann::ordered_json::object();
    for (const auto& [size, count] : s.packet_occupancy) occ[std::to_string(size)] = count;
    j["packets"]["occupancy"] = std::move(occ);
    j["flushes"] = {{"deadline", s.flushes_deadline},
                    {"full", s.flushes_full},
                    {"evicted", s.flushes_evicted},
                    {"external", s.flushes_external},
                    {"stalled_submits", s.bucket_stalls}};
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& [le, count] : s.latency_hist)
        hist.push_back({{"le", le}, {"count", count}});
    j["latency"] = {{"min", s.latency_min},
                    {"max", s.latency_max},
                    {"mean", s.latency_mean},
                    {"histogram", std::move(hist)}};
    nlohmann::ordered_json links = nlohmann::ordered_json::array();
    for (const LinkStat& l : s.links) {
        links.push_back({{"name", l.name},
                         {"busy_cycles", l.busy_cycles},
                         {"packets", l.packets},
                         {"words", l.words},
                         {"events", l.events},
                         {"utilization", l.utilization}});
    }
    j["links"] = std::move(links);
    j["ring"] = {{"stall_cycles", s.ring_stall_cycles},
                 {"bytes_to_host", s.ring_bytes_to_host},
                 {"occupancy_high_water", s.ring_occupancy_high_water}};
    j["audit"] = {{"enabled", s.audit_enabled}, {"conservation_ok", s.conservation_ok}};
    return j;
}

inline std::string stats_to_json_string(const SimStats& s) {
    return stats_to_json(s).dump(2) + "\n";
}

/// Flat `field,value` CSV with the same names as the JSON, dot separated.
inline std::string stats_to_csv(const SimStats& s) {
    std::ostringstream out;
    out << "field,value\n";
    auto row = [&out](const std::string& k, const auto& v) { out << k << ',' << v << '\n'; };
    row("schema_version", s.schema_version);
    row("cycles", s.cycles);
    row("topology.torus_nodes", s.torus_nodes);
    row("topology.fpgas", s.fpgas);
    row("events.injected", s.events_injected);
    row("events.routed", s.events_routed);
    row("events.egressed", s.events_egressed);
    row("events.delivered", s.events_delivered);
    row("events.sink_deliveries", s.sink_deliveries);
    row("events.dropped_source_miss", s.dropped_source_miss);
    row("events.dropped_dest_miss", s.dropped_dest_miss);
    row("events.dropped_unreachable", s.dropped_unreachable);
    row("events.in_flight", s.events_in_flight);
    row("events.deadline_misses", s.deadline_misses);
    row("packets.sent", s.packets_sent);
    row("packets.delivered", s.packets_delivered);
    row("packets.mean_occupancy", s.mean_packet_occupancy);
    for (const auto& [size, count] : s.packet_occupancy)
        row("packets.occupancy." + std::to_string(size), count);
    row("flushes.deadline", s.flushes_deadline);
    row("flushes.full", s.flushes_full);
    row("flushes.evicted", s.flushes_evicted);
    row("flushes.external", s.flushes_external);
    row("flushes.stalled_submits", s.bucket_stalls);
    row("latency.min", s.latency_min);
    row("latency.max", s.latency_max);
    row("latency.mean", s.latency_mean);
    for (const auto& [le, count] : s.latency_hist)
        row("latency.le_" + std::to_string(le), count);
    for (const LinkStat& l : s.links) {
        row("links." + l.name + ".busy_cycles", l.busy_cycles);
        row("links." + l.name + ".packets", l.packets);
        row("links." + l.name + ".utilization", l.utilization);
    }
    row("ring.stall_cycles", s.ring_stall_cycles);
    row("ring.bytes_to_host", s.ring_bytes_to_host);
    row("ring.occupancy_high_water", s.ring_occupancy_high_water);
    row("audit.enabled", s.audit_enabled ? 1 : 0);
    row("audit.conservation_ok", s.conservation_ok ? 1 : 0);
    return out.str();
}

}  // namespace spikenet
