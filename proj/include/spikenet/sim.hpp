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

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "spikenet/bucket.hpp"
#include "spikenet/event.hpp"
#include "spikenet/packet.hpp"
#include "spikenet/ring_channel.hpp"
#include "spikenet/routing.hpp"
#include "spikenet/topology.hpp"
#include "spikenet/torus.hpp"
#include "spikenet/traffic.hpp"
#include "spikenet/util.hpp"

namespace spikenet {

class SimConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Host-side ring channel behaviour.
struct HostChannelConfig {
    bool monitor = false;  // tap delivered packets into the host ring
    RingChannel::Config ring{65536, 10, 1};
    uint32_t host_poll_interval = 1;  // cycles between host polls
};

/// Everything a run needs. Tables are per FPGA and immutable once the
/// simulation is built.
struct SimConfig {
    TopologySpec topo;
    BucketConfig bucket;
    TrafficSpec traffic;
    HostChannelConfig host;

    /// One entry per FPGA. Entries may share ownership.
    std::vector<std::shared_ptr<const RoutingTables>> tables;

    uint64_t seed = 1;
    uint64_t until = 10000;
    uint32_t time_unit_cycles = 1;  // FPGA clock cycles per system-time unit
    bool audit = true;
    bool allow_inconsistent_tables = false;

    std::vector<TraceEvent> trace;  // used when traffic.kind == Trace

    std::ostream* inject_log = nullptr;
    std::ostream* deliver_log = nullptr;
};

struct LinkStat {
    std::string name;
    uint64_t busy_cycles = 0;
    uint64_t packets = 0;
    uint64_t words = 0;
    uint64_t events = 0;
    double utilization = 0.0;
};

struct SimStats {
    uint32_t schema_version = 1;
    uint64_t cycles = 0;
    uint32_t torus_nodes = 0;
    uint32_t fpgas = 0;

    uint64_t events_injected = 0;
    uint64_t events_routed = 0;
    uint64_t dropped_source_miss = 0;
    uint64_t dropped_dest_miss = 0;
    uint64_t dropped_unreachable = 0;
    uint64_t events_egressed = 0;
    uint64_t events_delivered = 0;
    uint64_t sink_deliveries = 0;
    uint64_t events_in_flight = 0;
    uint64_t deadline_misses = 0;

    uint64_t packets_sent = 0;
    uint64_t packets_delivered = 0;

    uint64_t flushes_deadline = 0;
    uint64_t flushes_full = 0;
    uint64_t flushes_evicted = 0;
    uint64_t flushes_external = 0;
    uint64_t bucket_stalls = 0;

    std::vector<std::pair<uint32_t, uint64_t>> packet_occupancy;  // (events, packets)
    double mean_packet_occupancy = 0.0;

    // Power-of-two latency bins: entry i counts deliveries with
    // latency <= 2^i - 1 (and above the previous bound).
    std::vector<std::pair<uint64_t, uint64_t>> latency_hist;
    uint64_t latency_min = 0;
    uint64_t latency_max = 0;
    double latency_mean = 0.0;

    std::vector<LinkStat> links;

    uint64_t ring_stall_cycles = 0;
    uint64_t ring_bytes_to_host = 0;
    uint32_t ring_occupancy_high_water = 0;

    bool audit_enabled = false;
    bool conservation_ok = false;
};

/// Deterministic cycle-based simulation of the whole event path:
/// injection -> source lookup -> bucket aggregation -> packetization ->
/// FPGA egress -> torus (dimension-order) -> destination lookup ->
/// multicast delivery, with the host ring channel tapped for monitoring.
///
/// Identical (config, seed, until) produce identical SimStats. The kernel is
/// single threaded; parallelism is left to running independent scenarios.
class Simulation {
public:
    explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.topo.validate();
        cfg_.bucket.validate();
        cfg_.traffic.validate();
        if (cfg_.time_unit_cycles == 0)
            throw SimConfigError("time_unit_cycles must be at least 1");
        if (cfg_.host.host_poll_interval == 0)
            throw SimConfigError("host_poll_interval must be at least 1");
        build_network();
        bind_tables();
        prepare_traffic();
    }

    uint64_t now() const { return now_; }
    uint32_t fpga_count() const { return static_cast<uint32_t>(fpgas_.size()); }
    uint32_t node_count() const { return static_cast<uint32_t>(nodes_.size()); }

    /// Advances one cycle. Phase order is fixed; see run().
    void step() {
        service_hosts();
        deliver_link_arrivals();
        route_node_inboxes();
        process_fpga_ingress();
        drive_fpgas();
        start_link_transfers();
        ++now_;
    }

    SimStats run() {
        while (now_ < cfg_.until) step();
        return finalize();
    }

    /// Snapshot of counters plus the conservation audit over live state.
    SimStats finalize() {
        SimStats s = counters_;
        s.schema_version = 1;
        s.cycles = now_;
        s.torus_nodes = static_cast<uint32_t>(nodes_.size());
        s.fpgas = static_cast<uint32_t>(fpgas_.size());

        s.events_in_flight = count_in_flight();

        for (const auto& [size, count] : occupancy_)
            s.packet_occupancy.emplace_back(size, count);
        std::sort(s.packet_occupancy.begin(), s.packet_occupancy.end());
        if (s.packets_sent > 0)
            s.mean_packet_occupancy =
                static_cast<double>(events_packetized_) / static_cast<double>(s.packets_sent);

        s.latency_hist.reserve(latency_bins_.size());
        for (std::size_t i = 0; i < latency_bins_.size(); ++i)
            s.latency_hist.emplace_back((1ull << i) - 1, latency_bins_[i]);
        s.latency_min = latency_min_;
        s.latency_max = latency_max_;
        if (s.events_delivered > 0)
            s.latency_mean =
                static_cast<double>(latency_sum_) / static_cast<double>(s.events_delivered);

        s.links.reserve(links_.size());
        for (const LinkRec& l : links_) {
            LinkStat ls{l.name, l.busy_cycles, l.packets, l.words, l.events, 0.0};
            if (now_ > 0) ls.utilization = static_cast<double>(l.busy_cycles) / static_cast<double>(now_);
            s.links.push_back(std::move(ls));
        }

        for (const FpgaState& f : fpgas_) {
            const BucketManager::Stats& bs = f.mgr.stats();
            s.flushes_deadline +=
                bs.flushes_by_trigger[static_cast<std::size_t>(FlushTrigger::DeadlineExceeded)];
            s.flushes_full +=
                bs.flushes_by_trigger[static_cast<std::size_t>(FlushTrigger::BucketFull)];
            s.flushes_evicted +=
                bs.flushes_by_trigger[static_cast<std::size_t>(FlushTrigger::Evicted)];
            s.flushes_external +=
                bs.flushes_by_trigger[static_cast<std::size_t>(FlushTrigger::External)];
            s.bucket_stalls += bs.stalled_submits;
            s.ring_stall_cycles += f.ring_stall_cycles;
            if (f.ring) {
                s.ring_occupancy_high_water =
                    std::max(s.ring_occupancy_high_water, f.ring->stats().occupancy_high_water);
            }
        }

        s.audit_enabled = cfg_.audit;
        s.conservation_ok = cfg_.audit ? run_audit(s) : false;
        return s;
    }

    // --- test hooks ---------------------------------------------------------

    const LookupMissLog& misses(uint32_t fpga) const { return fpgas_.at(fpga).misses; }
    const BucketManager& bucket_manager(uint32_t fpga) const { return fpgas_.at(fpga).mgr; }
    NetworkAddress fpga_address(uint32_t fpga) const { return fpgas_.at(fpga).addr; }
    const std::vector<ConsistencyViolation>& table_violations() const { return table_violations_; }

private:
    // Simulation-side metadata riding along with each event; never on the
    // wire.
    struct EventTag {
        uint64_t id = 0;
        uint64_t inject_cycle = 0;
        uint64_t deadline_cycle = 0;
        uint32_t guid = 0;
        uint16_t timestamp = 0;
        uint16_t pulse_address = 0;
        uint16_t src_fpga = 0;
        uint8_t src_link = 0;
    };

    struct SimPacket {
        PacketHeader header;
        std::vector<uint8_t> bytes;
        std::vector<EventTag> tags;

        std::size_t words() const { return bytes.size() / kWordBytes; }
    };

    struct LinkRec {
        std::string name;
        double wpc = 1.0;
        uint32_t latency = 0;
        bool to_fpga = false;   // down link: resolve target FPGA from the header
        uint32_t dst_node = 0;  // valid when !to_fpga
        bool is_fpga_uplink = false;

        std::deque<SimPacket> queue;      // torus and down links
        std::vector<uint32_t> src_fpgas;  // up links: competing FPGA egress queues
        std::size_t rr = 0;

        uint64_t busy_until = 0;
        std::deque<std::pair<uint64_t, SimPacket>> in_flight;  // (arrival, packet)

        uint64_t busy_cycles = 0;
        uint64_t packets = 0;
        uint64_t words = 0;
        uint64_t events = 0;
    };

    struct NodeRec {
        TorusCoord coord;
        NetworkAddress addr;
        int32_t concentrator = -1;
        std::array<uint32_t, 6> out_link{};  // port = dim * 2 + (dir < 0)
        uint32_t down_link = UINT32_MAX;
        std::deque<SimPacket> inbox;
    };

    struct FpgaState {
        explicit FpgaState(const BucketConfig& bc) : mgr(bc) {}

        NetworkAddress addr;
        uint32_t conc_node = 0;
        uint32_t wafer = 0;
        uint32_t uplink = 0;
        std::shared_ptr<const RoutingTables> tables;
        BucketManager mgr;
        Rng rng{0};

        std::deque<SimPacket> egress;
        std::deque<SimPacket> inbox;
        std::unordered_map<uint16_t, std::deque<EventTag>> tag_fifo;  // per destination
        LookupMissLog misses;

        std::deque<std::vector<uint8_t>> host_egress;
        std::optional<RingChannel> ring;
        uint64_t ring_stall_cycles = 0;

        // Traffic reverse index: destinations this FPGA can reach and the
        // source keys mapping to each (both in canonical order).
        std::vector<uint16_t> traffic_dests;
        std::vector<std::vector<uint16_t>> traffic_keys;
        std::size_t fixed_pick = SIZE_MAX;
        // Weighted mode: cumulative weights over pick indices.
        std::vector<std::pair<uint64_t, std::size_t>> weighted_cum;
        uint64_t weighted_total = 0;
    };

    enum class EventFate : uint8_t { InBucket, InFlight, Delivered, DroppedSource, DroppedDest };

    struct AuditEntry {
        EventFate fate;
        uint8_t seen = 0;  // structural scan marker
    };

    // --- construction -------------------------------------------------------

    void build_network() {
        const TorusDims dims = cfg_.topo.torus;
        const uint32_t n_nodes = dims.node_count();
        nodes_.resize(n_nodes);
        for (uint32_t i = 0; i < n_nodes; ++i) {
            nodes_[i].coord = coord_of_index(i, dims);
            nodes_[i].addr = NetworkAddress{static_cast<uint16_t>(i)};
        }

        const double torus_wpc = cfg_.topo.torus_words_per_cycle();
        static constexpr const char* kDirName[6] = {"+x", "-x", "+y", "-y", "+z", "-z"};
        for (uint32_t n = 0; n < n_nodes; ++n) {
            for (unsigned dim = 0; dim < 3; ++dim) {
                for (int sign = 0; sign < 2; ++sign) {  // 0 -> +1, 1 -> -1
                    const uint16_t size = dims[dim];
                    TorusCoord nb = nodes_[n].coord;
                    const int step = sign == 0 ? 1 : -1;
                    nb.set(dim, static_cast<uint16_t>((nb[dim] + size + step) % size));
                    LinkRec link;
                    link.name = "n" + std::to_string(n) + ":" + kDirName[dim * 2 + sign];
                    link.wpc = torus_wpc;
                    link.latency = cfg_.topo.hop_latency;
                    link.dst_node = node_index(nb, dims);
                    nodes_[n].out_link[dim * 2 + sign] = static_cast<uint32_t>(links_.size());
                    links_.push_back(std::move(link));
                }
            }
        }

        const uint32_t n_conc = cfg_.topo.concentrator_count();
        const uint32_t per_conc = cfg_.topo.fpgas_per_concentrator;
        fpgas_.reserve(static_cast<std::size_t>(n_conc) * per_conc);
        for (uint32_t c = 0; c < n_conc; ++c) {
            const uint32_t cnode = cfg_.topo.concentrator_node(c);
            SPIKENET_CHECK(nodes_[cnode].concentrator < 0, "two concentrators on one node");
            nodes_[cnode].concentrator = static_cast<int32_t>(c);

            LinkRec up;
            up.name = "up:n" + std::to_string(cnode);
            up.wpc = cfg_.topo.fpga_port_words_per_cycle;
            up.latency = cfg_.topo.hop_latency;
            up.dst_node = cnode;
            up.is_fpga_uplink = true;
            const uint32_t up_id = static_cast<uint32_t>(links_.size());

            LinkRec down;
            down.name = "down:n" + std::to_string(cnode);
            down.wpc = cfg_.topo.fpga_port_words_per_cycle;
            down.latency = cfg_.topo.hop_latency;
            down.to_fpga = true;
            const uint32_t down_id = up_id + 1;
            nodes_[cnode].down_link = down_id;

            for (uint32_t k = 0; k < per_conc; ++k) {
                const uint32_t f = static_cast<uint32_t>(fpgas_.size());
                FpgaState& fs = fpgas_.emplace_back(cfg_.bucket);
                fs.addr = cfg_.topo.fpga_address(f);
                fs.conc_node = cnode;
                fs.wafer = c / cfg_.topo.concentrators_per_wafer;
                fs.uplink = up_id;
                fs.rng = Rng(seed_stream(cfg_.seed, f));
                if (cfg_.host.monitor) {
                    if (cfg_.host.ring.size < 2 * kWordBytes * (1 + kMaxEventsPerPacket / 4))
                        throw SimConfigError("monitor ring size must hold at least one packet");
                    fs.ring.emplace(cfg_.host.ring);
                }
                up.src_fpgas.push_back(f);
            }

            links_.push_back(std::move(up));
            links_.push_back(std::move(down));
        }
    }

    void bind_tables() {
        if (cfg_.tables.size() != fpgas_.size())
            throw SimConfigError("expected " + std::to_string(fpgas_.size()) +
                                 " routing tables, got " + std::to_string(cfg_.tables.size()));
        std::vector<std::pair<NetworkAddress, const RoutingTables*>> deployment;
        deployment.reserve(fpgas_.size());
        for (std::size_t f = 0; f < fpgas_.size(); ++f) {
            if (!cfg_.tables[f]) throw SimConfigError("missing routing table for fpga " +
                                                      std::to_string(f));
            fpgas_[f].tables = cfg_.tables[f];
            deployment.emplace_back(fpgas_[f].addr, cfg_.tables[f].get());
        }
        table_violations_ = check_table_consistency(deployment);
        if (!table_violations_.empty() && !cfg_.allow_inconsistent_tables) {
            std::string msg = "routing tables are inconsistent (" +
                              std::to_string(table_violations_.size()) + " violations); first: " +
                              table_violations_.front().describe();
            throw SimConfigError(msg);
        }
    }

    void prepare_traffic() {
        for (FpgaState& f : fpgas_) {
            std::unordered_map<uint16_t, std::vector<uint16_t>> by_dest;
            for (const auto& [key, entry] : f.tables->source.sorted_entries())
                by_dest[entry.dest.value].push_back(key.packed());
            f.traffic_dests.reserve(by_dest.size());
            for (const auto& [d, keys] : by_dest) f.traffic_dests.push_back(d);
            std::sort(f.traffic_dests.begin(), f.traffic_dests.end());
            f.traffic_keys.reserve(f.traffic_dests.size());
            for (uint16_t d : f.traffic_dests) f.traffic_keys.push_back(std::move(by_dest[d]));
        }

        if (cfg_.traffic.kind == TrafficSpec::Kind::PoissonRate &&
            cfg_.traffic.dest_dist == TrafficSpec::DestDist::Fixed && cfg_.traffic.rate > 0) {
            if (cfg_.traffic.fixed_dest_fpga >= fpgas_.size())
                throw SimConfigError("fixed traffic destination fpga " +
                                     std::to_string(cfg_.traffic.fixed_dest_fpga) +
                                     " does not exist");
            const uint16_t addr = fpgas_[cfg_.traffic.fixed_dest_fpga].addr.value;
            for (std::size_t i = 0; i < fpgas_.size(); ++i) {
                FpgaState& f = fpgas_[i];
                if (i == cfg_.traffic.fixed_dest_fpga && fpgas_.size() > 1) continue;
                auto it = std::lower_bound(f.traffic_dests.begin(), f.traffic_dests.end(), addr);
                if (it == f.traffic_dests.end() || *it != addr)
                    throw SimConfigError("fpga " + std::to_string(i) +
                                         " has no source-table keys for the fixed destination");
                f.fixed_pick = static_cast<std::size_t>(it - f.traffic_dests.begin());
            }
        }

        if (cfg_.traffic.kind == TrafficSpec::Kind::PoissonRate &&
            cfg_.traffic.dest_dist == TrafficSpec::DestDist::Weighted && cfg_.traffic.rate > 0) {
            for (const auto& [dest_fpga, weight] : cfg_.traffic.dest_weights)
                if (dest_fpga >= fpgas_.size())
                    throw SimConfigError("dest_weight names fpga " + std::to_string(dest_fpga) +
                                         " but only " + std::to_string(fpgas_.size()) + " exist");
            for (std::size_t i = 0; i < fpgas_.size(); ++i) {
                FpgaState& f = fpgas_[i];
                uint64_t cum = 0;
                for (const auto& [dest_fpga, weight] : cfg_.traffic.dest_weights) {
                    if (dest_fpga == i && fpgas_.size() > 1) continue;
                    const uint16_t addr = fpgas_[dest_fpga].addr.value;
                    auto it = std::lower_bound(f.traffic_dests.begin(), f.traffic_dests.end(), addr);
                    if (it == f.traffic_dests.end() || *it != addr)
                        throw SimConfigError("fpga " + std::to_string(i) +
                                             " has no source-table keys for weighted destination " +
                                             std::to_string(dest_fpga));
                    cum += weight;
                    f.weighted_cum.emplace_back(cum, static_cast<std::size_t>(
                                                         it - f.traffic_dests.begin()));
                }
                f.weighted_total = cum;
            }
        }

        if (cfg_.traffic.kind == TrafficSpec::Kind::Trace) {
            for (const TraceEvent& te : cfg_.trace)
                if (te.fpga >= fpgas_.size())
                    throw SimConfigError("trace references fpga " + std::to_string(te.fpga) +
                                         " beyond the " + std::to_string(fpgas_.size()) +
                                         " built");
        }

        if (cfg_.audit) audit_.reserve(1 << 16);
    }

    // --- per-cycle phases ---------------------------------------------------

    void service_hosts() {
        if (!cfg_.host.monitor) return;
        if (now_ % cfg_.host.host_poll_interval != 0) return;
        for (FpgaState& f : fpgas_) {
            if (!f.ring) continue;
            std::vector<uint8_t> data = f.ring->consumer_poll(now_);
            if (!data.empty()) {
                counters_.ring_bytes_to_host += data.size();
                f.ring->consumer_credit(static_cast<uint32_t>(data.size()), now_);
            }
        }
    }

    void deliver_link_arrivals() {
        for (LinkRec& link : links_) {
            while (!link.in_flight.empty() && link.in_flight.front().first <= now_) {
                SimPacket pkt = std::move(link.in_flight.front().second);
                link.in_flight.pop_front();
                if (link.to_fpga) {
                    const uint32_t f = fpga_of_address(pkt.header.dest);
                    fpgas_[f].inbox.push_back(std::move(pkt));
                } else {
                    nodes_[link.dst_node].inbox.push_back(std::move(pkt));
                }
            }
        }
    }

    void route_node_inboxes() {
        for (NodeRec& node : nodes_) {
            while (!node.inbox.empty()) {
                SimPacket pkt = std::move(node.inbox.front());
                node.inbox.pop_front();
                const uint32_t f = fpga_of_address(pkt.header.dest);
                const uint32_t target_node = fpgas_[f].conc_node;
                if (target_node == node_id(node)) {
                    links_[node.down_link].queue.push_back(std::move(pkt));
                } else {
                    auto hop = torus_next_hop(node.coord, nodes_[target_node].coord,
                                              cfg_.topo.torus);
                    SPIKENET_CHECK(hop.has_value(), "no hop toward a distinct node");
                    const unsigned port = hop->dim * 2u + (hop->dir < 0 ? 1u : 0u);
                    links_[node.out_link[port]].queue.push_back(std::move(pkt));
                }
            }
        }
    }

    void process_fpga_ingress() {
        for (uint32_t fi = 0; fi < fpgas_.size(); ++fi) {
            FpgaState& f = fpgas_[fi];
            while (!f.inbox.empty()) {
                SimPacket pkt = std::move(f.inbox.front());
                f.inbox.pop_front();
                ++counters_.packets_delivered;
                if (f.ring) {
                    f.host_egress.push_back(pkt.bytes);  // monitor tap
                }
                const DecodedPacket decoded = decode_packet(pkt.bytes);
                SPIKENET_CHECK(decoded.events.size() == pkt.tags.size(),
                               "packet tags out of step with payload");
                for (std::size_t i = 0; i < decoded.events.size(); ++i) {
                    const WireEvent& we = decoded.events[i];
                    const EventTag& tag = pkt.tags[i];
                    SPIKENET_CHECK(we.guid.value == tag.guid && we.timestamp == tag.timestamp,
                                   "wire event does not match its tag");
                    std::optional<uint8_t> mask = route_dest(f.tables->dest, we.guid, f.misses);
                    if (!mask) {
                        ++counters_.dropped_dest_miss;
                        set_fate(tag.id, EventFate::DroppedDest);
                        continue;
                    }
                    deliver_event(fi, tag, *mask);
                }
            }
        }
    }

    void deliver_event(uint32_t fpga, const EventTag& tag, uint8_t mask) {
        const int sinks = std::popcount(mask);
        ++counters_.events_delivered;
        counters_.sink_deliveries += static_cast<uint64_t>(sinks);
        const uint64_t latency = now_ - tag.inject_cycle;
        note_latency(latency);
        if (now_ > tag.deadline_cycle) ++counters_.deadline_misses;
        set_fate(tag.id, EventFate::Delivered);
        if (cfg_.deliver_log != nullptr) {
            for (unsigned link = 0; link < 8; ++link) {
                if (mask & (1u << link)) {
                    write_trace_line(*cfg_.deliver_log,
                                     TraceEvent{now_, fpga, static_cast<uint8_t>(link),
                                                tag.pulse_address, tag.timestamp});
                }
            }
        }
    }

    void drive_fpgas() {
        inject_trace_events();
        for (uint32_t fi = 0; fi < fpgas_.size(); ++fi) {
            FpgaState& f = fpgas_[fi];
            if (cfg_.traffic.kind == TrafficSpec::Kind::PoissonRate &&
                !f.traffic_dests.empty() && f.rng.chance(cfg_.traffic.rate)) {
                inject_poisson_event(fi);
            }
            std::vector<FlushRecord> records = f.mgr.tick(units_of(now_));
            for (FlushRecord& rec : records) packetize(fi, rec);
            pump_host_egress(f);
        }
    }

    void inject_trace_events() {
        if (cfg_.traffic.kind != TrafficSpec::Kind::Trace) return;
        while (trace_cursor_ < cfg_.trace.size() && cfg_.trace[trace_cursor_].cycle == now_) {
            const TraceEvent& te = cfg_.trace[trace_cursor_++];
            inject_spike(te.fpga, te.hicann_link, te.pulse_address, te.timestamp);
        }
    }

    void inject_poisson_event(uint32_t fi) {
        FpgaState& f = fpgas_[fi];
        std::size_t dest_pick;
        if (cfg_.traffic.dest_dist == TrafficSpec::DestDist::Fixed) {
            dest_pick = f.fixed_pick;
            if (dest_pick == SIZE_MAX) return;  // fixed dest is this fpga itself
        } else if (cfg_.traffic.dest_dist == TrafficSpec::DestDist::Weighted) {
            if (f.weighted_total == 0) return;  // all weight on this fpga itself
            const uint64_t r = f.rng.below(f.weighted_total);
            auto it = std::upper_bound(f.weighted_cum.begin(), f.weighted_cum.end(),
                                       std::make_pair(r, SIZE_MAX));
            dest_pick = it->second;
        } else {
            dest_pick = static_cast<std::size_t>(f.rng.below(f.traffic_dests.size()));
        }
        const std::vector<uint16_t>& keys = f.traffic_keys[dest_pick];
        const uint16_t packed = keys[static_cast<std::size_t>(f.rng.below(keys.size()))];
        const SourceKey key = SourceKey::unpack(packed);
        const uint16_t ts =
            timestamp_of_clock(units_of(now_) + cfg_.traffic.deadline_slack);
        inject_spike(fi, key.hicann_link, key.pulse_address, ts);
    }

    void inject_spike(uint32_t fi, uint8_t link, uint16_t pulse, uint16_t ts) {
        FpgaState& f = fpgas_[fi];
        ++counters_.events_injected;
        if (cfg_.inject_log != nullptr)
            write_trace_line(*cfg_.inject_log, TraceEvent{now_, fi, link, pulse, ts});

        const uint64_t id = next_event_id_++;
        const SpikeEvent spike{pulse, ts};
        std::optional<RoutedEvent> routed =
            route_source(f.tables->source, SourceKey{link, pulse}, spike, f.misses);
        if (!routed) {
            ++counters_.dropped_source_miss;
            if (cfg_.audit) audit_.push_back({EventFate::DroppedSource, 0});
            return;
        }
        ++counters_.events_routed;
        if (cfg_.audit) audit_.push_back({EventFate::InBucket, 0});

        EventTag tag;
        tag.id = id;
        tag.inject_cycle = now_;
        tag.deadline_cycle = deadline_cycle_of(ts);
        tag.guid = routed->guid.value;
        tag.timestamp = ts;
        tag.pulse_address = pulse;
        tag.src_fpga = static_cast<uint16_t>(fi);
        tag.src_link = link;
        f.tag_fifo[routed->dest.value].push_back(tag);

        std::vector<FlushRecord> records = f.mgr.submit(*routed, units_of(now_));
        for (FlushRecord& rec : records) packetize(fi, rec);
    }

    void packetize(uint32_t fi, const FlushRecord& rec) {
        FpgaState& f = fpgas_[fi];
        auto fifo_it = f.tag_fifo.find(rec.dest.value);
        SPIKENET_CHECK(fifo_it != f.tag_fifo.end() && fifo_it->second.size() >= rec.events.size(),
                       "flush record without matching tags");
        std::vector<EventTag> tags;
        tags.reserve(rec.events.size());
        for (const WireEvent& ev : rec.events) {
            EventTag tag = fifo_it->second.front();
            fifo_it->second.pop_front();
            SPIKENET_CHECK(tag.guid == ev.guid.value && tag.timestamp == ev.timestamp,
                           "tag order diverged from flush order");
            tags.push_back(tag);
        }
        if (fifo_it->second.empty()) f.tag_fifo.erase(fifo_it);

        if (!is_fpga_address(rec.dest)) {
            // Destination is no reachable endpoint; drop and count.
            counters_.dropped_unreachable += rec.events.size();
            for (const EventTag& tag : tags) set_fate(tag.id, EventFate::DroppedDest);
            return;
        }

        SimPacket pkt;
        pkt.bytes = encode_packet(rec.dest, f.addr, rec.events);
        pkt.header = PacketHeader{rec.dest, f.addr, static_cast<uint8_t>(rec.events.size()), 0};
        pkt.tags = std::move(tags);
        for (const EventTag& tag : pkt.tags) set_fate(tag.id, EventFate::InFlight);
        ++counters_.packets_sent;
        events_packetized_ += rec.events.size();
        ++occupancy_[static_cast<uint32_t>(rec.events.size())];
        f.egress.push_back(std::move(pkt));
    }

    void pump_host_egress(FpgaState& f) {
        if (!f.ring) {
            f.host_egress.clear();
            return;
        }
        if (f.host_egress.empty()) {
            f.ring->producer_sync(now_);
            return;
        }
        const std::vector<uint8_t>& head = f.host_egress.front();
        if (f.ring->producer_put(head, now_) == PutStatus::Accepted) {
            f.host_egress.pop_front();
        } else {
            ++f.ring_stall_cycles;
        }
    }

    void start_link_transfers() {
        for (LinkRec& link : links_) {
            if (link.busy_until > now_) continue;
            SimPacket pkt;
            bool have = false;
            if (!link.src_fpgas.empty()) {
                // Fair round robin over the competing FPGA egress queues.
                for (std::size_t k = 0; k < link.src_fpgas.size() && !have; ++k) {
                    const std::size_t pick = (link.rr + k) % link.src_fpgas.size();
                    std::deque<SimPacket>& q = fpgas_[link.src_fpgas[pick]].egress;
                    if (!q.empty()) {
                        pkt = std::move(q.front());
                        q.pop_front();
                        link.rr = pick + 1;
                        have = true;
                    }
                }
            } else if (!link.queue.empty()) {
                pkt = std::move(link.queue.front());
                link.queue.pop_front();
                have = true;
            }
            if (!have) continue;

            const uint64_t ser = serialization_cycles(pkt.words(), link.wpc);
            link.busy_until = now_ + ser;
            link.busy_cycles += ser;
            ++link.packets;
            link.words += pkt.words();
            link.events += pkt.tags.size();
            if (link.is_fpga_uplink) counters_.events_egressed += pkt.tags.size();
            link.in_flight.emplace_back(now_ + ser + link.latency, std::move(pkt));
        }
    }

    // --- helpers ------------------------------------------------------------

    static uint64_t serialization_cycles(std::size_t words, double wpc) {
        const double cycles = static_cast<double>(words) / wpc;
        uint64_t c = static_cast<uint64_t>(cycles);
        if (static_cast<double>(c) < cycles) ++c;
        return std::max<uint64_t>(c, 1);
    }

    uint64_t units_of(uint64_t cycle) const { return cycle / cfg_.time_unit_cycles; }

    uint64_t deadline_cycle_of(uint16_t ts) const {
        const uint64_t now_units = units_of(now_);
        const uint64_t fwd =
            (static_cast<uint64_t>(ts) + kTimestampPeriod - timestamp_of_clock(now_units)) &
            kTimestampMask;
        return (now_units + fwd) * cfg_.time_unit_cycles;
    }

    uint32_t node_id(const NodeRec& node) const {
        return static_cast<uint32_t>(&node - nodes_.data());
    }

    bool is_fpga_address(NetworkAddress a) const {
        return a.value >= nodes_.size() && a.value < nodes_.size() + fpgas_.size();
    }

    uint32_t fpga_of_address(NetworkAddress a) const {
        SPIKENET_CHECK(is_fpga_address(a), "address is not an FPGA endpoint");
        return static_cast<uint32_t>(a.value - nodes_.size());
    }

    void note_latency(uint64_t latency) {
        const unsigned bin = std::min<unsigned>(
            static_cast<unsigned>(std::bit_width(latency)), static_cast<unsigned>(latency_bins_.size() - 1));
        ++latency_bins_[bin];
        latency_sum_ += latency;
        if (counters_.events_delivered == 1 || latency < latency_min_) latency_min_ = latency;
        if (latency > latency_max_) latency_max_ = latency;
    }

    void set_fate(uint64_t id, EventFate fate) {
        if (!cfg_.audit) return;
        SPIKENET_CHECK(id < audit_.size(), "fate set for unknown event id");
        audit_[id].fate = fate;
    }

    uint64_t count_in_flight() const {
        uint64_t n = 0;
        for (const FpgaState& f : fpgas_) {
            for (const auto& [dest, fifo] : f.tag_fifo) n += fifo.size();
            for (const SimPacket& p : f.egress) n += p.tags.size();
            for (const SimPacket& p : f.inbox) n += p.tags.size();
        }
        for (const NodeRec& node : nodes_)
            for (const SimPacket& p : node.inbox) n += p.tags.size();
        for (const LinkRec& link : links_) {
            for (const SimPacket& p : link.queue) n += p.tags.size();
            for (const auto& [arrival, p] : link.in_flight) n += p.tags.size();
        }
        return n;
    }

    /// Structural conservation audit: every routed event id is found exactly
    /// once in a bucket fifo or an in-flight packet, or has terminated
    /// (delivered or dropped); nothing is lost or duplicated.
    bool run_audit(const SimStats& s) {
        for (AuditEntry& e : audit_) e.seen = 0;
        bool ok = true;

        auto mark = [&](uint64_t id, EventFate expected) {
            if (id >= audit_.size()) { ok = false; return; }
            AuditEntry& e = audit_[id];
            if (e.fate != expected || e.seen != 0) ok = false;
            ++e.seen;
        };

        for (const FpgaState& f : fpgas_) {
            for (const auto& [dest, fifo] : f.tag_fifo)
                for (const EventTag& t : fifo) mark(t.id, EventFate::InBucket);
            for (const SimPacket& p : f.egress)
                for (const EventTag& t : p.tags) mark(t.id, EventFate::InFlight);
            for (const SimPacket& p : f.inbox)
                for (const EventTag& t : p.tags) mark(t.id, EventFate::InFlight);
        }
        for (const NodeRec& node : nodes_)
            for (const SimPacket& p : node.inbox)
                for (const EventTag& t : p.tags) mark(t.id, EventFate::InFlight);
        for (const LinkRec& link : links_) {
            for (const SimPacket& p : link.queue)
                for (const EventTag& t : p.tags) mark(t.id, EventFate::InFlight);
            for (const auto& [arrival, p] : link.in_flight)
                for (const EventTag& t : p.tags) mark(t.id, EventFate::InFlight);
        }

        uint64_t delivered = 0, dropped_src = 0, dropped_dst = 0, live = 0;
        for (const AuditEntry& e : audit_) {
            switch (e.fate) {
                case EventFate::Delivered: delivered++; if (e.seen != 0) ok = false; break;
                case EventFate::DroppedSource: dropped_src++; if (e.seen != 0) ok = false; break;
                case EventFate::DroppedDest: dropped_dst++; if (e.seen != 0) ok = false; break;
                case EventFate::InBucket:
                case EventFate::InFlight: live++; if (e.seen != 1) ok = false; break;
            }
        }

        if (audit_.size() != s.events_injected) ok = false;
        if (delivered != s.events_delivered) ok = false;
        if (dropped_src != s.dropped_source_miss) ok = false;
        if (dropped_dst != s.dropped_dest_miss + s.dropped_unreachable) ok = false;
        if (live != s.events_in_flight) ok = false;
        if (s.events_injected !=
            s.events_delivered + s.dropped_source_miss + s.dropped_dest_miss +
                s.dropped_unreachable + s.events_in_flight)
            ok = false;
        return ok;
    }

    SimConfig cfg_;
    std::vector<NodeRec> nodes_;
    std::vector<LinkRec> links_;
    std::vector<FpgaState> fpgas_;
    std::vector<ConsistencyViolation> table_violations_;

    uint64_t now_ = 0;
    uint64_t next_event_id_ = 0;
    std::size_t trace_cursor_ = 0;

    SimStats counters_;
    uint64_t events_packetized_ = 0;
    std::unordered_map<uint32_t, uint64_t> occupancy_;
    std::array<uint64_t, 33> latency_bins_{};
    uint64_t latency_sum_ = 0;
    uint64_t latency_min_ = 0;
    uint64_t latency_max_ = 0;
    std::vector<AuditEntry> audit_;
};

}  // namespace spikenet
