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

// Acceptance suite: end-to-end checks of the library's contract, one printed
// pass/fail line per criterion. Returns nonzero if any criterion fails.
// Usage: acceptance [path-to-cli-binary]

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "reference_bucket_manager.hpp"
#include "spikenet/packet.hpp"
#include "spikenet/scenario.hpp"
#include "spikenet/sim.hpp"
#include "spikenet/stats_io.hpp"
#include "trace_gen.hpp"

using namespace spikenet;
using spikenet::testing::BucketWorkload;
using spikenet::testing::make_bucket_workload;
using spikenet::testing::ReferenceBucketManager;
using spikenet::testing::replay_workload;

namespace {

std::string g_cli_path;

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw Failure(msg);
}

// --- shared scenario builders ------------------------------------------------

SimConfig pair_config(uint32_t capacity, double rate, uint32_t slack, uint64_t until) {
    SimConfig cfg;
    cfg.topo.torus = TorusDims{2, 1, 1};
    cfg.topo.wafers = 1;
    cfg.topo.fpgas_per_wafer = 2;
    cfg.topo.concentrators_per_wafer = 2;
    cfg.topo.fpgas_per_concentrator = 1;
    cfg.bucket = BucketConfig{8, capacity, 4};
    cfg.traffic.rate = rate;
    cfg.traffic.deadline_slack = slack;
    cfg.traffic.dest_dist = TrafficSpec::DestDist::Fixed;
    cfg.traffic.fixed_dest_fpga = 1;
    cfg.tables = build_auto_tables(cfg.topo, {});
    cfg.until = until;
    cfg.seed = 1;
    return cfg;
}

// --- criteria ------------------------------------------------------------------

// Encoding 124 events yields exactly 496 payload bytes; 125 events rejected.
void crit_packet_capacity() {
    Rng rng(1);
    std::vector<WireEvent> evs;
    for (int i = 0; i < 124; ++i)
        evs.push_back(WireEvent{Guid{static_cast<uint32_t>(rng.below(kGuidLimit))},
                                static_cast<uint16_t>(rng.below(kTimestampPeriod))});
    const auto bytes = encode_packet(NetworkAddress{1}, NetworkAddress{2}, evs);
    require(bytes.size() - kWordBytes == 496,
            "payload is " + std::to_string(bytes.size() - kWordBytes) + " bytes, want 496");
    evs.push_back(WireEvent{Guid{0}, 0});
    bool rejected = false;
    try {
        encode_packet(NetworkAddress{1}, NetworkAddress{2}, evs);
    } catch (const CodecError& e) {
        rejected = e.fault() == CodecFault::Overflow;
    }
    require(rejected, "125 events were not rejected with Overflow");
}

// With bucket capacity 1 the two-node run sustains 0.500 events/cycle +- 0.5%
// at the egress port over 1e5 cycles.
void crit_single_event_rate() {
    const SimStats s = Simulation(pair_config(1, 1.0, 1000, 100000)).run();
    const double rate = static_cast<double>(s.events_egressed) / static_cast<double>(s.cycles);
    require(rate >= 0.4975 && rate <= 0.5025,
            "egress rate " + std::to_string(rate) + " outside 0.500 +- 0.5%");
    require(s.conservation_ok, "conservation audit failed");
}

// With capacity 124 and generous deadlines at injection rate 1.0 the run is
// injection limited: delivered throughput >= 0.96 events/cycle over 1e5.
void crit_aggregation_gain() {
    const SimStats s = Simulation(pair_config(124, 1.0, 8000, 100000)).run();
    const double rate = static_cast<double>(s.events_delivered) / static_cast<double>(s.cycles);
    require(rate >= 0.96, "delivered throughput " + std::to_string(rate) + " below 0.96");
    require(s.conservation_ok, "conservation audit failed");
}

// 200 random workloads produce flush-record sequences identical to the
// linear-scan reference manager.
void crit_bucket_oracle() {
    Rng rng(2026);
    for (int trial = 0; trial < 200; ++trial) {
        const BucketWorkload w = make_bucket_workload(rng);
        BucketManager impl(w.cfg);
        ReferenceBucketManager ref(w.cfg);
        const auto got = replay_workload(w, impl);
        const auto want = replay_workload(w, ref);
        require(got.size() == want.size(),
                "trial " + std::to_string(trial) + ": " + std::to_string(got.size()) +
                    " records vs oracle " + std::to_string(want.size()));
        for (std::size_t i = 0; i < got.size(); ++i)
            require(got[i] == want[i],
                    "trial " + std::to_string(trial) + ": record " + std::to_string(i) +
                        " differs from oracle");
        require(impl.buffered_count() == 0 && impl.queued_count() == 0 && ref.empty(),
                "trial " + std::to_string(trial) + ": events left behind");
    }
}

// Every simulated scenario in the test set conserves events exactly:
// injected = delivered + dropped + in-flight, no loss, no duplication,
// multicast fan-out equal to popcount(mask) per delivery.
void crit_conservation() {
    std::vector<SimConfig> set;

    set.push_back(pair_config(1, 1.0, 1000, 20000));
    set.push_back(pair_config(124, 1.0, 8000, 20000));

    {
        SimConfig cube;
        cube.topo.torus = TorusDims{2, 2, 2};
        AutoTableParams params;
        params.pulses_per_link = 4;
        params.multicast = AutoTableParams::Multicast::Spread;
        cube.tables = build_auto_tables(cube.topo, params);
        cube.traffic.rate = 0.3;
        cube.until = 5000;
        cube.seed = 11;
        set.push_back(std::move(cube));
    }
    {
        SimConfig multicast = pair_config(16, 0.5, 800, 10000);
        AutoTableParams params;
        params.multicast = AutoTableParams::Multicast::All;
        multicast.tables = build_auto_tables(multicast.topo, params);
        multicast.traffic.dest_dist = TrafficSpec::DestDist::Uniform;
        set.push_back(std::move(multicast));
    }
    {
        SimConfig monitored = pair_config(32, 0.7, 1500, 10000);
        monitored.traffic.dest_dist = TrafficSpec::DestDist::Uniform;
        monitored.host.monitor = true;
        monitored.host.ring.size = 4096;
        monitored.host.ring.notification_latency = 10;
        set.push_back(std::move(monitored));
    }
    {
        // Trace with a deliberate source miss and an inconsistent guid.
        SimConfig lossy = pair_config(16, 0.0, 500, 2000);
        lossy.traffic.kind = TrafficSpec::Kind::Trace;
        auto t0 = std::make_shared<RoutingTables>();
        t0->source.insert(SourceKey{0, 1}, SourceEntry{lossy.topo.fpga_address(1), Guid{1}});
        t0->source.insert(SourceKey{0, 2}, SourceEntry{lossy.topo.fpga_address(1), Guid{2}});
        t0->source.insert(SourceKey{0, 3}, SourceEntry{NetworkAddress{0}, Guid{3}});  // unreachable
        auto t1 = std::make_shared<RoutingTables>();
        t1->dest.insert(Guid{1}, 0b00000110);  // guid 2 dangles
        lossy.tables = {t0, t1};
        lossy.allow_inconsistent_tables = true;
        lossy.trace = {
            TraceEvent{0, 0, 0, 1, 100},   TraceEvent{1, 0, 0, 2, 120},
            TraceEvent{2, 0, 0, 3, 140},   TraceEvent{3, 0, 0, 999, 160},  // source miss
            TraceEvent{10, 0, 0, 1, 400},
        };
        set.push_back(std::move(lossy));
    }
    {
        SimConfig cutoff = pair_config(124, 1.0, 10000, 700);  // events still in flight
        set.push_back(std::move(cutoff));
    }

    int idx = 0;
    for (SimConfig& cfg : set) {
        cfg.audit = true;
        const SimStats s = Simulation(std::move(cfg)).run();
        require(s.conservation_ok, "scenario " + std::to_string(idx) + ": audit failed");
        require(s.events_injected == s.events_delivered + s.dropped_source_miss +
                                         s.dropped_dest_miss + s.dropped_unreachable +
                                         s.events_in_flight,
                "scenario " + std::to_string(idx) + ": counters do not balance");
        ++idx;
    }
}

// In oracle workloads no event outlives a tick in a flushable (filling)
// bucket whose most urgent deadline is exceeded: an event is flushed no
// later than the first tick its bucket could flush after the deadline
// passed. Every event flushes exactly once, no earlier than its submission.
void crit_deadline_liveness() {
    Rng rng(4242);
    for (int trial = 0; trial < 60; ++trial) {
        const BucketWorkload w = make_bucket_workload(rng);
        BucketManager mgr(w.cfg);
        std::size_t cursor = 0;
        std::vector<FlushRecord> records;
        for (uint64_t t = 0; t < w.run_ticks; ++t) {
            while (cursor < w.submissions.size() && w.submissions[cursor].tick <= t) {
                for (FlushRecord& r : mgr.submit(w.submissions[cursor].ev, t))
                    records.push_back(std::move(r));
                ++cursor;
            }
            for (FlushRecord& r : mgr.tick(t)) records.push_back(std::move(r));
            for (uint32_t b = 0; b < mgr.pool_size(); ++b) {
                const auto view = mgr.view(b);
                if (view.state == BucketManager::BucketState::Filling)
                    require(!deadline_exceeded(*view.most_urgent, timestamp_of_clock(t)),
                            "trial " + std::to_string(trial) + ": filling bucket survived tick " +
                                std::to_string(t) + " past its deadline");
            }
        }
        require(mgr.buffered_count() == 0 && mgr.queued_count() == 0,
                "trial " + std::to_string(trial) + ": events never flushed");
        // Each record's flush must not precede any of its events' submission.
        std::size_t flushed = 0;
        for (const FlushRecord& r : records) flushed += r.events.size();
        require(flushed == w.submissions.size(),
                "trial " + std::to_string(trial) + ": flushed " + std::to_string(flushed) +
                    " of " + std::to_string(w.submissions.size()) + " events");
    }
}

// 1e4 randomized producer/consumer schedules deliver the byte stream intact
// and in order, and all credit returns: final space equals the ring size.
void crit_ring_safety() {
    Rng rng(77);
    for (int trial = 0; trial < 10000; ++trial) {
        const uint32_t size = 1u << (5 + rng.below(4));
        RingChannel ch({size, static_cast<uint32_t>(rng.below(8)),
                        static_cast<uint32_t>(1 + rng.below(3) * 16)});
        std::vector<uint8_t> sent, received, staged;
        uint8_t ctr = static_cast<uint8_t>(trial);
        uint64_t now = 0;
        uint32_t credit = 0;
        for (int op = 0; op < 60; ++op) {
            now += rng.below(3);
            const uint64_t kind = rng.below(3);
            if (kind == 0) {
                if (staged.empty()) {
                    staged.resize(1 + rng.below(size / 2));
                    for (uint8_t& b : staged) b = ctr++;
                }
                if (ch.producer_put(staged, now) == PutStatus::Accepted) {
                    sent.insert(sent.end(), staged.begin(), staged.end());
                    staged.clear();
                }
            } else if (kind == 1) {
                const auto data = ch.consumer_poll(now);
                received.insert(received.end(), data.begin(), data.end());
                credit += static_cast<uint32_t>(data.size());
            } else if (credit > 0) {
                const uint32_t amount = static_cast<uint32_t>(1 + rng.below(credit));
                ch.consumer_credit(amount, now);
                credit -= amount;
            }
            require(ch.credit_accounting_holds(),
                    "trial " + std::to_string(trial) + ": credit accounting broke");
        }
        now += 64;
        ch.flush_notifications(now);
        const auto tail = ch.consumer_poll(now + 8);
        received.insert(received.end(), tail.begin(), tail.end());
        credit += static_cast<uint32_t>(tail.size());
        if (credit > 0) ch.consumer_credit(credit, now + 8);
        ch.producer_sync(now + 16);
        require(received == sent, "trial " + std::to_string(trial) + ": byte stream corrupted");
        require(ch.space() == ch.size(),
                "trial " + std::to_string(trial) + ": space " + std::to_string(ch.space()) +
                    " != size " + std::to_string(ch.size()));
    }
}

// deadline_exceeded / ordering match an exhaustive oracle at modulus 2^5 and
// an independent two's-complement route on 1e6 random pairs at 2^15.
void crit_serial_arithmetic() {
    // Full table at modulus 32 against the step-existence oracle.
    const uint32_t m = 32;
    for (uint32_t d = 0; d < m; ++d) {
        for (uint32_t n = 0; n < m; ++n) {
            bool brute = false;
            for (uint32_t k = 1; k < m / 2; ++k)
                if ((d + k) % m == n) brute = true;
            const uint32_t fwd = (n + m - d) % m;
            const bool formula = fwd >= 1 && fwd < m / 2;
            require(formula == brute, "reduced-modulus table mismatch at d=" + std::to_string(d) +
                                          " n=" + std::to_string(n));
        }
    }
    // 1e6 random pairs at 2^15 against signed two's-complement comparison.
    Rng rng(15);
    for (int i = 0; i < 1000000; ++i) {
        const uint16_t d = static_cast<uint16_t>(rng.below(kTimestampPeriod));
        const uint16_t n = static_cast<uint16_t>(rng.below(kTimestampPeriod));
        const int16_t diff = static_cast<int16_t>(
            static_cast<uint16_t>(static_cast<uint16_t>(n << 1) - static_cast<uint16_t>(d << 1)));
        const bool oracle = diff > 0;
        require(deadline_exceeded(d, n) == oracle,
                "deadline_exceeded mismatch at d=" + std::to_string(d) + " n=" + std::to_string(n));
        // a precedes b exactly when b lies past deadline a: the same signed
        // comparison with the operands swapped. (`< 0` would differ at the
        // antipodal distance, where INT16_MIN is negative but not greater.)
        const bool precedes_oracle = d != n && static_cast<int16_t>(static_cast<uint16_t>(
                                                   static_cast<uint16_t>(n << 1) -
                                                   static_cast<uint16_t>(d << 1))) > 0;
        require(deadline_precedes(d, n) == precedes_oracle,
                "deadline_order mismatch at d=" + std::to_string(d) + " n=" + std::to_string(n));
    }
}

// Dimension-order path lengths equal breadth-first shortest distances on all
// torus dimensions up to 5x5x5, 1e4 random pairs.
void crit_torus_routing() {
    Rng rng(21);
    std::vector<TorusDims> all_dims;
    for (uint16_t x = 1; x <= 5; ++x)
        for (uint16_t y = 1; y <= 5; ++y)
            for (uint16_t z = 1; z <= 5; ++z) all_dims.push_back({x, y, z});

    int checked = 0;
    while (checked < 10000) {
        const TorusDims dims = all_dims[rng.below(all_dims.size())];
        const uint32_t n = dims.node_count();
        const uint32_t src_idx = static_cast<uint32_t>(rng.below(n));
        const uint32_t dst_idx = static_cast<uint32_t>(rng.below(n));
        // BFS distance.
        std::vector<uint32_t> dist(n, UINT32_MAX);
        std::queue<uint32_t> frontier;
        dist[src_idx] = 0;
        frontier.push(src_idx);
        while (!frontier.empty()) {
            const uint32_t cur = frontier.front();
            frontier.pop();
            const TorusCoord c = coord_of_index(cur, dims);
            for (unsigned dim = 0; dim < 3; ++dim) {
                for (int step : {1, -1}) {
                    TorusCoord nb = c;
                    nb.set(dim, static_cast<uint16_t>((c[dim] + dims[dim] + step) % dims[dim]));
                    const uint32_t ni = node_index(nb, dims);
                    if (ni != cur && dist[ni] == UINT32_MAX) {
                        dist[ni] = dist[cur] + 1;
                        frontier.push(ni);
                    }
                }
            }
        }
        const auto path =
            torus_route(coord_of_index(src_idx, dims), coord_of_index(dst_idx, dims), dims);
        require(path.size() == dist[dst_idx],
                "path length " + std::to_string(path.size()) + " != bfs " +
                    std::to_string(dist[dst_idx]));
        ++checked;
    }
}

// decode(encode(x)) is the identity on 1e4 random packets, and the committed
// golden hex for the fixed 7-event packet is byte stable.
void crit_codec_roundtrip_golden() {
    Rng rng(33);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.below(kMaxEventsPerPacket);
        std::vector<WireEvent> evs;
        evs.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            evs.push_back(WireEvent{Guid{static_cast<uint32_t>(rng.below(kGuidLimit))},
                                    static_cast<uint16_t>(rng.below(kTimestampPeriod))});
        const NetworkAddress dest{static_cast<uint16_t>(rng.below(65536))};
        const NetworkAddress src{static_cast<uint16_t>(rng.below(65536))};
        const DecodedPacket pkt = decode_packet(encode_packet(dest, src, evs));
        require(pkt.header.dest == dest && pkt.header.source == src && pkt.events == evs,
                "round trip diverged on trial " + std::to_string(trial));
    }

    const std::vector<WireEvent> golden_events = {
        {Guid{0x00001}, 0x0001}, {Guid{0x1ffff}, 0x7fff}, {Guid{0x0abcd}, 0x2aaa},
        {Guid{0x12345}, 0x5555}, {Guid{0x00000}, 0x0000}, {Guid{0x1c0de}, 0x0123},
        {Guid{0x0beef}, 0x7f00},
    };
    const auto bytes = encode_packet(NetworkAddress{0x1234}, NetworkAddress{0x0042}, golden_events);
    static const char* digits = "0123456789abcdef";
    std::string hex;
    for (uint8_t b : bytes) {
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0xf]);
    }
    std::ifstream in(std::string(SPIKENET_TEST_DIR) + "/golden/packet_7events.hex");
    require(in.good(), "golden file missing");
    std::string expected;
    in >> expected;
    require(hex == expected, "golden bytes changed:\n  got  " + hex + "\n  want " + expected);
}

// Two CLI runs with identical scenario and seed produce byte-identical JSON.
void crit_determinism() {
    require(!g_cli_path.empty(), "cli binary path not provided");
    const std::string scenario =
        std::string(SPIKENET_SOURCE_DIR) + "/scenarios/pair_monitored.scn";
    const std::string out_a = "accept_det_a.json";
    const std::string out_b = "accept_det_b.json";
    for (const std::string& out : {out_a, out_b}) {
        const std::string cmd = g_cli_path + " run --scenario " + scenario +
                                " --seed 7 --until 20000 --out " + out + " 2>/dev/null";
        const int rc = std::system(cmd.c_str());
        require(rc == 0, "cli run failed with status " + std::to_string(rc));
    }
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = slurp(out_a);
    const std::string b = slurp(out_b);
    std::remove(out_a.c_str());
    std::remove(out_b.c_str());
    require(!a.empty(), "first run produced no output");
    require(a == b, "two identical runs differ");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_cli_path = argv[1];

    struct Criterion {
        const char* name;
        std::function<void()> fn;
    };
    const std::vector<Criterion> criteria = {
        {"packet-capacity-anchor", crit_packet_capacity},
        {"single-event-rate-anchor", crit_single_event_rate},
        {"aggregation-gain", crit_aggregation_gain},
        {"bucket-oracle-equivalence", crit_bucket_oracle},
        {"conservation-suite", crit_conservation},
        {"deadline-liveness", crit_deadline_liveness},
        {"ring-channel-safety", crit_ring_safety},
        {"serial-arithmetic", crit_serial_arithmetic},
        {"torus-routing", crit_torus_routing},
        {"codec-roundtrip-golden", crit_codec_roundtrip_golden},
        {"determinism", crit_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        try {
            c.fn();
            std::printf("[PASS] %s\n", c.name);
        } catch (const std::exception& e) {
            ++failures;
            std::printf("[FAIL] %s: %s\n", c.name, e.what());
        }
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
