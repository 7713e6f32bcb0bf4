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

// Command-line driver: run simulations, validate routing tables, encode and
// decode packets, inspect topologies. Exit codes: 0 success, 1 user or
// configuration error, 2 internal invariant violation.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spikenet/packet.hpp"
#include "spikenet/routing.hpp"
#include "spikenet/scenario.hpp"
#include "spikenet/sim.hpp"
#include "spikenet/stats_io.hpp"

namespace {

using namespace spikenet;

struct RunOptions {
    std::string scenario;
    std::optional<uint64_t> seed;
    std::optional<uint64_t> until;
    std::string format = "json";
    std::string out;
    std::string log_inject;
    std::string log_deliver;
    bool no_audit = false;
};

int cmd_run(const RunOptions& opt) {
    SimConfig cfg = load_scenario_file(opt.scenario);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.until) cfg.until = *opt.until;
    if (opt.no_audit) cfg.audit = false;

    std::ofstream inject_log, deliver_log;
    if (!opt.log_inject.empty()) {
        inject_log.open(opt.log_inject);
        if (!inject_log) throw ScenarioError(opt.log_inject, 0, "cannot open for writing");
        cfg.inject_log = &inject_log;
    }
    if (!opt.log_deliver.empty()) {
        deliver_log.open(opt.log_deliver);
        if (!deliver_log) throw ScenarioError(opt.log_deliver, 0, "cannot open for writing");
        cfg.deliver_log = &deliver_log;
    }

    Simulation sim(std::move(cfg));
    const SimStats stats = sim.run();

    const std::string payload =
        opt.format == "csv" ? stats_to_csv(stats) : stats_to_json_string(stats);
    if (opt.out.empty()) {
        std::cout << payload;
    } else {
        std::ofstream out(opt.out, std::ios::binary);
        if (!out) throw ScenarioError(opt.out, 0, "cannot open for writing");
        out << payload;
    }

    const double miss_rate =
        stats.events_delivered > 0
            ? static_cast<double>(stats.deadline_misses) / static_cast<double>(stats.events_delivered)
            : 0.0;
    std::cerr << "delivered=" << stats.events_delivered << " deadline_miss_rate=" << miss_rate
              << " mean_packet_occupancy=" << stats.mean_packet_occupancy << "\n";

    if (stats.audit_enabled && !stats.conservation_ok)
        throw InvariantViolation("conservation audit failed");
    return 0;
}

int cmd_validate_tables(const std::vector<std::string>& files,
                        const std::vector<std::string>& bindings) {
    std::vector<std::pair<NetworkAddress, RoutingTables>> nodes;

    if (!bindings.empty()) {
        for (const std::string& b : bindings) {
            const std::size_t eq = b.find('=');
            if (eq == std::string::npos)
                throw TableParseError(b, 0, "expected ADDR=FILE");
            const std::string addr_text = b.substr(0, eq);
            const std::string path = b.substr(eq + 1);
            std::size_t pos = 0;
            unsigned long addr = 0;
            try {
                addr = std::stoul(addr_text, &pos, 0);
            } catch (const std::exception&) {
                throw TableParseError(b, 0, "bad address '" + addr_text + "'");
            }
            if (pos != addr_text.size() || addr >= (1u << kNetworkAddressBits))
                throw TableParseError(b, 0, "bad address '" + addr_text + "'");
            nodes.emplace_back(NetworkAddress{static_cast<uint16_t>(addr)},
                               load_tables_file(path));
        }
        std::vector<std::pair<NetworkAddress, const RoutingTables*>> deployment;
        for (const auto& [addr, tables] : nodes) deployment.emplace_back(addr, &tables);
        const auto violations = check_table_consistency(deployment);
        for (const ConsistencyViolation& v : violations) std::cout << v.describe() << "\n";
        std::cerr << violations.size() << " violation(s)\n";
        return violations.empty() ? 0 : 1;
    }

    if (files.empty()) throw TableParseError("<args>", 0, "no table files given");

    // Address-less mode: every (dest, guid) a source table emits must find
    // the guid in the union of all given destination tables.
    std::vector<std::pair<std::string, RoutingTables>> loaded;
    for (const std::string& f : files) loaded.emplace_back(f, load_tables_file(f));

    uint64_t dangling = 0;
    for (const auto& [file, tables] : loaded) {
        for (const auto& [key, entry] : tables.source.sorted_entries()) {
            bool found = false;
            for (const auto& [other_file, other] : loaded)
                if (other.dest.lookup(entry.guid)) found = true;
            if (!found) {
                ++dangling;
                std::cout << file << ": key(link " << unsigned(key.hicann_link) << ", pulse "
                          << key.pulse_address << ") -> dest " << entry.dest.value << " guid "
                          << entry.guid.value << ": no destination table carries this guid\n";
            }
        }
    }
    std::cerr << dangling << " violation(s)\n";
    return dangling == 0 ? 0 : 1;
}

uint64_t parse_uint(const std::string& text, uint64_t limit, const char* what) {
    std::size_t pos = 0;
    uint64_t v = 0;
    try {
        v = std::stoull(text, &pos, 0);  // accepts decimal and 0x hex
    } catch (const std::exception&) {
        throw CodecError(CodecFault::BadCount, std::string("bad ") + what + " '" + text + "'");
    }
    if (pos != text.size() || v >= limit)
        throw CodecError(CodecFault::BadCount, std::string("bad ") + what + " '" + text + "'");
    return v;
}

int cmd_packet_encode(const std::string& dest_text, const std::string& source_text,
                      const std::vector<std::string>& event_args, bool read_stdin) {
    const NetworkAddress dest{
        static_cast<uint16_t>(parse_uint(dest_text, 1u << kNetworkAddressBits, "dest"))};
    const NetworkAddress source{
        static_cast<uint16_t>(parse_uint(source_text, 1u << kNetworkAddressBits, "source"))};

    std::vector<WireEvent> events;
    auto add_event = [&events](const std::string& guid_text, const std::string& ts_text) {
        events.push_back(WireEvent{
            Guid{static_cast<uint32_t>(parse_uint(guid_text, kGuidLimit, "guid"))},
            static_cast<uint16_t>(parse_uint(ts_text, kTimestampPeriod, "timestamp"))});
    };
    for (const std::string& arg : event_args) {
        const std::size_t colon = arg.find(':');
        if (colon == std::string::npos)
            throw CodecError(CodecFault::BadCount, "event '" + arg + "' is not GUID:TIMESTAMP");
        add_event(arg.substr(0, colon), arg.substr(colon + 1));
    }
    if (read_stdin) {
        std::string guid_text, ts_text;
        while (std::cin >> guid_text >> ts_text) add_event(guid_text, ts_text);
    }

    const std::vector<uint8_t> bytes = encode_packet(dest, source, events);
    static const char* digits = "0123456789abcdef";
    std::string hex;
    hex.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0xf]);
    }
    std::cout << hex << "\n";
    return 0;
}

int cmd_packet_decode(std::string hex) {
    if (hex.empty()) {
        std::string chunk;
        while (std::cin >> chunk) hex += chunk;
    }
    if (hex.size() % 2 != 0)
        throw CodecError(CodecFault::BadLength, "odd number of hex digits");
    std::vector<uint8_t> bytes;
    bytes.reserve(hex.size() / 2);
    auto nibble = [&hex](char c) -> uint8_t {
        if (c >= '0' && c <= '9') return static_cast<uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<uint8_t>(c - 'A' + 10);
        throw CodecError(CodecFault::BadLength, std::string("bad hex digit '") + c + "'");
    };
    for (std::size_t i = 0; i < hex.size(); i += 2)
        bytes.push_back(static_cast<uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));

    const DecodedPacket pkt = decode_packet(bytes);
    std::cout << "dest 0x" << std::hex << pkt.header.dest.value << " source 0x"
              << pkt.header.source.value << std::dec << " events "
              << unsigned(pkt.header.event_count) << " msg_type "
              << unsigned(pkt.header.msg_type) << "\n";
    for (const WireEvent& ev : pkt.events)
        std::cout << "event guid 0x" << std::hex << ev.guid.value << " timestamp 0x"
                  << ev.timestamp << std::dec << "\n";
    return 0;
}

int cmd_show_topology(const std::string& scenario) {
    SimConfig cfg = load_scenario_file(scenario);
    const TopologySpec& topo = cfg.topo;
    std::cout << "torus " << topo.torus.x << "x" << topo.torus.y << "x" << topo.torus.z << " ("
              << topo.torus.node_count() << " nodes)\n"
              << "wafers " << topo.wafers << ", concentrators " << topo.concentrator_count()
              << ", fpgas " << topo.fpga_count() << " (" << topo.fpgas_per_concentrator
              << " per concentrator)\n"
              << "torus link " << topo.torus_words_per_cycle()
              << " words/cycle, fpga port " << topo.fpga_port_words_per_cycle
              << " words/cycle, hop latency " << topo.hop_latency << " cycles\n";
    for (uint32_t c = 0; c < topo.concentrator_count(); ++c) {
        const uint32_t node = topo.concentrator_node(c);
        const TorusCoord coord = coord_of_index(node, topo.torus);
        std::cout << "concentrator " << c << " at node " << node << " (" << coord.x << ","
                  << coord.y << "," << coord.z << ") serving fpga addresses";
        for (uint32_t k = 0; k < topo.fpgas_per_concentrator; ++k)
            std::cout << " " << topo.fpga_address(c * topo.fpgas_per_concentrator + k).value;
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spike-event network protocol tools and simulator"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "run a scenario and emit statistics");
    run->add_option("--scenario", run_opt.scenario, "scenario file")->required();
    uint64_t seed_val = 0, until_val = 0;
    CLI::Option* seed_opt = run->add_option("--seed", seed_val, "override the scenario seed");
    CLI::Option* until_opt = run->add_option("--until", until_val, "override the cycle count");
    run->add_option("--format", run_opt.format, "output format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    run->add_option("--out", run_opt.out, "write statistics to a file instead of stdout");
    run->add_option("--log-inject", run_opt.log_inject, "write an injection trace log");
    run->add_option("--log-deliver", run_opt.log_deliver, "write a delivery log");
    run->add_flag("--no-audit", run_opt.no_audit, "disable the conservation audit");

    std::vector<std::string> vt_files, vt_bindings;
    CLI::App* validate = app.add_subcommand("validate-tables",
                                            "check source/destination table consistency");
    validate->add_option("files", vt_files, "table files (guid checked against their union)");
    validate->add_option("--at", vt_bindings,
                         "ADDR=FILE node binding for address-aware checking (repeatable)");

    std::string enc_dest, enc_source;
    std::vector<std::string> enc_events;
    bool enc_stdin = false;
    CLI::App* encode = app.add_subcommand("packet-encode", "frame events into message hex");
    encode->add_option("--dest", enc_dest, "destination address")->required();
    encode->add_option("--source", enc_source, "source address")->required();
    encode->add_option("--event", enc_events, "event as GUID:TIMESTAMP (repeatable)");
    encode->add_flag("--stdin", enc_stdin, "read 'guid timestamp' pairs from stdin");

    std::string dec_hex;
    CLI::App* decode = app.add_subcommand("packet-decode", "decode message hex");
    decode->add_option("--hex", dec_hex, "hex string (stdin when omitted)");

    std::string topo_scenario;
    CLI::App* show = app.add_subcommand("show-topology", "print the topology of a scenario");
    show->add_option("--scenario", topo_scenario, "scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (*seed_opt) run_opt.seed = seed_val;
            if (*until_opt) run_opt.until = until_val;
            return cmd_run(run_opt);
        }
        if (validate->parsed()) return cmd_validate_tables(vt_files, vt_bindings);
        if (encode->parsed()) return cmd_packet_encode(enc_dest, enc_source, enc_events, enc_stdin);
        if (decode->parsed()) return cmd_packet_decode(dec_hex);
        if (show->parsed()) return cmd_show_topology(topo_scenario);
    } catch (const InvariantViolation& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
