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
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "spikenet/event.hpp"

namespace spikenet {

inline constexpr unsigned kHicannLinksPerFpga = 8;

/// Key of the source-side lookup: which chip link the spike came in on plus
/// its pulse address. The link index disambiguates identically numbered
/// neurons on different chips behind the same FPGA.
struct SourceKey {
    uint8_t hicann_link = 0;      // 0..7
    uint16_t pulse_address = 0;   // < 2^12

    uint16_t packed() const {
        return static_cast<uint16_t>((hicann_link << kPulseAddressBits) | pulse_address);
    }
    static SourceKey unpack(uint16_t v) {
        return SourceKey{static_cast<uint8_t>(v >> kPulseAddressBits),
                         static_cast<uint16_t>(v & (kPulseAddressLimit - 1))};
    }

    friend bool operator==(const SourceKey&, const SourceKey&) = default;
};

struct SourceEntry {
    NetworkAddress dest;
    Guid guid;

    friend bool operator==(const SourceEntry&, const SourceEntry&) = default;
};

class TableParseError : public std::runtime_error {
public:
    TableParseError(std::string file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

/// Immutable after load: pulse address + link -> (network destination, GUID).
/// At most 2^15 entries (8 links x 2^12 addresses).
class SourceRoutingTable {
public:
    bool insert(SourceKey key, SourceEntry entry) {
        return entries_.emplace(key.packed(), entry).second;
    }

    const SourceEntry* lookup(SourceKey key) const {
        auto it = entries_.find(key.packed());
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Entries sorted by (link, pulse_address); the canonical order for
    /// serialization and reports.
    std::vector<std::pair<SourceKey, SourceEntry>> sorted_entries() const {
        std::vector<std::pair<SourceKey, SourceEntry>> out;
        out.reserve(entries_.size());
        for (const auto& [k, e] : entries_) out.emplace_back(SourceKey::unpack(k), e);
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.first.packed() < b.first.packed(); });
        return out;
    }

private:
    std::unordered_map<uint16_t, SourceEntry> entries_;
};

/// Immutable after load: GUID -> multicast mask over the 8 local chip links.
/// Masks are nonzero; an all-zero mask is a configuration error.
class DestRoutingTable {
public:
    bool insert(Guid guid, uint8_t mask) {
        SPIKENET_CHECK(mask != 0, "zero multicast mask");
        SPIKENET_CHECK(guid.value < kGuidLimit, "guid out of 17-bit range");
        return masks_.emplace(guid.value, mask).second;
    }

    std::optional<uint8_t> lookup(Guid guid) const {
        auto it = masks_.find(guid.value);
        if (it == masks_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return masks_.size(); }
    bool empty() const { return masks_.empty(); }

    std::vector<std::pair<Guid, uint8_t>> sorted_entries() const {
        std::vector<std::pair<Guid, uint8_t>> out;
        out.reserve(masks_.size());
        for (const auto& [g, m] : masks_) out.emplace_back(Guid{g}, m);
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.first.value < b.first.value; });
        return out;
    }

private:
    std::unordered_map<uint32_t, uint8_t> masks_;
};

struct RoutingTables {
    SourceRoutingTable source;
    DestRoutingTable dest;
};

/// Miss bookkeeping owned by the node, not the table. Misses never abort the
/// event stream; they are counted, and the first occurrence of each unmapped
/// key is kept for diagnostics (capped).
struct LookupMissLog {
    static constexpr std::size_t kMaxLoggedKeys = 64;

    uint64_t source_misses = 0;
    uint64_t dest_misses = 0;
    std::vector<SourceKey> first_source_misses;
    std::vector<Guid> first_dest_misses;

    void note_source_miss(SourceKey key) {
        ++source_misses;
        if (first_source_misses.size() < kMaxLoggedKeys &&
            std::find(first_source_misses.begin(), first_source_misses.end(), key) ==
                first_source_misses.end())
            first_source_misses.push_back(key);
    }

    void note_dest_miss(Guid guid) {
        ++dest_misses;
        if (first_dest_misses.size() < kMaxLoggedKeys &&
            std::find(first_dest_misses.begin(), first_dest_misses.end(), guid) ==
                first_dest_misses.end())
            first_dest_misses.push_back(guid);
    }
};

/// Source-side lookup stage. On a hit the spike becomes a routed event
/// carrying destination, GUID and its original deadline; on a miss it is
/// dropped and counted.
inline std::optional<RoutedEvent> route_source(const SourceRoutingTable& table, SourceKey key,
                                               const SpikeEvent& event, LookupMissLog& misses) {
    SPIKENET_CHECK(key.pulse_address == event.pulse_address, "key does not match event");
    const SourceEntry* entry = table.lookup(key);
    if (entry == nullptr) {
        misses.note_source_miss(key);
        return std::nullopt;
    }
    return RoutedEvent{entry->dest, entry->guid, event.timestamp};
}

/// Destination-side lookup stage: GUID -> multicast mask. A miss signals a
/// routing-table inconsistency between source and destination nodes.
inline std::optional<uint8_t> route_dest(const DestRoutingTable& table, Guid guid,
                                         LookupMissLog& misses) {
    std::optional<uint8_t> mask = table.lookup(guid);
    if (!mask) misses.note_dest_miss(guid);
    return mask;
}

// ---------------------------------------------------------------------------
// Table file format (line oriented, `#` starts a comment):
//   src <hicann_link:0-7> <pulse_address:hex 12-bit> <dest:hex 16-bit> <guid:hex 17-bit>
//   dst <guid:hex 17-bit> <mask:binary 8-bit, bit 7 leftmost>
// ---------------------------------------------------------------------------

namespace detail {

inline uint64_t parse_hex_field(const std::string& tok, uint64_t limit, const char* what,
                                const std::string& file, int line) {
    std::size_t pos = 0;
    uint64_t v = 0;
    try {
        v = std::stoull(tok, &pos, 16);
    } catch (const std::exception&) {
        throw TableParseError(file, line, std::string("bad ") + what + " '" + tok + "'");
    }
    if (pos != tok.size())
        throw TableParseError(file, line, std::string("bad ") + what + " '" + tok + "'");
    if (v >= limit)
        throw TableParseError(file, line,
                              std::string(what) + " '" + tok + "' out of range (< " +
                                  std::to_string(limit) + ")");
    return v;
}

inline uint64_t parse_dec_field(const std::string& tok, uint64_t limit, const char* what,
                                const std::string& file, int line) {
    std::size_t pos = 0;
    uint64_t v = 0;
    try {
        v = std::stoull(tok, &pos, 10);
    } catch (const std::exception&) {
        throw TableParseError(file, line, std::string("bad ") + what + " '" + tok + "'");
    }
    if (pos != tok.size())
        throw TableParseError(file, line, std::string("bad ") + what + " '" + tok + "'");
    if (v >= limit)
        throw TableParseError(file, line,
                              std::string(what) + " '" + tok + "' out of range (< " +
                                  std::to_string(limit) + ")");
    return v;
}

inline uint8_t parse_mask_field(const std::string& tok, const std::string& file, int line) {
    if (tok.size() != 8)
        throw TableParseError(file, line, "mask '" + tok + "' must be 8 binary digits");
    uint8_t mask = 0;
    for (char c : tok) {
        if (c != '0' && c != '1')
            throw TableParseError(file, line, "mask '" + tok + "' must be 8 binary digits");
        mask = static_cast<uint8_t>((mask << 1) | (c == '1'));
    }
    if (mask == 0) throw TableParseError(file, line, "mask '" + tok + "' is all zero");
    return mask;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) {
        if (tok[0] == '#') break;
        toks.push_back(tok);
    }
    return toks;
}

}  // namespace detail

/// Parses a table file. Rejects malformed lines, duplicate keys and zero
/// masks, naming the offending line.
inline RoutingTables load_tables(std::istream& in, const std::string& filename = "<stream>") {
    RoutingTables tables;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<std::string> toks = detail::split_tokens(line);
        if (toks.empty()) continue;
        if (toks[0] == "src") {
            if (toks.size() != 5)
                throw TableParseError(filename, lineno, "src line needs 4 fields");
            SourceKey key{
                static_cast<uint8_t>(detail::parse_dec_field(toks[1], kHicannLinksPerFpga,
                                                             "hicann_link", filename, lineno)),
                static_cast<uint16_t>(detail::parse_hex_field(toks[2], kPulseAddressLimit,
                                                              "pulse_address", filename, lineno))};
            SourceEntry entry{
                NetworkAddress{static_cast<uint16_t>(
                    detail::parse_hex_field(toks[3], 1u << kNetworkAddressBits, "dest", filename,
                                            lineno))},
                Guid{static_cast<uint32_t>(
                    detail::parse_hex_field(toks[4], kGuidLimit, "guid", filename, lineno))}};
            if (!tables.source.insert(key, entry))
                throw TableParseError(filename, lineno,
                                      "duplicate src key (link " +
                                          std::to_string(key.hicann_link) + ", pulse " +
                                          std::to_string(key.pulse_address) + ")");
        } else if (toks[0] == "dst") {
            if (toks.size() != 3)
                throw TableParseError(filename, lineno, "dst line needs 2 fields");
            Guid guid{static_cast<uint32_t>(
                detail::parse_hex_field(toks[1], kGuidLimit, "guid", filename, lineno))};
            uint8_t mask = detail::parse_mask_field(toks[2], filename, lineno);
            if (!tables.dest.insert(guid, mask))
                throw TableParseError(filename, lineno,
                                      "duplicate dst guid " + std::to_string(guid.value));
        } else {
            throw TableParseError(filename, lineno, "unknown directive '" + toks[0] + "'");
        }
    }
    return tables;
}

inline RoutingTables load_tables_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TableParseError(path, 0, "cannot open file");
    return load_tables(in, path);
}

/// Canonical serializer: src entries sorted by (link, pulse), then dst
/// entries sorted by guid; lowercase zero-padded hex. save(load(f)) is byte
/// identical for canonically sorted files.
inline void save_tables(const RoutingTables& tables, std::ostream& out) {
    char buf[64];
    for (const auto& [key, entry] : tables.source.sorted_entries()) {
        std::snprintf(buf, sizeof buf, "src %u %03x %04x %05x\n", key.hicann_link,
                      key.pulse_address, entry.dest.value, entry.guid.value);
        out << buf;
    }
    for (const auto& [guid, mask] : tables.dest.sorted_entries()) {
        std::snprintf(buf, sizeof buf, "dst %05x ", guid.value);
        out << buf;
        for (int bit = 7; bit >= 0; --bit) out << ((mask >> bit) & 1 ? '1' : '0');
        out << '\n';
    }
}

inline std::string save_tables_string(const RoutingTables& tables) {
    std::ostringstream oss;
    save_tables(tables, oss);
    return oss.str();
}

// ---------------------------------------------------------------------------
// Deployment-level consistency: every (dest, guid) a source table emits must
// have a matching dest-table entry at that destination node.
// ---------------------------------------------------------------------------

struct ConsistencyViolation {
    enum class Kind : uint8_t {
        UnknownDestination,  // no node carries the destination address
        MissingDestEntry,    // destination node has no entry for the guid
    };

    Kind kind;
    NetworkAddress src_node;
    SourceKey key;
    NetworkAddress dest;
    Guid guid;

    std::string describe() const {
        std::string s = "node " + std::to_string(src_node.value) + " key(link " +
                        std::to_string(key.hicann_link) + ", pulse " +
                        std::to_string(key.pulse_address) + ") -> dest " +
                        std::to_string(dest.value) + " guid " + std::to_string(guid.value) + ": ";
        s += kind == Kind::UnknownDestination ? "destination is not a known endpoint"
                                              : "destination has no entry for this guid";
        return s;
    }
};

/// Checks a deployment given as (node address, tables) bindings, in binding
/// order with entries in canonical order, so reports are deterministic.
inline std::vector<ConsistencyViolation> check_table_consistency(
    const std::vector<std::pair<NetworkAddress, const RoutingTables*>>& deployment) {
    std::unordered_map<uint16_t, const RoutingTables*> by_addr;
    for (const auto& [addr, tables] : deployment) by_addr.emplace(addr.value, tables);

    std::vector<ConsistencyViolation> violations;
    for (const auto& [addr, tables] : deployment) {
        for (const auto& [key, entry] : tables->source.sorted_entries()) {
            auto it = by_addr.find(entry.dest.value);
            if (it == by_addr.end()) {
                violations.push_back({ConsistencyViolation::Kind::UnknownDestination, addr, key,
                                      entry.dest, entry.guid});
            } else if (!it->second->dest.lookup(entry.guid)) {
                violations.push_back({ConsistencyViolation::Kind::MissingDestEntry, addr, key,
                                      entry.dest, entry.guid});
            }
        }
    }
    return violations;
}

}  // namespace spikenet
