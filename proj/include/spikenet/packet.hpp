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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikenet/event.hpp"

namespace spikenet {

// Wire framing. A message is a sequence of 128-bit network words: one header
// word followed by payload words carrying four 32-bit events each. The
// 496-byte payload ceiling gives at most 124 events per packet.
inline constexpr std::size_t kWordBytes = 16;
inline constexpr std::size_t kEventsPerWord = 4;
inline constexpr std::size_t kWireEventBytes = 4;
inline constexpr std::size_t kMaxPayloadBytes = 496;
inline constexpr std::size_t kMaxEventsPerPacket = kMaxPayloadBytes / kWireEventBytes;  // 124

enum class CodecFault : uint8_t {
    EmptyPayload,  // encode called with zero events
    Overflow,      // more than 124 events
    BadLength,     // byte length not a whole number of words, or inconsistent
    BadType,       // msg_type other than spike-events
    BadCount,      // event_count field out of [1, 124]
};

inline const char* to_string(CodecFault f) {
    switch (f) {
        case CodecFault::EmptyPayload: return "EmptyPayload";
        case CodecFault::Overflow: return "Overflow";
        case CodecFault::BadLength: return "BadLength";
        case CodecFault::BadType: return "BadType";
        case CodecFault::BadCount: return "BadCount";
    }
    return "?";
}

class CodecError : public std::runtime_error {
public:
    CodecError(CodecFault fault, const std::string& what)
        : std::runtime_error(std::string(to_string(fault)) + ": " + what), fault_(fault) {}

    CodecFault fault() const { return fault_; }

private:
    CodecFault fault_;
};

/// Header word layout (16 bytes):
///   bytes 0..1   dest, little endian
///   bytes 2..3   source, little endian
///   byte  4      event_count (1..124)
///   byte  5      msg_type, low nibble (0 = spike events)
///   bytes 6..15  reserved, zero
struct PacketHeader {
    NetworkAddress dest;
    NetworkAddress source;
    uint8_t event_count = 0;
    uint8_t msg_type = 0;

    friend bool operator==(const PacketHeader&, const PacketHeader&) = default;
};

struct DecodedPacket {
    PacketHeader header;
    std::vector<WireEvent> events;

    friend bool operator==(const DecodedPacket&, const DecodedPacket&) = default;
};

/// 32-bit wire form: bits [31:17] timestamp, bits [16:0] GUID.
inline uint32_t pack_wire_event(const WireEvent& ev) {
    SPIKENET_CHECK(ev.guid.value < kGuidLimit, "guid out of 17-bit range");
    SPIKENET_CHECK(ev.timestamp < kTimestampPeriod, "timestamp out of 15-bit range");
    return (static_cast<uint32_t>(ev.timestamp) << kGuidBits) | ev.guid.value;
}

inline WireEvent unpack_wire_event(uint32_t word) {
    return WireEvent{Guid{word & (kGuidLimit - 1)},
                     static_cast<uint16_t>(word >> kGuidBits)};
}

/// Payload words needed for n events (4 per word).
inline std::size_t payload_words(std::size_t event_count) {
    return (event_count + kEventsPerWord - 1) / kEventsPerWord;
}

/// Total message length in network words, header included.
inline std::size_t message_words(std::size_t event_count) {
    return 1 + payload_words(event_count);
}

/// Cycles a message occupies an egress port at one word per cycle. A single
/// event costs two words (header + one payload word), i.e. one event every
/// two clocks; a full packet moves 124 events in 32 cycles.
inline uint32_t message_cycles(std::size_t event_count) {
    if (event_count < 1 || event_count > kMaxEventsPerPacket)
        throw CodecError(CodecFault::BadCount,
                         "event count " + std::to_string(event_count) + " not in [1, 124]");
    return static_cast<uint32_t>(message_words(event_count));
}

namespace detail {

inline void put_u16_le(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32_le(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

inline uint16_t get_u16_le(std::span<const uint8_t> b, std::size_t off) {
    return static_cast<uint16_t>(b[off] | (b[off + 1] << 8));
}

inline uint32_t get_u32_le(std::span<const uint8_t> b, std::size_t off) {
    return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
           (static_cast<uint32_t>(b[off + 2]) << 16) | (static_cast<uint32_t>(b[off + 3]) << 24);
}

}  // namespace detail

/// Frames events into message bytes: header word, then payload words with
/// the earliest event in the lowest-addressed 32-bit slot. Unused slots in
/// the final word are zero.
inline std::vector<uint8_t> encode_packet(NetworkAddress dest, NetworkAddress source,
                                          std::span<const WireEvent> events) {
    if (events.empty()) throw CodecError(CodecFault::EmptyPayload, "no events to encode");
    if (events.size() > kMaxEventsPerPacket)
        throw CodecError(CodecFault::Overflow,
                         std::to_string(events.size()) + " events exceed the 124-event maximum");

    std::vector<uint8_t> out;
    out.reserve(message_words(events.size()) * kWordBytes);

    detail::put_u16_le(out, dest.value);
    detail::put_u16_le(out, source.value);
    out.push_back(static_cast<uint8_t>(events.size()));
    out.push_back(0);  // msg_type 0 = spike events
    out.resize(kWordBytes, 0);

    for (const WireEvent& ev : events) detail::put_u32_le(out, pack_wire_event(ev));
    out.resize(message_words(events.size()) * kWordBytes, 0);
    return out;
}

/// Parses message bytes produced by encode_packet. Trailing pad slots are
/// discarded according to the header's event count.
inline DecodedPacket decode_packet(std::span<const uint8_t> bytes) {
    if (bytes.size() < 2 * kWordBytes || bytes.size() % kWordBytes != 0)
        throw CodecError(CodecFault::BadLength,
                         std::to_string(bytes.size()) + " bytes is not a whole message");

    DecodedPacket pkt;
    pkt.header.dest = NetworkAddress{detail::get_u16_le(bytes, 0)};
    pkt.header.source = NetworkAddress{detail::get_u16_le(bytes, 2)};
    pkt.header.event_count = bytes[4];
    pkt.header.msg_type = bytes[5];

    if (pkt.header.msg_type != 0)
        throw CodecError(CodecFault::BadType,
                         "msg_type " + std::to_string(pkt.header.msg_type) + " is reserved");
    if (pkt.header.event_count < 1 || pkt.header.event_count > kMaxEventsPerPacket)
        throw CodecError(CodecFault::BadCount,
                         "event_count " + std::to_string(pkt.header.event_count));
    if (bytes.size() != message_words(pkt.header.event_count) * kWordBytes)
        throw CodecError(CodecFault::BadLength,
                         std::to_string(bytes.size()) + " bytes for event_count " +
                             std::to_string(pkt.header.event_count));

    pkt.events.reserve(pkt.header.event_count);
    for (std::size_t i = 0; i < pkt.header.event_count; ++i)
        pkt.events.push_back(unpack_wire_event(detail::get_u32_le(bytes, kWordBytes + i * 4)));
    return pkt;
}

}  // namespace spikenet
