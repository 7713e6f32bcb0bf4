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

#include <compare>
#include <cstdint>

#include "spikenet/util.hpp"

namespace spikenet {

// Field widths of the event path. A spike leaves its source chip as a 12-bit
// pulse address plus a 15-bit arrival-deadline timestamp; after the source
// lookup it travels as a 17-bit GUID plus the timestamp, addressed to a
// 16-bit network destination.
inline constexpr unsigned kPulseAddressBits = 12;
inline constexpr unsigned kTimestampBits = 15;
inline constexpr unsigned kGuidBits = 17;
inline constexpr unsigned kNetworkAddressBits = 16;

inline constexpr uint16_t kPulseAddressLimit = 1u << kPulseAddressBits;  // 4096
inline constexpr uint32_t kTimestampPeriod = 1u << kTimestampBits;       // 32768
inline constexpr uint16_t kTimestampMask = kTimestampPeriod - 1;
inline constexpr uint32_t kTimestampHalfWindow = 1u << (kTimestampBits - 1);  // 16384
inline constexpr uint32_t kGuidLimit = 1u << kGuidBits;                       // 131072

/// A spike as it arrives from a neuromorphic chip link: source neuron pulse
/// address plus the deadline timestamp by which it should reach its sinks.
struct SpikeEvent {
    uint16_t pulse_address = 0;  // < 2^12
    uint16_t timestamp = 0;      // < 2^15, system-time units

    friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

/// Global identifier attached at the source lookup; the destination lookup
/// is keyed on it. 17 bits, so a wire event (timestamp + GUID) packs into
/// exactly 32 bits.
struct Guid {
    uint32_t value = 0;  // < 2^17

    friend bool operator==(const Guid&, const Guid&) = default;
    friend auto operator<=>(const Guid&, const Guid&) = default;
};

/// 16-bit destination address carried in the packet header; the torus routes
/// on it.
struct NetworkAddress {
    uint16_t value = 0;

    friend bool operator==(const NetworkAddress&, const NetworkAddress&) = default;
    friend auto operator<=>(const NetworkAddress&, const NetworkAddress&) = default;
};

/// A spike after the source-side lookup: where it goes and under which GUID.
struct RoutedEvent {
    NetworkAddress dest;
    Guid guid;
    uint16_t timestamp = 0;  // < 2^15

    friend bool operator==(const RoutedEvent&, const RoutedEvent&) = default;
};

/// The 32-bit on-the-wire form of an event: bits [31:17] timestamp,
/// bits [16:0] GUID.
struct WireEvent {
    Guid guid;
    uint16_t timestamp = 0;

    friend bool operator==(const WireEvent&, const WireEvent&) = default;
};

/// Unbounded simulator clock. The 15-bit timestamps on events are a
/// projection of this counter, which stays authoritative so the simulator
/// can measure lateness beyond one wrap period.
struct SystemClock {
    uint64_t now = 0;
    double frequency = 210e6;  // cycles per second

    void advance(uint64_t cycles = 1) { now += cycles; }
};

/// Projects the unbounded clock into the 15-bit timestamp domain.
inline uint16_t timestamp_of_clock(uint64_t now) {
    return static_cast<uint16_t>(now & kTimestampMask);
}

/// Serial-number comparison over the 15-bit cyclic timestamp space with a
/// half window of 2^14: `now` is past `deadline` iff the forward distance
/// from deadline to now is in [1, 2^14). Equality is not exceeded. Valid as
/// long as in-flight skew stays below half the timestamp period.
inline bool deadline_exceeded(uint16_t deadline, uint16_t now) {
    SPIKENET_CHECK(deadline < kTimestampPeriod && now < kTimestampPeriod,
                   "timestamp out of 15-bit range");
    const uint32_t fwd = (static_cast<uint32_t>(now) + kTimestampPeriod - deadline) & kTimestampMask;
    return fwd >= 1 && fwd < kTimestampHalfWindow;
}

/// Total order on timestamps within any window narrower than 2^14 units:
/// a precedes b (is more urgent) iff the forward distance a -> b is in
/// [1, 2^14).
inline std::strong_ordering deadline_compare(uint16_t a, uint16_t b) {
    SPIKENET_CHECK(a < kTimestampPeriod && b < kTimestampPeriod, "timestamp out of 15-bit range");
    if (a == b) return std::strong_ordering::equal;
    const uint32_t fwd = (static_cast<uint32_t>(b) + kTimestampPeriod - a) & kTimestampMask;
    return (fwd >= 1 && fwd < kTimestampHalfWindow) ? std::strong_ordering::less
                                                    : std::strong_ordering::greater;
}

inline bool deadline_precedes(uint16_t a, uint16_t b) {
    return deadline_compare(a, b) == std::strong_ordering::less;
}

/// More urgent of the two; returns `a` on ties.
inline uint16_t deadline_min(uint16_t a, uint16_t b) { return deadline_precedes(b, a) ? b : a; }

}  // namespace spikenet
