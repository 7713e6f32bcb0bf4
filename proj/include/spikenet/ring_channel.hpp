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
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikenet/util.hpp"

namespace spikenet {

enum class NotificationKind : uint8_t { DataWritten, DataConsumed };

/// One-way message between the ring producer and consumer announcing how
/// many bytes were written to or processed from memory. Modeled as a
/// fixed-latency ordered channel.
struct Notification {
    NotificationKind kind;
    uint32_t amount;       // bytes, > 0
    uint64_t issue_cycle;  // unbounded cycle count
};

enum class PutStatus : uint8_t { Accepted, Stalled };

enum class RingFault : uint8_t {
    PayloadTooLarge,  // put larger than the whole ring
    OverCredit,       // crediting more than was consumed; a protocol bug
    BadConfig,        // size not a nonzero power of two
};

class RingError : public std::runtime_error {
public:
    RingError(RingFault fault, const std::string& what)
        : std::runtime_error(what), fault_(fault) {}

    RingFault fault() const { return fault_; }

private:
    RingFault fault_;
};

/// Producer-to-host ring buffer with credit-based flow control. The producer
/// tracks free space locally through a write pointer and a space register,
/// replenished by consumed-data notifications, so a put that fits completes
/// without any handshake round trip. Insufficient space stalls the put (no
/// side effects); loss is impossible by construction.
///
/// Exactly one producer endpoint and one consumer endpoint; each endpoint's
/// operations are sequential.
class RingChannel {
public:
    struct Config {
        uint32_t size = 65536;             // bytes, power of two
        uint32_t notification_latency = 0; // cycles, each direction
        uint32_t notification_batch = 1;   // bytes accumulated before a
                                           // DataWritten is issued
    };

    struct Stats {
        uint64_t puts_accepted = 0;
        uint64_t puts_stalled = 0;
        uint64_t bytes_written = 0;
        uint64_t bytes_delivered = 0;
        uint32_t occupancy_high_water = 0;  // max bytes outstanding (size - space)
    };

    explicit RingChannel(Config cfg) : cfg_(cfg), buffer_(cfg.size), space_(cfg.size) {
        if (cfg.size == 0 || (cfg.size & (cfg.size - 1)) != 0)
            throw RingError(RingFault::BadConfig,
                            "ring size " + std::to_string(cfg.size) + " is not a power of two");
        if (cfg.notification_batch == 0)
            throw RingError(RingFault::BadConfig, "notification_batch must be at least 1");
    }

    /// Copies the payload into the ring if the space register covers it,
    /// splitting across the wrap boundary when needed, and announces the
    /// write. Returns Stalled (no side effects) when space is insufficient;
    /// the producer retries later.
    PutStatus producer_put(std::span<const uint8_t> payload, uint64_t now) {
        if (payload.size() > cfg_.size)
            throw RingError(RingFault::PayloadTooLarge,
                            "payload of " + std::to_string(payload.size()) +
                                " bytes exceeds ring size " + std::to_string(cfg_.size));
        absorb_credits(now);
        const uint32_t len = static_cast<uint32_t>(payload.size());
        if (len == 0) return PutStatus::Accepted;
        if (space_ < len) {
            ++stats_.puts_stalled;
            return PutStatus::Stalled;
        }
        const uint32_t first = std::min(len, cfg_.size - write_ptr_);
        std::copy_n(payload.begin(), first, buffer_.begin() + write_ptr_);
        std::copy_n(payload.begin() + first, len - first, buffer_.begin());
        write_ptr_ = (write_ptr_ + len) & (cfg_.size - 1);
        space_ -= len;
        ++stats_.puts_accepted;
        stats_.bytes_written += len;
        stats_.occupancy_high_water = std::max(stats_.occupancy_high_water, cfg_.size - space_);

        pending_written_ += len;
        if (pending_written_ >= cfg_.notification_batch) flush_notifications(now);
        return PutStatus::Accepted;
    }

    /// Emits any batched DataWritten notification immediately.
    void flush_notifications(uint64_t now) {
        if (pending_written_ == 0) return;
        to_consumer_.push_back({NotificationKind::DataWritten, pending_written_, now});
        pending_written_ = 0;
    }

    /// Lets the producer absorb matured credit notifications without putting.
    void producer_sync(uint64_t now) { absorb_credits(now); }

    /// Delivers every byte whose DataWritten notification has arrived
    /// (issue + latency <= now), in write order. May be empty.
    std::vector<uint8_t> consumer_poll(uint64_t now) {
        uint32_t total = 0;
        while (!to_consumer_.empty() &&
               to_consumer_.front().issue_cycle + cfg_.notification_latency <= now) {
            total += to_consumer_.front().amount;
            to_consumer_.pop_front();
        }
        std::vector<uint8_t> out(total);
        const uint32_t first = std::min(total, cfg_.size - read_ptr_);
        std::copy_n(buffer_.begin() + read_ptr_, first, out.begin());
        std::copy_n(buffer_.begin(), total - first, out.begin() + first);
        read_ptr_ = (read_ptr_ + total) & (cfg_.size - 1);
        delivered_uncredited_ += total;
        stats_.bytes_delivered += total;
        return out;
    }

    /// Returns credit for processed bytes. After the notification latency the
    /// producer's space register grows by the amount. Crediting more than was
    /// delivered is a hard protocol error.
    void consumer_credit(uint32_t amount, uint64_t now) {
        if (amount == 0) return;
        if (amount > delivered_uncredited_)
            throw RingError(RingFault::OverCredit,
                            "credit of " + std::to_string(amount) + " bytes exceeds the " +
                                std::to_string(delivered_uncredited_) + " consumed and uncredited");
        delivered_uncredited_ -= amount;
        to_producer_.push_back({NotificationKind::DataConsumed, amount, now});
    }

    uint32_t size() const { return cfg_.size; }
    uint32_t space() const { return space_; }
    uint32_t write_ptr() const { return write_ptr_; }
    uint32_t read_ptr() const { return read_ptr_; }
    uint32_t delivered_uncredited() const { return delivered_uncredited_; }
    const Stats& stats() const { return stats_; }

    /// Credit conservation: every byte missing from the space register is
    /// accounted for somewhere on the round trip — batched, announced but
    /// unpolled, consumed but uncredited, or riding a credit notification.
    /// Exposed for tests.
    bool credit_accounting_holds() const {
        uint64_t notified_unpolled = 0;
        for (const Notification& n : to_consumer_) notified_unpolled += n.amount;
        uint64_t inflight_credits = 0;
        for (const Notification& n : to_producer_) inflight_credits += n.amount;
        return static_cast<uint64_t>(cfg_.size - space_) ==
               pending_written_ + notified_unpolled + delivered_uncredited_ + inflight_credits;
    }

private:
    void absorb_credits(uint64_t now) {
        while (!to_producer_.empty() &&
               to_producer_.front().issue_cycle + cfg_.notification_latency <= now) {
            space_ += to_producer_.front().amount;
            SPIKENET_CHECK(space_ <= cfg_.size, "space register overran ring size");
            to_producer_.pop_front();
        }
    }

    Config cfg_;
    std::vector<uint8_t> buffer_;
    uint32_t space_;
    uint32_t write_ptr_ = 0;
    uint32_t read_ptr_ = 0;
    uint32_t delivered_uncredited_ = 0;
    uint32_t pending_written_ = 0;
    std::deque<Notification> to_consumer_;
    std::deque<Notification> to_producer_;
    Stats stats_;
};

}  // namespace spikenet
