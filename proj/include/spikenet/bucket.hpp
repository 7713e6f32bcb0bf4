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

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "spikenet/event.hpp"

namespace spikenet {

/// Why a bucket's contents were handed to the packetizer.
enum class FlushTrigger : uint8_t {
    DeadlineExceeded,  // the most urgent buffered deadline passed
    BucketFull,        // fill counter reached capacity
    Evicted,           // bucket reassigned to a new destination under pressure
    External,          // requested by outside logic
};

inline constexpr std::array<FlushTrigger, 4> kAllFlushTriggers = {
    FlushTrigger::DeadlineExceeded, FlushTrigger::BucketFull, FlushTrigger::Evicted,
    FlushTrigger::External};

inline const char* to_string(FlushTrigger t) {
    switch (t) {
        case FlushTrigger::DeadlineExceeded: return "deadline";
        case FlushTrigger::BucketFull: return "full";
        case FlushTrigger::Evicted: return "evicted";
        case FlushTrigger::External: return "external";
    }
    return "?";
}

/// One flushed batch: everything the bucket's filling half held when the
/// flush was initiated, in arrival order, all for one destination.
struct FlushRecord {
    NetworkAddress dest;
    std::vector<WireEvent> events;
    FlushTrigger trigger = FlushTrigger::External;
    uint64_t flush_cycle = 0;

    friend bool operator==(const FlushRecord&, const FlushRecord&) = default;
};

struct BucketConfig {
    uint32_t pool_size = 8;   // physical buckets
    uint32_t capacity = 124;  // events per bucket
    uint32_t drain_rate = 4;  // events shifted out per cycle while draining

    void validate() const {
        SPIKENET_CHECK(pool_size >= 1, "bucket pool must not be empty");
        SPIKENET_CHECK(capacity >= 1, "bucket capacity must be at least 1");
        SPIKENET_CHECK(drain_rate >= 1, "drain rate must be at least 1");
    }
};

/// Destination-keyed aggregation of events into packet-sized batches.
///
/// A small pool of physical buckets is renamed onto the 2^16 possible
/// destinations through a map table and a free-bucket list. Each bucket runs
/// two counters so it can flush and fill concurrently: a flush swaps the
/// counters, the old contents shift out at drain_rate per cycle, and events
/// arriving meanwhile accumulate under the fresh fill counter for the next
/// record. An arbiter picks the most urgent filling bucket when one has to
/// be evicted for a new destination.
///
/// Flushes are triggered by deadline expiry, a full bucket, eviction, or an
/// external request. Events that can momentarily not be placed (their bucket
/// is saturated mid-drain, or every bucket is draining) wait in arrival
/// order in a stall queue; submission order per destination is preserved
/// end to end.
///
/// Single-owner state machine: all calls come from one logical driver.
class BucketManager {
public:
    struct Stats {
        std::array<uint64_t, 4> flushes_by_trigger{};  // indexed by FlushTrigger
        std::vector<uint64_t> record_size_hist;        // index = events per record
        uint64_t events_submitted = 0;
        uint64_t events_flushed = 0;
        uint64_t stalled_submits = 0;  // events that had to wait in the queue

        uint64_t total_flushes() const {
            uint64_t n = 0;
            for (uint64_t c : flushes_by_trigger) n += c;
            return n;
        }
    };

    enum class BucketState : uint8_t { Idle, Filling, Draining };

    /// Read-only view of one physical bucket, for tests and diagnostics.
    struct BucketView {
        BucketState state;
        NetworkAddress dest;       // meaningful unless Idle
        uint32_t fill_counter;
        uint32_t drain_counter;
        std::optional<uint16_t> most_urgent;  // over all buffered events
    };

    explicit BucketManager(BucketConfig cfg) : cfg_(cfg), buckets_(cfg.pool_size) {
        cfg_.validate();
        stats_.record_size_hist.assign(cfg_.capacity + 1, 0);
        for (uint32_t i = 0; i < cfg_.pool_size; ++i) free_.push_back(i);
    }

    /// Accepts one routed event. Returns every flush this submission set off
    /// (bucket-full, or an eviction to make room), in initiation order.
    std::vector<FlushRecord> submit(const RoutedEvent& ev, uint64_t now) {
        ++stats_.events_submitted;
        queue_.push_back(ev);
        std::vector<FlushRecord> records;
        place_queued(now, records);
        return records;
    }

    /// Advances one cycle: shifts draining buckets along, retires finished
    /// drains (freeing the bucket or returning it to filling), places stalled
    /// events, then flushes every filling bucket whose most urgent deadline
    /// is exceeded. Call once per cycle with non-decreasing `now`.
    std::vector<FlushRecord> tick(uint64_t now) {
        std::vector<FlushRecord> records;
        advance_drains();
        place_queued(now, records);
        const uint16_t ts_now = timestamp_of_clock(now);
        for (uint32_t i = 0; i < buckets_.size(); ++i) {
            Bucket& b = buckets_[i];
            if (b.state == BucketState::Filling && deadline_exceeded(b.fill_urgent, ts_now))
                start_flush(i, FlushTrigger::DeadlineExceeded, now, records);
        }
        return records;
    }

    /// Flush requested by external logic for one destination. No-op when the
    /// destination is unmapped, empty, or already draining (its events then
    /// leave with the next trigger instead).
    std::optional<FlushRecord> external_flush(NetworkAddress dest, uint64_t now) {
        auto it = map_.find(dest.value);
        if (it == map_.end()) return std::nullopt;
        Bucket& b = buckets_[it->second];
        if (b.state != BucketState::Filling) return std::nullopt;
        std::vector<FlushRecord> records;
        start_flush(it->second, FlushTrigger::External, now, records);
        return records.front();
    }

    /// Sweep-all convenience built on the per-destination flush.
    std::vector<FlushRecord> flush_all(uint64_t now) {
        std::vector<FlushRecord> records;
        for (uint32_t i = 0; i < buckets_.size(); ++i)
            if (buckets_[i].state == BucketState::Filling)
                start_flush(i, FlushTrigger::External, now, records);
        return records;
    }

    /// Index of the most urgent filling bucket (minimal deadline under the
    /// wrap-around order; ties go to the lowest index). Error if no bucket is
    /// eligible.
    uint32_t arbiter_select() const {
        std::optional<uint32_t> best;
        for (uint32_t i = 0; i < buckets_.size(); ++i) {
            const Bucket& b = buckets_[i];
            if (b.state != BucketState::Filling) continue;
            if (!best || deadline_precedes(b.fill_urgent, buckets_[*best].fill_urgent)) best = i;
        }
        SPIKENET_CHECK(best.has_value(), "arbiter called with no filling bucket");
        return *best;
    }

    bool has_filling_bucket() const {
        for (const Bucket& b : buckets_)
            if (b.state == BucketState::Filling) return true;
        return false;
    }

    // --- introspection -----------------------------------------------------

    uint32_t pool_size() const { return cfg_.pool_size; }
    uint32_t capacity() const { return cfg_.capacity; }
    uint32_t drain_rate() const { return cfg_.drain_rate; }
    std::size_t mapped_count() const { return map_.size(); }
    std::size_t free_count() const { return free_.size(); }
    std::size_t queued_count() const { return queue_.size(); }

    /// Events currently buffered in buckets (both halves), stall queue
    /// excluded.
    std::size_t buffered_count() const {
        std::size_t n = 0;
        for (const Bucket& b : buckets_) n += b.slots.size();
        return n;
    }

    BucketView view(uint32_t index) const {
        const Bucket& b = buckets_.at(index);
        BucketView v{b.state, b.dest, b.fill, b.drain, std::nullopt};
        if (!b.slots.empty()) {
            uint16_t m = b.slots.front().timestamp;
            for (const WireEvent& e : b.slots) m = deadline_min(m, e.timestamp);
            v.most_urgent = m;
        }
        return v;
    }

    std::optional<uint32_t> bucket_of(NetworkAddress dest) const {
        auto it = map_.find(dest.value);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    const Stats& stats() const { return stats_; }

    /// Pool bookkeeping soundness: the map table and free list partition the
    /// physical buckets and no two mapped entries share a destination (the
    /// map key guarantees the latter).
    bool renaming_sound() const { return map_.size() + free_.size() == buckets_.size(); }

private:
    struct Bucket {
        BucketState state = BucketState::Idle;
        NetworkAddress dest;
        // Draining-half events at the front (drain of them left), filling-half
        // events at the back (fill of them).
        std::deque<WireEvent> slots;
        uint32_t fill = 0;
        uint32_t drain = 0;
        uint16_t fill_urgent = 0;  // deadline_order minimum of the filling half
    };

    void append(Bucket& b, const RoutedEvent& ev) {
        SPIKENET_CHECK(b.fill + b.drain < cfg_.capacity, "append to a saturated bucket");
        b.slots.push_back(WireEvent{ev.guid, ev.timestamp});
        b.fill_urgent = (b.fill == 0) ? ev.timestamp : deadline_min(b.fill_urgent, ev.timestamp);
        ++b.fill;
    }

    /// Counter swap: the filling half becomes the draining half and is
    /// captured as a record; events arriving from now on belong to the next
    /// record. Only a filling bucket can initiate.
    void start_flush(uint32_t index, FlushTrigger trigger, uint64_t now,
                     std::vector<FlushRecord>& records) {
        Bucket& b = buckets_[index];
        SPIKENET_CHECK(b.state == BucketState::Filling && b.fill > 0,
                       "flush initiated on a bucket that is not filling");
        FlushRecord rec;
        rec.dest = b.dest;
        rec.trigger = trigger;
        rec.flush_cycle = now;
        rec.events.assign(b.slots.begin(), b.slots.end());
        records.push_back(std::move(rec));

        b.drain = b.fill;
        b.fill = 0;
        b.state = BucketState::Draining;

        ++stats_.flushes_by_trigger[static_cast<std::size_t>(trigger)];
        ++stats_.record_size_hist[b.drain];
        stats_.events_flushed += b.drain;
    }

    void advance_drains() {
        for (uint32_t i = 0; i < buckets_.size(); ++i) {
            Bucket& b = buckets_[i];
            if (b.state != BucketState::Draining) continue;
            const uint32_t shift = std::min(cfg_.drain_rate, b.drain);
            for (uint32_t k = 0; k < shift; ++k) b.slots.pop_front();
            b.drain -= shift;
            if (b.drain > 0) continue;
            if (b.fill > 0) {
                b.state = BucketState::Filling;
                // fill_urgent was maintained while the new half accumulated.
            } else {
                b.state = BucketState::Idle;
                map_.erase(b.dest.value);
                free_.push_back(i);
            }
        }
    }

    /// Places stalled events head first; stops at the first one that cannot
    /// go anywhere yet.
    void place_queued(uint64_t now, std::vector<FlushRecord>& records) {
        while (!queue_.empty()) {
            if (!try_place(queue_.front(), now, records)) {
                ++stats_.stalled_submits;
                return;
            }
            queue_.pop_front();
        }
    }

    bool try_place(const RoutedEvent& ev, uint64_t now, std::vector<FlushRecord>& records) {
        auto it = map_.find(ev.dest.value);
        if (it != map_.end()) {
            Bucket& b = buckets_[it->second];
            SPIKENET_CHECK(b.state != BucketState::Idle, "mapped bucket cannot be idle");
            if (b.fill + b.drain == cfg_.capacity) return false;  // saturated mid-drain
            append(b, ev);
            if (b.fill == cfg_.capacity) start_flush(it->second, FlushTrigger::BucketFull, now, records);
            return true;
        }
        if (!free_.empty()) {
            const uint32_t index = free_.front();
            free_.pop_front();
            Bucket& b = buckets_[index];
            SPIKENET_CHECK(b.state == BucketState::Idle && b.slots.empty(), "free bucket not idle");
            map_.emplace(ev.dest.value, index);
            b.dest = ev.dest;
            b.state = BucketState::Filling;
            append(b, ev);
            if (b.fill == cfg_.capacity) start_flush(index, FlushTrigger::BucketFull, now, records);
            return true;
        }
        if (has_filling_bucket()) {
            // No bucket free: flush the most urgent one and rename it to the
            // new destination right away. The old contents keep draining as
            // that record; the new destination fills concurrently.
            const uint32_t index = arbiter_select();
            Bucket& b = buckets_[index];
            start_flush(index, FlushTrigger::Evicted, now, records);
            map_.erase(b.dest.value);
            map_.emplace(ev.dest.value, index);
            b.dest = ev.dest;
            append(b, ev);
            return true;
        }
        return false;  // every bucket is draining; wait for a drain to finish
    }

    BucketConfig cfg_;
    std::vector<Bucket> buckets_;
    std::unordered_map<uint16_t, uint32_t> map_;  // destination -> bucket index
    std::deque<uint32_t> free_;                   // FIFO of idle bucket indices
    std::deque<RoutedEvent> queue_;               // events awaiting placement
    Stats stats_;
};

}  // namespace spikenet
