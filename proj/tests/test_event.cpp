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

#include <doctest.h>

#include "spikenet/event.hpp"
#include "spikenet/util.hpp"

using namespace spikenet;

namespace {

// Independent serial-number oracle, parameterized over the modulus: deadline
// d is exceeded at time n iff stepping d forward by 1 .. m/2 - 1 hits n.
bool exceeded_brute(uint32_t m, uint32_t d, uint32_t n) {
    for (uint32_t k = 1; k < m / 2; ++k)
        if ((d + k) % m == n) return true;
    return false;
}

// The implementation's arithmetic, re-expressed for an arbitrary modulus.
bool exceeded_formula(uint32_t m, uint32_t d, uint32_t n) {
    const uint32_t fwd = (n + m - d) % m;
    return fwd >= 1 && fwd < m / 2;
}

}  // namespace

TEST_SUITE("event") {
    TEST_CASE("timestamp projection of the unbounded clock") {
        CHECK(timestamp_of_clock(0) == 0);
        CHECK(timestamp_of_clock(32768) == 0);
        CHECK(timestamp_of_clock(100000) == 1696);  // 100000 - 3 * 32768

        Rng rng(7);
        for (int i = 0; i < 1000; ++i) {
            const uint64_t n = rng.next() >> 1;
            CHECK(timestamp_of_clock(n + kTimestampPeriod) == timestamp_of_clock(n));
        }
    }

    TEST_CASE("deadline_exceeded basics") {
        CHECK(deadline_exceeded(5, 6));
        CHECK_FALSE(deadline_exceeded(5, 5));
        CHECK_FALSE(deadline_exceeded(2, 32766));  // far in the past half-window
        CHECK(deadline_exceeded(32766, 2));        // wraps forward
        CHECK_THROWS_AS(deadline_exceeded(40000, 0), InvariantViolation);
    }

    TEST_CASE("never exceeded at equality") {
        Rng rng(11);
        for (int i = 0; i < 2000; ++i) {
            const uint16_t t = static_cast<uint16_t>(rng.below(kTimestampPeriod));
            CHECK_FALSE(deadline_exceeded(t, t));
        }
    }

    TEST_CASE("antisymmetry within the half window") {
        Rng rng(13);
        for (int i = 0; i < 5000; ++i) {
            const uint16_t d = static_cast<uint16_t>(rng.below(kTimestampPeriod));
            const uint16_t n = static_cast<uint16_t>(rng.below(kTimestampPeriod));
            const uint32_t fwd = (n + kTimestampPeriod - d) & kTimestampMask;
            if (fwd >= 1 && fwd < kTimestampHalfWindow)
                CHECK(deadline_exceeded(d, n) != deadline_exceeded(n, d));
        }
    }

    TEST_CASE("formula matches the step oracle exhaustively at modulus 32") {
        const uint32_t m = 32;
        for (uint32_t d = 0; d < m; ++d)
            for (uint32_t n = 0; n < m; ++n)
                CHECK(exceeded_formula(m, d, n) == exceeded_brute(m, d, n));
    }

    TEST_CASE("library arithmetic matches the generic formula at 2^15") {
        Rng rng(17);
        for (int i = 0; i < 20000; ++i) {
            const uint16_t d = static_cast<uint16_t>(rng.below(kTimestampPeriod));
            const uint16_t n = static_cast<uint16_t>(rng.below(kTimestampPeriod));
            CHECK(deadline_exceeded(d, n) == exceeded_formula(kTimestampPeriod, d, n));
        }
    }

    TEST_CASE("deadline ordering") {
        CHECK(deadline_compare(1, 2) == std::strong_ordering::less);
        CHECK(deadline_compare(7, 7) == std::strong_ordering::equal);
        CHECK(deadline_compare(32760, 4) == std::strong_ordering::less);  // wraps
        CHECK(deadline_compare(4, 32760) == std::strong_ordering::greater);

        CHECK(deadline_min(32760, 4) == 32760);
        CHECK(deadline_min(4, 32760) == 32760);
        CHECK(deadline_min(9, 9) == 9);
    }

    TEST_CASE("total order on windows narrower than the half period") {
        Rng rng(19);
        for (int trial = 0; trial < 200; ++trial) {
            const uint16_t base = static_cast<uint16_t>(rng.below(kTimestampPeriod));
            uint16_t ts[8];
            for (uint16_t& t : ts)
                t = static_cast<uint16_t>((base + rng.below(kTimestampHalfWindow - 1)) &
                                          kTimestampMask);
            // Transitivity over every triple in the window.
            for (const uint16_t a : ts)
                for (const uint16_t b : ts)
                    for (const uint16_t c : ts)
                        if (deadline_precedes(a, b) && deadline_precedes(b, c))
                            CHECK(deadline_precedes(a, c));
        }
    }

    TEST_CASE("system clock advances monotonically and projects down") {
        SystemClock clk;
        CHECK(clk.now == 0);
        CHECK(clk.frequency == 210e6);
        clk.advance();
        clk.advance(99999);
        CHECK(clk.now == 100000);
        CHECK(timestamp_of_clock(clk.now) == 1696);
    }

    TEST_CASE("value types stay within their declared widths") {
        SpikeEvent ev{0xfff, 0x7fff};
        CHECK(ev.pulse_address < kPulseAddressLimit);
        CHECK(ev.timestamp < kTimestampPeriod);
        Guid g{kGuidLimit - 1};
        CHECK(g.value < kGuidLimit);
    }
}
