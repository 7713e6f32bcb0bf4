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
#include <stdexcept>
#include <string>

namespace spikenet {

/// Thrown when an internal invariant is violated. Reaching this is a bug in
/// the library, never a reaction to bad user input; the CLI maps it to exit
/// code 2.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

[[noreturn]] inline void invariant_failure(const char* expr, const char* msg,
                                           const char* file, int line) {
    throw InvariantViolation(std::string("invariant violated: ") + expr + " (" + msg + ") at " +
                             file + ":" + std::to_string(line));
}

}  // namespace detail

#define SPIKENET_CHECK(cond, msg) \
    ((cond) ? void(0) : ::spikenet::detail::invariant_failure(#cond, (msg), __FILE__, __LINE__))

/// Deterministic 64-bit generator (splitmix64 core). Used instead of the
/// standard distributions so identical seeds give identical traffic on every
/// platform and standard library.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, n). n must be nonzero.
    uint64_t below(uint64_t n) {
        // Multiply-shift bound; bias is negligible for the ranges used here
        // and the result is platform independent.
        return static_cast<uint64_t>((static_cast<__uint128_t>(next()) * n) >> 64);
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) {
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return uniform01() < p;
    }

private:
    uint64_t state_;
};

/// Mixes a stream index into a base seed so per-component generators are
/// decorrelated but reproducible.
inline uint64_t seed_stream(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL));
    return r.next();
}

}  // namespace spikenet
