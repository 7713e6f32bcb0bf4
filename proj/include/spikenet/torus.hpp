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
#include <optional>
#include <vector>

#include "spikenet/util.hpp"

namespace spikenet {

struct TorusDims {
    uint16_t x = 1, y = 1, z = 1;

    uint32_t node_count() const {
        return static_cast<uint32_t>(x) * static_cast<uint32_t>(y) * static_cast<uint32_t>(z);
    }
    uint16_t operator[](unsigned dim) const { return dim == 0 ? x : dim == 1 ? y : z; }

    friend bool operator==(const TorusDims&, const TorusDims&) = default;
};

struct TorusCoord {
    uint16_t x = 0, y = 0, z = 0;

    uint16_t operator[](unsigned dim) const { return dim == 0 ? x : dim == 1 ? y : z; }
    void set(unsigned dim, uint16_t v) { (dim == 0 ? x : dim == 1 ? y : z) = v; }

    friend bool operator==(const TorusCoord&, const TorusCoord&) = default;
};

/// Node ids walk x fastest, then y, then z, so consecutive ids run along X.
inline uint32_t node_index(TorusCoord c, TorusDims d) {
    SPIKENET_CHECK(c.x < d.x && c.y < d.y && c.z < d.z, "coordinate out of bounds");
    return c.x + static_cast<uint32_t>(d.x) * (c.y + static_cast<uint32_t>(d.y) * c.z);
}

inline TorusCoord coord_of_index(uint32_t idx, TorusDims d) {
    SPIKENET_CHECK(idx < d.node_count(), "node index out of bounds");
    TorusCoord c;
    c.x = static_cast<uint16_t>(idx % d.x);
    c.y = static_cast<uint16_t>((idx / d.x) % d.y);
    c.z = static_cast<uint16_t>(idx / (static_cast<uint32_t>(d.x) * d.y));
    return c;
}

/// One routing step: which dimension, which direction (+1 or -1 with wrap),
/// and the coordinate reached.
struct TorusHop {
    uint8_t dim = 0;
    int8_t dir = 0;
    TorusCoord to;

    friend bool operator==(const TorusHop&, const TorusHop&) = default;
};

/// Dimension-order next hop: correct X fully first, then Y, then Z, taking
/// the shorter wrap direction and breaking ties toward increasing index.
/// Returns nothing when already at the destination.
inline std::optional<TorusHop> torus_next_hop(TorusCoord cur, TorusCoord dst, TorusDims dims) {
    for (uint8_t dim = 0; dim < 3; ++dim) {
        const uint16_t size = dims[dim];
        const uint16_t a = cur[dim];
        const uint16_t b = dst[dim];
        if (a == b) continue;
        const uint16_t fwd = static_cast<uint16_t>((b + size - a) % size);
        const uint16_t bwd = static_cast<uint16_t>((a + size - b) % size);
        const int8_t dir = (fwd <= bwd) ? int8_t{1} : int8_t{-1};
        TorusCoord next = cur;
        next.set(dim, static_cast<uint16_t>((a + size + dir) % size));
        return TorusHop{dim, dir, next};
    }
    return std::nullopt;
}

/// Full dimension-order path. Deterministic; length equals the sum over
/// dimensions of the shorter ring distance.
inline std::vector<TorusHop> torus_route(TorusCoord src, TorusCoord dst, TorusDims dims) {
    SPIKENET_CHECK(src.x < dims.x && src.y < dims.y && src.z < dims.z, "src out of bounds");
    SPIKENET_CHECK(dst.x < dims.x && dst.y < dims.y && dst.z < dims.z, "dst out of bounds");
    std::vector<TorusHop> path;
    TorusCoord cur = src;
    while (auto hop = torus_next_hop(cur, dst, dims)) {
        path.push_back(*hop);
        cur = hop->to;
    }
    return path;
}

/// Shortest-path distance on the torus: per dimension the shorter of the two
/// ring directions.
inline uint32_t torus_distance(TorusCoord src, TorusCoord dst, TorusDims dims) {
    uint32_t total = 0;
    for (unsigned dim = 0; dim < 3; ++dim) {
        const uint16_t size = dims[dim];
        const uint16_t fwd = static_cast<uint16_t>((dst[dim] + size - src[dim]) % size);
        const uint16_t bwd = static_cast<uint16_t>((src[dim] + size - dst[dim]) % size);
        total += std::min(fwd, bwd);
    }
    return total;
}

}  // namespace spikenet
