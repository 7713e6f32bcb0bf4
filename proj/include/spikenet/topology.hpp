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
#include <vector>

#include "spikenet/event.hpp"
#include "spikenet/torus.hpp"

namespace spikenet {

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Static description of the machine: a 3D torus of network nodes, some of
/// which act as concentrators with FPGA leaves hanging off an aggregated
/// fan-in link; each FPGA serves its local neuromorphic chip links and one
/// host ring channel per wafer module.
///
/// Torus nodes take network addresses 0 .. node_count-1 in index order
/// (consecutive along X first); FPGA endpoints continue at node_count.
struct TopologySpec {
    TorusDims torus{1, 1, 2};

    uint32_t wafers = 1;
    uint32_t fpgas_per_wafer = 48;
    uint32_t concentrators_per_wafer = 8;
    uint32_t fpgas_per_concentrator = 6;
    uint32_t hicanns_per_fpga = 8;

    double link_bandwidth_bps = 12 * 8.4e9;    // torus link, 12 lanes
    double hicann_link_bandwidth_bps = 1e9;    // chip-to-FPGA serial link
    uint32_t nic_links = 7;                    // ports available per network node

    double frequency_hz = 210e6;               // FPGA clock; 1 cycle = 1/frequency
    double fpga_port_words_per_cycle = 1.0;    // FPGA egress/ingress serialization
    uint32_t hop_latency = 20;                 // cycles of pipeline delay per link

    /// Optional placement override: concentrator i sits at placement[i].
    /// Default is torus node index i.
    std::vector<TorusCoord> concentrator_placement;

    uint32_t concentrator_count() const { return wafers * concentrators_per_wafer; }
    uint32_t fpga_count() const { return concentrator_count() * fpgas_per_concentrator; }

    /// Torus link rate in 128-bit words per FPGA clock cycle.
    double torus_words_per_cycle() const { return link_bandwidth_bps / frequency_hz / 128.0; }

    NetworkAddress fpga_address(uint32_t fpga_index) const {
        const uint64_t addr = static_cast<uint64_t>(torus.node_count()) + fpga_index;
        SPIKENET_CHECK(addr < (1ull << kNetworkAddressBits), "fpga address out of 16-bit space");
        return NetworkAddress{static_cast<uint16_t>(addr)};
    }

    void validate() const {
        if (torus.x == 0 || torus.y == 0 || torus.z == 0)
            throw TopologyError("torus dimensions must be nonzero");
        if (fpgas_per_concentrator * concentrators_per_wafer != fpgas_per_wafer)
            throw TopologyError(
                "fpgas_per_concentrator x concentrators_per_wafer must equal fpgas_per_wafer (" +
                std::to_string(fpgas_per_concentrator) + " x " +
                std::to_string(concentrators_per_wafer) +
                " != " + std::to_string(fpgas_per_wafer) + ")");
        if (hicanns_per_fpga == 0 || hicanns_per_fpga > kHicannLinksPerFpgaLimit)
            throw TopologyError("hicanns_per_fpga must be in 1..8");
        if (concentrator_count() > torus.node_count())
            throw TopologyError(std::to_string(concentrator_count()) +
                                " concentrators do not fit in a torus of " +
                                std::to_string(torus.node_count()) + " nodes");
        const uint64_t addresses =
            static_cast<uint64_t>(torus.node_count()) + static_cast<uint64_t>(fpga_count());
        if (addresses > (1ull << kNetworkAddressBits))
            throw TopologyError("address exhaustion: " + std::to_string(addresses) +
                                " endpoints exceed the 16-bit address space");
        // Every node uses 6 torus ports; a concentrator adds one aggregated
        // fan-in port for its FPGAs.
        if (nic_links < 7)
            throw TopologyError("node degree violation: 6 torus links plus the FPGA fan-in "
                                "need 7 ports, nic_links is " +
                                std::to_string(nic_links));
        if (!concentrator_placement.empty()) {
            if (concentrator_placement.size() != concentrator_count())
                throw TopologyError("concentrator placement list must cover all " +
                                    std::to_string(concentrator_count()) + " concentrators");
            std::vector<bool> used(torus.node_count(), false);
            for (const TorusCoord& c : concentrator_placement) {
                if (c.x >= torus.x || c.y >= torus.y || c.z >= torus.z)
                    throw TopologyError("concentrator placement out of torus bounds");
                uint32_t idx = node_index(c, torus);
                if (used[idx]) throw TopologyError("two concentrators placed on one node");
                used[idx] = true;
            }
        }
        if (frequency_hz <= 0 || link_bandwidth_bps <= 0 || fpga_port_words_per_cycle <= 0)
            throw TopologyError("rates must be positive");
    }

    /// Torus node index hosting concentrator `c` (after validate()).
    uint32_t concentrator_node(uint32_t c) const {
        if (!concentrator_placement.empty()) return node_index(concentrator_placement[c], torus);
        return c;
    }

private:
    static constexpr uint32_t kHicannLinksPerFpgaLimit = 8;
};

}  // namespace spikenet
