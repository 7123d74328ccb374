// Copyright 2026 The dsrestore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace dsr {

// Bus, branch and DER ids are 1-based and contiguous, as they appear in the
// network file. Internal vectors are 0-based: element i holds id i + 1.

struct Bus {
    int id = 0;
    double load_p = 0.0;  // kW
    double load_q = 0.0;  // kVAr
    bool is_grid_tie = false;

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double resistance = 0.0;  // ohm
    double reactance = 0.0;   // ohm

    bool operator==(const Branch&) const = default;
};

struct Der {
    int id = 0;
    int bus = 0;
    double capacity_p = 0.0;  // kW

    bool operator==(const Der&) const = default;
};

/// Per-unit base of the single-phase equivalent.
struct SystemBase {
    double kv = 12.47;
    double kva = 1000.0;

    double impedance_ohm() const { return kv * kv * 1000.0 / kva; }
    bool operator==(const SystemBase&) const = default;
};

enum class Topology {
    radial,       // connected tree, L = N - 1
    allow_loops,  // connected, loops permitted (loop-constraint fixtures only)
};

/// Immutable distribution-network description plus precomputed adjacency.
class Network {
  public:
    /// Validates all invariants; throws ValidationError naming the first violation.
    static Network create(std::vector<Bus> buses, std::vector<Branch> branches, std::vector<Der> ders,
                          SystemBase base = {}, Topology topology = Topology::radial);

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int branch_count() const { return static_cast<int>(branches_.size()); }
    int der_count() const { return static_cast<int>(ders_.size()); }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<Der>& ders() const { return ders_; }
    const SystemBase& base() const { return base_; }
    Topology topology() const { return topology_; }

    const Bus& bus(int id) const { return buses_.at(static_cast<std::size_t>(id - 1)); }
    const Branch& branch(int id) const { return branches_.at(static_cast<std::size_t>(id - 1)); }
    const Der& der(int id) const { return ders_.at(static_cast<std::size_t>(id - 1)); }

    int grid_bus() const { return grid_bus_; }
    /// DER id hosted at a bus, 0 when none.
    int der_at(int bus_id) const { return der_at_bus_[static_cast<std::size_t>(bus_id - 1)]; }
    /// Branch ids incident to a bus, ascending.
    const std::vector<int>& incident(int bus_id) const {
        return incident_[static_cast<std::size_t>(bus_id - 1)];
    }
    /// Branch ids sharing an endpoint with branch `id`, ascending.
    const std::vector<int>& neighbors(int branch_id) const {
        return neighbors_[static_cast<std::size_t>(branch_id - 1)];
    }
    /// Branch impedance in per-unit of base().
    std::complex<double> impedance_pu(int branch_id) const;
    double total_load() const;

    bool operator==(const Network& other) const {
        return buses_ == other.buses_ && branches_ == other.branches_ && ders_ == other.ders_ &&
               base_ == other.base_;
    }

  private:
    Network() = default;

    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<Der> ders_;
    SystemBase base_;
    Topology topology_ = Topology::radial;

    int grid_bus_ = 0;
    std::vector<int> der_at_bus_;
    std::vector<std::vector<int>> incident_;
    std::vector<std::vector<int>> neighbors_;
};

/// Parses and validates a network document (JSON, see README for the schema).
Network load_network(std::istream& source);
Network load_network_file(const std::string& path);
/// Writes a document that load_network reads back to an equal Network.
std::string serialize_network(const Network& net);

/// kW rating of a DER given as a bus count: it supplies its host bus plus
/// `bus_count` further buses of `per_bus_load`.
double der_capacity_from_bus_count(double bus_count, double per_bus_load);

/// B(i): branches sharing an endpoint with branch i, excluding i.
std::vector<int> branch_neighbors(const Network& net, int branch_id);

/// En: branches incident to the grid-tie bus or to any DER bus.
std::vector<int> source_branches(const Network& net);

}  // namespace dsr
