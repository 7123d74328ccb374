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

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dsr/fragility.hpp"
#include "dsr/network.hpp"

namespace dsr::testing {

std::string fixture_path(const std::string& name);
std::shared_ptr<const Network> load_fixture(const std::string& name);

/// Six-bus feeder: grid at bus 1, DER 1 at bus 6, five zero-impedance branches.
std::shared_ptr<const Network> six_bus();

struct RandomNetworkOptions {
    int min_branches = 1;
    int max_branches = 8;
    int max_ders = 2;
    double load_p = 100.0;
    /// DER capacity in bus loads is drawn from [1, max_der_buses].
    int max_der_buses = 4;
    /// Branch impedance in ohm drawn from [0, max_ohm].
    double max_ohm = 0.0;
};

/// Random radial network (random recursive tree) with the grid at bus 1.
std::shared_ptr<const Network> random_network(std::mt19937_64& rng, const RandomNetworkOptions& options);

/// Every labeled tree on n buses, from Prüfer sequences; edges as (from, to).
std::vector<std::vector<std::pair<int, int>>> all_labeled_trees(int n);

/// Network from an edge list with uniform load, grid at bus 1 and DERs at `der_buses`.
std::shared_ptr<const Network> network_from_edges(const std::vector<std::pair<int, int>>& edges,
                                                  const std::vector<int>& der_buses, double der_capacity,
                                                  double load_p = 100.0, double ohm = 0.0);

PfAssignment random_pf(std::mt19937_64& rng, const Network& net, const std::vector<double>& choices);

}  // namespace dsr::testing
