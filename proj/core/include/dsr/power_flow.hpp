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

#include <map>
#include <vector>

#include "dsr/network.hpp"

namespace dsr {

/// Energized connected subtree fed from one slack bus.
struct Island {
    int slack_bus = 0;
    std::vector<int> buses;     // ascending, includes slack_bus
    std::vector<int> branches;  // ascending
};

struct BusVoltage {
    int bus = 0;
    double magnitude = 1.0;  // pu
    double angle = 0.0;      // rad
};

struct VoltageSolution {
    std::vector<BusVoltage> voltages;  // ordered like Island::buses
    bool converged = false;
    int iterations = 0;

    const BusVoltage& at(int bus) const;
};

struct VoltageLimits {
    double v_min = 0.95;
    double v_max = 1.05;

    /// Throws ValidationError unless 0 < v_min < 1 < v_max.
    void validate() const;
    VoltageLimits widened(double delta) const { return {v_min - delta, v_max + delta}; }
    bool operator==(const VoltageLimits&) const = default;
};

struct SweepOptions {
    double tolerance = 1e-6;  // max per-bus voltage change, pu
    int max_iterations = 100;
};

/// Backward/forward sweep on a radial island. Demand at each bus is its load
/// minus any DER injection (kW); DERs supply active power only. Slack is 1.0 pu.
/// Throws ValidationError for a non-radial or disconnected island. A solve that
/// hits the iteration cap returns converged = false.
VoltageSolution fbpf_solve(const Network& net, const Island& island, const std::map<int, double>& der_injections,
                           const SweepOptions& options = {});

/// Buses whose magnitude lies outside [v_min, v_max]. Requires a converged solution.
std::vector<int> violating_buses(const VoltageSolution& sol, const VoltageLimits& limits);

}  // namespace dsr
