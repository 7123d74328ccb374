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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsr/mdp.hpp"

namespace dsr {

/// n-step expected costs v^n(s) for n = 1..horizon.
struct ValueTable {
    int horizon = 0;
    std::vector<std::vector<double>> stages;  // stages[n - 1][state]

    double value(std::size_t state, int n) const { return stages.at(static_cast<std::size_t>(n - 1)).at(state); }
};

/// Stage-indexed deterministic policy: the action may depend on the number of
/// remaining steps. Entries are indices into MdpModel::state(s).actions.
struct Policy {
    int horizon = 0;
    std::vector<std::vector<std::uint32_t>> stages;  // stages[n - 1][state]
    bool optimal = false;

    std::uint32_t action_index(std::size_t state, int n) const {
        return stages.at(static_cast<std::size_t>(n - 1)).at(state);
    }
    const ActionSet& action(const MdpModel& model, std::size_t state, int n) const {
        return model.state(state).actions.at(action_index(state, n)).action;
    }
};

struct SolveResult {
    ValueTable values;
    Policy policy;
};

/// Ties in the argmin closer than this are broken by tie_order_less.
inline constexpr double kTieTolerance = 1e-9;

/// Backward induction on the per-state cost of the model.
SolveResult solve(const MdpModel& model, int horizon);

/// Backward induction with a caller-supplied state cost (same tie rule).
SolveResult solve_with_cost(const MdpModel& model, int horizon, const std::vector<double>& cost);

/// Value of a fixed policy; throws std::invalid_argument when the policy is
/// shorter than the horizon or does not cover every state.
ValueTable evaluate_policy(const MdpModel& model, const Policy& policy, int horizon);

/// Builds a policy that applies the same action at every stage. `choose`
/// returning nullopt for any state is an error ("policy missing state ...").
Policy make_stationary_policy(const MdpModel& model, int horizon,
                              const std::function<std::optional<ActionSet>(std::size_t, const StateEntry&)>& choose);

/// v / N: average expected time to energize a bus.
double average_restoration_time(double value, int bus_count);

/// Stage consulted after `step` completed steps. Steps past the horizon reuse
/// the last stage that still looks one step ahead.
int stage_for_step(int horizon, int step);

/// Actions along the trajectory where every attempted branch energizes (the
/// most likely outcome when that is impossible), until the empty action.
std::vector<ActionSet> nominal_sequence(const MdpModel& model, const Policy& policy, std::size_t start = 0);

/// Policy export: canonical state string -> {action, value, stage}.
std::string export_policy_json(const MdpModel& model, const SolveResult& result);

}  // namespace dsr
