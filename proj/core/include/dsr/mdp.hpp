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
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsr/fragility.hpp"
#include "dsr/network.hpp"
#include "dsr/power_flow.hpp"
#include "dsr/state.hpp"

namespace dsr {

/// Maximal connected set of energized branches and the buses they touch.
struct EnergizedComponent {
    int label = 0;               // 0 when grid-fed, else the lowest DER id inside
    bool grid_fed = false;
    bool has_loop = false;
    std::vector<int> buses;      // ascending
    std::vector<int> branches;   // ascending
    std::vector<int> ders;       // DER ids hosted on member buses, ascending
};

/// Components of the energized subgraph of `s`. Labels follow the grid-wins,
/// lowest-DER-otherwise rule; the branch labels stored in `s` are ignored.
std::vector<EnergizedComponent> energized_components(const Network& net, const SystemState& s);

/// Ā(s): unknown branches that are source branches or touch an energized branch.
std::vector<int> applicable_branches(const Network& net, const SystemState& s);

/// Post(s, a) with probabilities. Every attempted branch is damaged with pf or
/// energized with 1 - pf; energized components are then relabeled (grid wins,
/// merged DER islands take the lowest DER id). Zero-probability outcomes are
/// dropped and identical states merged. Throws std::invalid_argument when a
/// is not a subset of Ā(s).
OutcomeDistribution outcome_distribution(const Network& net, const PfAssignment& pf, const SystemState& s,
                                         const ActionSet& a);

/// Deterministic successor for an observed per-branch result (true = energized).
/// Throws std::invalid_argument unless `observed` covers exactly the attempted branches.
SystemState apply_observation(const Network& net, const SystemState& s, const ActionSet& a,
                              const std::map<int, bool>& observed);

/// T1: no two attempted branches share an endpoint.
bool check_t1(const Network& net, const ActionSet& a);
/// T2: no outcome contains a loop of energized branches.
bool check_t2(const Network& net, const OutcomeDistribution& outcomes);
/// ActBus(s, k): buses incident to a branch with status E(k).
std::vector<int> act_bus(const Network& net, const SystemState& s, int source);
/// E1: every DER-only component serves no more load than its merged DER capacity.
bool check_e1(const Network& net, const OutcomeDistribution& outcomes);

/// Memo of island load-flow results keyed by branch set. Not thread-safe.
class PowerFlowCache {
  public:
    struct Summary {
        bool converged = false;
        bool radial = true;
        double v_low = 1.0;
        double v_high = 1.0;
        int worst_bus = 0;
    };

    const Summary& solve(const Network& net, const EnergizedComponent& component);
    std::size_t size() const { return entries_.size(); }

  private:
    std::unordered_map<std::string, Summary> entries_;
};

/// Island setup used for the voltage check: slack is the grid tie for a
/// grid-fed component, else the bus of the lowest DER. Every non-slack DER
/// injects capacity * min(1, island load / island DER capacity).
Island island_of(const Network& net, const EnergizedComponent& component);
std::map<int, double> der_dispatch(const Network& net, const EnergizedComponent& component);

/// E2: every island of every outcome converges and stays inside `limits`.
/// On failure `diagnostic` (when given) names the offending island.
bool check_e2(const Network& net, const OutcomeDistribution& outcomes, const VoltageLimits& limits,
              PowerFlowCache* cache = nullptr, std::string* diagnostic = nullptr);

/// c(s) = N - |buses touched by any energized branch|.
int state_cost(const Network& net, const SystemState& s);

/// Connectivity, labeling and loop invariants of a stored state.
bool is_consistent_state(const Network& net, const SystemState& s);

struct FeasibilityOptions {
    VoltageLimits limits;
    double relax_step = 0.02;  // pu, symmetric widening per round
    double relax_cap = 0.10;   // pu, maximum total widening
};

struct FeasibleAction {
    ActionSet action;
    OutcomeDistribution outcomes;
};

/// A(s) with outcome distributions, in tie order (empty action first).
struct StateExpansion {
    std::vector<FeasibleAction> actions;
    int relax_level = 0;  // widening rounds that were needed for E2
    VoltageLimits limits; // limits A(s) was evaluated under
};

StateExpansion expand_state(const Network& net, const PfAssignment& pf, const SystemState& s,
                            const FeasibilityOptions& options, PowerFlowCache* cache = nullptr);

/// A(s) as action sets only.
std::vector<ActionSet> feasible_actions(const Network& net, const PfAssignment& pf, const SystemState& s,
                                        const FeasibilityOptions& options);

/// First violated requirement for `a` in `s` under `limits`: "not applicable",
/// "T1", "T2", "E1" or "E2"; nullopt when the action passes all of them.
std::optional<std::string> diagnose_action(const Network& net, const PfAssignment& pf, const SystemState& s,
                                           const ActionSet& a, const VoltageLimits& limits);

struct BuildOptions {
    FeasibilityOptions feasibility;
    std::size_t state_budget = 2'000'000;
    unsigned threads = 1;
};

struct Transition {
    std::uint32_t target = 0;
    double probability = 0.0;
};

struct ActionEntry {
    ActionSet action;
    std::vector<Transition> outcomes;
};

struct StateEntry {
    SystemState state;
    int cost = 0;
    int depth = 0;        // breadth-first distance from the initial state
    int relax_level = 0;
    VoltageLimits limits;
    std::vector<ActionEntry> actions;  // tie order, empty action first

    bool relaxed() const { return relax_level > 0; }
    bool terminal() const { return actions.size() == 1 && actions.front().action.empty(); }
};

/// Explored restoration MDP. State 0 is all-unknown.
class MdpModel {
  public:
    MdpModel(std::shared_ptr<const Network> network, PfAssignment pf, BuildOptions options);

    const Network& network() const { return *network_; }
    std::shared_ptr<const Network> network_ptr() const { return network_; }
    const PfAssignment& pf() const { return pf_; }
    const BuildOptions& options() const { return options_; }

    std::size_t size() const { return states_.size(); }
    const StateEntry& state(std::size_t i) const { return states_.at(i); }
    const std::vector<StateEntry>& states() const { return states_; }
    std::optional<std::uint32_t> find(const SystemState& s) const;
    /// Index of `a` within state i's feasible actions.
    std::optional<std::uint32_t> find_action(std::size_t i, const ActionSet& a) const;

    std::size_t action_count() const;
    std::size_t transition_count() const;
    std::size_t relaxed_count() const;

    /// Appends a state and returns its index; used by the builder and importer.
    std::uint32_t add_state(StateEntry entry);
    StateEntry& mutable_state(std::size_t i) { return states_.at(i); }

  private:
    std::shared_ptr<const Network> network_;
    PfAssignment pf_;
    BuildOptions options_;
    std::vector<StateEntry> states_;
    std::unordered_map<SystemState, std::uint32_t, SystemStateHash> index_;
};

/// Breadth-first exploration from all-unknown. Throws BudgetExceeded.
MdpModel build_mdp(std::shared_ptr<const Network> net, const PfAssignment& pf, const BuildOptions& options = {});

/// Model export: states, costs, relaxed flags, actions and transitions as JSON.
std::string export_model_json(const MdpModel& model);
MdpModel import_model_json(std::istream& source, std::shared_ptr<const Network> net);

}  // namespace dsr
