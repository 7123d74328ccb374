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

#include "dsr/solver.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace dsr {

namespace {

double expected_next(const ActionEntry& a, const std::vector<double>& next) {
    double acc = 0.0;
    for (const Transition& t : a.outcomes) acc += t.probability * next[t.target];
    return acc;
}

void check_model(const MdpModel& model, int horizon) {
    if (model.size() == 0) throw std::invalid_argument("empty model");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
}

}  // namespace

SolveResult solve_with_cost(const MdpModel& model, int horizon, const std::vector<double>& cost) {
    check_model(model, horizon);
    if (cost.size() != model.size()) throw std::invalid_argument("cost vector does not match the model");
    const std::size_t n_states = model.size();

    SolveResult r;
    r.values.horizon = horizon;
    r.policy.horizon = horizon;
    r.policy.optimal = true;
    r.values.stages.assign(static_cast<std::size_t>(horizon), std::vector<double>(n_states));
    r.policy.stages.assign(static_cast<std::size_t>(horizon), std::vector<std::uint32_t>(n_states, 0));

    const std::vector<double> zeros(n_states, 0.0);
    for (int n = 1; n <= horizon; ++n) {
        const std::vector<double>& next = n == 1 ? zeros : r.values.stages[static_cast<std::size_t>(n - 2)];
        auto& values = r.values.stages[static_cast<std::size_t>(n - 1)];
        auto& choice = r.policy.stages[static_cast<std::size_t>(n - 1)];
        for (std::size_t s = 0; s < n_states; ++s) {
            const auto& actions = model.state(s).actions;
            if (actions.empty()) throw std::invalid_argument("state " + std::to_string(s) + " has no actions");
            double best = std::numeric_limits<double>::infinity();
            for (const ActionEntry& a : actions) best = std::min(best, expected_next(a, next));
            // Among near-minimal actions take the first in tie order.
            std::size_t pick = actions.size();
            double pick_value = 0.0;
            for (std::size_t k = 0; k < actions.size(); ++k) {
                const double q = expected_next(actions[k], next);
                if (q > best + kTieTolerance) continue;
                if (pick == actions.size() || tie_order_less(actions[k].action, actions[pick].action)) {
                    pick = k;
                    pick_value = q;
                }
            }
            choice[s] = static_cast<std::uint32_t>(pick);
            values[s] = cost[s] + pick_value;
        }
    }
    return r;
}

SolveResult solve(const MdpModel& model, int horizon) {
    std::vector<double> cost(model.size());
    for (std::size_t s = 0; s < model.size(); ++s) cost[s] = model.state(s).cost;
    return solve_with_cost(model, horizon, cost);
}

ValueTable evaluate_policy(const MdpModel& model, const Policy& policy, int horizon) {
    check_model(model, horizon);
    if (policy.horizon < horizon || static_cast<int>(policy.stages.size()) < horizon) {
        throw std::invalid_argument("policy horizon is shorter than the evaluation horizon");
    }
    const std::size_t n_states = model.size();
    ValueTable v;
    v.horizon = horizon;
    v.stages.assign(static_cast<std::size_t>(horizon), std::vector<double>(n_states));
    const std::vector<double> zeros(n_states, 0.0);
    for (int n = 1; n <= horizon; ++n) {
        const auto& stage = policy.stages[static_cast<std::size_t>(n - 1)];
        if (stage.size() != n_states) throw std::invalid_argument("policy missing a reachable state");
        const std::vector<double>& next = n == 1 ? zeros : v.stages[static_cast<std::size_t>(n - 2)];
        for (std::size_t s = 0; s < n_states; ++s) {
            const auto& actions = model.state(s).actions;
            if (stage[s] >= actions.size()) throw std::invalid_argument("policy action outside A(s)");
            v.stages[static_cast<std::size_t>(n - 1)][s] = model.state(s).cost + expected_next(actions[stage[s]], next);
        }
    }
    return v;
}

Policy make_stationary_policy(const MdpModel& model, int horizon,
                              const std::function<std::optional<ActionSet>(std::size_t, const StateEntry&)>& choose) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    std::vector<std::uint32_t> per_state(model.size());
    for (std::size_t s = 0; s < model.size(); ++s) {
        const std::optional<ActionSet> a = choose(s, model.state(s));
        if (!a) throw std::invalid_argument("policy missing state " + model.state(s).state.to_string());
        const auto k = model.find_action(s, *a);
        if (!k) {
            throw std::invalid_argument("action " + a->to_string() + " is not feasible in " +
                                        model.state(s).state.to_string());
        }
        per_state[s] = *k;
    }
    Policy p;
    p.horizon = horizon;
    p.stages.assign(static_cast<std::size_t>(horizon), per_state);
    return p;
}

double average_restoration_time(double value, int bus_count) {
    if (bus_count <= 0) throw std::invalid_argument("bus count must be positive");
    return value / bus_count;
}

int stage_for_step(int horizon, int step) {
    return std::max(std::min(2, horizon), horizon - step);
}

std::vector<ActionSet> nominal_sequence(const MdpModel& model, const Policy& policy, std::size_t start) {
    std::vector<ActionSet> out;
    std::size_t s = start;
    const int max_steps = model.network().branch_count() + 1;
    for (int step = 0; step < max_steps; ++step) {
        const ActionEntry& entry =
            model.state(s).actions.at(policy.action_index(s, stage_for_step(policy.horizon, step)));
        if (entry.action.empty()) break;
        out.push_back(entry.action);
        std::map<int, bool> success;
        for (int id : entry.action.branches()) success[id] = true;
        const SystemState all_energized = apply_observation(model.network(), model.state(s).state, entry.action, success);
        std::optional<std::uint32_t> next;
        for (const Transition& t : entry.outcomes) {
            if (model.state(t.target).state == all_energized) next = t.target;
        }
        if (!next) {
            auto best = std::max_element(entry.outcomes.begin(), entry.outcomes.end(),
                                         [](const Transition& a, const Transition& b) { return a.probability < b.probability; });
            next = best->target;
        }
        s = *next;
    }
    return out;
}

std::string export_policy_json(const MdpModel& model, const SolveResult& result) {
    nlohmann::json doc = nlohmann::json::object();
    const int h = result.policy.horizon;
    for (std::size_t s = 0; s < model.size(); ++s) {
        const int stage = stage_for_step(h, model.state(s).depth);
        doc[model.state(s).state.to_string()] = {
            {"action", result.policy.action(model, s, stage).branches()},
            {"value", result.values.value(s, stage)},
            {"stage", stage},
        };
    }
    return doc.dump();
}

}  // namespace dsr
