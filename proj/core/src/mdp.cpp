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

#include "dsr/mdp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "dsr/error.hpp"
#include "disjoint_set.hpp"

namespace dsr {

namespace {

constexpr double kCapacitySlack = 1e-9;

bool is_source_bus(const Network& net, int bus) { return bus == net.grid_bus() || net.der_at(bus) != 0; }

bool is_source_branch(const Network& net, int id) {
    const Branch& br = net.branch(id);
    return is_source_bus(net, br.from_bus) || is_source_bus(net, br.to_bus);
}

// Rewrites every energized branch with its component label. Throws when a
// component has no source, which would mean the input was not reachable.
SystemState settle_labels(const Network& net, SystemState s) {
    for (const EnergizedComponent& c : energized_components(net, s)) {
        if (c.label < 0) throw std::logic_error("energized component without a source");
        for (int id : c.branches) s.set(id, BranchStatus::energized(c.label));
    }
    return s;
}

void check_applicable(const Network& net, const SystemState& s, const ActionSet& a) {
    if (s.size() != static_cast<std::size_t>(net.branch_count())) {
        throw std::invalid_argument("state length does not match the branch count");
    }
    const std::vector<int> applicable = applicable_branches(net, s);
    for (int id : a.branches()) {
        if (!std::binary_search(applicable.begin(), applicable.end(), id)) {
            throw std::invalid_argument("branch " + std::to_string(id) + " is not applicable in state " + s.to_string());
        }
    }
}

}  // namespace

std::vector<EnergizedComponent> energized_components(const Network& net, const SystemState& s) {
    const auto n = static_cast<std::size_t>(net.bus_count());
    detail::DisjointSet dsu(n);
    std::vector<int> loop_closers;
    for (int id = 1; id <= net.branch_count(); ++id) {
        if (!s.at(id).is_energized()) continue;
        const Branch& br = net.branch(id);
        if (!dsu.unite(static_cast<std::size_t>(br.from_bus - 1), static_cast<std::size_t>(br.to_bus - 1))) {
            loop_closers.push_back(id);
        }
    }

    std::vector<int> slot_of_root(n, -1);
    std::vector<EnergizedComponent> out;
    auto component_of = [&](int bus) -> EnergizedComponent& {
        const std::size_t root = dsu.find(static_cast<std::size_t>(bus - 1));
        if (slot_of_root[root] < 0) {
            slot_of_root[root] = static_cast<int>(out.size());
            out.emplace_back();
        }
        return out[static_cast<std::size_t>(slot_of_root[root])];
    };
    for (int id = 1; id <= net.branch_count(); ++id) {
        if (!s.at(id).is_energized()) continue;
        const Branch& br = net.branch(id);
        EnergizedComponent& c = component_of(br.from_bus);
        c.branches.push_back(id);
        c.buses.push_back(br.from_bus);
        c.buses.push_back(br.to_bus);
    }
    for (int id : loop_closers) component_of(net.branch(id).from_bus).has_loop = true;

    for (EnergizedComponent& c : out) {
        std::sort(c.buses.begin(), c.buses.end());
        c.buses.erase(std::unique(c.buses.begin(), c.buses.end()), c.buses.end());
        for (int bus : c.buses) {
            if (bus == net.grid_bus()) c.grid_fed = true;
            if (int d = net.der_at(bus); d != 0) c.ders.push_back(d);
        }
        std::sort(c.ders.begin(), c.ders.end());
        c.label = c.grid_fed ? 0 : (c.ders.empty() ? -1 : c.ders.front());
    }
    return out;
}

std::vector<int> applicable_branches(const Network& net, const SystemState& s) {
    std::vector<int> out;
    for (int id = 1; id <= net.branch_count(); ++id) {
        if (!s.at(id).is_unknown()) continue;
        bool reachable = is_source_branch(net, id);
        for (int j : net.neighbors(id)) {
            if (reachable) break;
            reachable = s.at(j).is_energized();
        }
        if (reachable) out.push_back(id);
    }
    return out;
}

OutcomeDistribution outcome_distribution(const Network& net, const PfAssignment& pf, const SystemState& s,
                                         const ActionSet& a) {
    check_applicable(net, s, a);
    if (a.empty()) return {Outcome{s, 1.0}};

    // Branches whose result is certain contribute a single fixed status.
    SystemState base = s;
    std::vector<int> uncertain;
    for (int id : a.branches()) {
        const double p = pf[id];
        if (p >= 1.0) {
            base.set(id, BranchStatus::damaged());
        } else if (p <= 0.0) {
            base.set(id, BranchStatus::energized(0));
        } else {
            uncertain.push_back(id);
        }
    }

    OutcomeDistribution out;
    std::unordered_map<SystemState, std::size_t, SystemStateHash> seen;
    const std::size_t combos = std::size_t{1} << uncertain.size();
    for (std::size_t mask = 0; mask < combos; ++mask) {
        SystemState t = base;
        double probability = 1.0;
        for (std::size_t bit = 0; bit < uncertain.size(); ++bit) {
            const int id = uncertain[bit];
            if (mask & (std::size_t{1} << bit)) {
                t.set(id, BranchStatus::damaged());
                probability *= pf[id];
            } else {
                t.set(id, BranchStatus::energized(0));
                probability *= 1.0 - pf[id];
            }
        }
        t = settle_labels(net, std::move(t));
        if (auto it = seen.find(t); it != seen.end()) {
            out[it->second].probability += probability;
        } else {
            seen.emplace(t, out.size());
            out.push_back(Outcome{std::move(t), probability});
        }
    }
    return out;
}

SystemState apply_observation(const Network& net, const SystemState& s, const ActionSet& a,
                              const std::map<int, bool>& observed) {
    check_applicable(net, s, a);
    if (observed.size() != a.size()) throw std::invalid_argument("observation must cover exactly the attempted branches");
    SystemState t = s;
    for (const auto& [id, energized] : observed) {
        if (!a.contains(id)) {
            throw std::invalid_argument("observed branch " + std::to_string(id) + " was not attempted");
        }
        t.set(id, energized ? BranchStatus::energized(0) : BranchStatus::damaged());
    }
    return settle_labels(net, std::move(t));
}

bool check_t1(const Network& net, const ActionSet& a) {
    const auto& ids = a.branches();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& nb = net.neighbors(ids[i]);
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            if (std::binary_search(nb.begin(), nb.end(), ids[j])) return false;
        }
    }
    return true;
}

bool check_t2(const Network& net, const OutcomeDistribution& outcomes) {
    for (const Outcome& o : outcomes) {
        for (const EnergizedComponent& c : energized_components(net, o.state)) {
            if (c.has_loop) return false;
        }
    }
    return true;
}

std::vector<int> act_bus(const Network& net, const SystemState& s, int source) {
    std::vector<int> out;
    for (int id = 1; id <= net.branch_count(); ++id) {
        const BranchStatus st = s.at(id);
        if (st.is_energized() && st.source() == source) {
            out.push_back(net.branch(id).from_bus);
            out.push_back(net.branch(id).to_bus);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool check_e1(const Network& net, const OutcomeDistribution& outcomes) {
    for (const Outcome& o : outcomes) {
        for (const EnergizedComponent& c : energized_components(net, o.state)) {
            if (c.grid_fed) continue;
            if (c.ders.empty()) return false;
            double load = 0.0;
            for (int bus : c.buses) load += net.bus(bus).load_p;
            double capacity = 0.0;
            for (int d : c.ders) capacity += net.der(d).capacity_p;
            if (load > capacity + kCapacitySlack * std::max(1.0, capacity)) return false;
        }
    }
    return true;
}

Island island_of(const Network& net, const EnergizedComponent& c) {
    Island island;
    island.slack_bus = c.grid_fed ? net.grid_bus() : net.der(c.ders.front()).bus;
    island.buses = c.buses;
    island.branches = c.branches;
    return island;
}

std::map<int, double> der_dispatch(const Network& net, const EnergizedComponent& c) {
    double load = 0.0;
    for (int bus : c.buses) load += net.bus(bus).load_p;
    double capacity = 0.0;
    for (int d : c.ders) capacity += net.der(d).capacity_p;
    std::map<int, double> out;
    if (capacity <= 0.0) return out;
    const double share = std::min(1.0, load / capacity);
    const int slack_bus = island_of(net, c).slack_bus;
    for (int d : c.ders) {
        const Der& der = net.der(d);
        if (der.bus == slack_bus) continue;
        out[der.bus] = der.capacity_p * share;
    }
    return out;
}

const PowerFlowCache::Summary& PowerFlowCache::solve(const Network& net, const EnergizedComponent& c) {
    std::string key(reinterpret_cast<const char*>(c.branches.data()), c.branches.size() * sizeof(int));
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;

    Summary summary;
    if (c.has_loop || c.label < 0) {
        summary.radial = !c.has_loop;
        summary.converged = false;
    } else {
        const VoltageSolution sol = fbpf_solve(net, island_of(net, c), der_dispatch(net, c));
        summary.converged = sol.converged;
        summary.v_low = 1.0;
        summary.v_high = 1.0;
        double worst = 0.0;
        for (const BusVoltage& v : sol.voltages) {
            summary.v_low = std::min(summary.v_low, v.magnitude);
            summary.v_high = std::max(summary.v_high, v.magnitude);
            if (std::abs(v.magnitude - 1.0) > worst) {
                worst = std::abs(v.magnitude - 1.0);
                summary.worst_bus = v.bus;
            }
        }
    }
    return entries_.emplace(std::move(key), summary).first->second;
}

bool check_e2(const Network& net, const OutcomeDistribution& outcomes, const VoltageLimits& limits,
              PowerFlowCache* cache, std::string* diagnostic) {
    PowerFlowCache local;
    PowerFlowCache& pfc = cache ? *cache : local;
    for (const Outcome& o : outcomes) {
        for (const EnergizedComponent& c : energized_components(net, o.state)) {
            const PowerFlowCache::Summary& sum = pfc.solve(net, c);
            const std::string where = c.grid_fed ? "grid island" : "DER-" + std::to_string(c.label) + " island";
            if (!sum.converged) {
                if (diagnostic) *diagnostic = where + " load flow did not converge in " + o.state.to_string();
                return false;
            }
            if (sum.v_low < limits.v_min || sum.v_high > limits.v_max) {
                if (diagnostic) {
                    *diagnostic = where + " bus " + std::to_string(sum.worst_bus) + " outside voltage limits in " +
                                  o.state.to_string();
                }
                return false;
            }
        }
    }
    return true;
}

int state_cost(const Network& net, const SystemState& s) {
    std::vector<bool> live(static_cast<std::size_t>(net.bus_count()), false);
    for (int id = 1; id <= net.branch_count(); ++id) {
        if (!s.at(id).is_energized()) continue;
        live[static_cast<std::size_t>(net.branch(id).from_bus - 1)] = true;
        live[static_cast<std::size_t>(net.branch(id).to_bus - 1)] = true;
    }
    return net.bus_count() - static_cast<int>(std::count(live.begin(), live.end(), true));
}

bool is_consistent_state(const Network& net, const SystemState& s) {
    if (s.size() != static_cast<std::size_t>(net.branch_count())) return false;
    for (BranchStatus st : s.statuses()) {
        if (st.is_energized() && st.source() > net.der_count()) return false;
    }
    for (const EnergizedComponent& c : energized_components(net, s)) {
        if (c.has_loop || c.label < 0) return false;
        for (int id : c.branches) {
            if (s.at(id).source() != c.label) return false;
        }
    }
    return true;
}

StateExpansion expand_state(const Network& net, const PfAssignment& pf, const SystemState& s,
                            const FeasibilityOptions& options, PowerFlowCache* cache) {
    PowerFlowCache local;
    PowerFlowCache& pfc = cache ? *cache : local;

    const std::vector<int> candidates = applicable_branches(net, s);

    // Subsets of Ā(s) that satisfy T1, grown branch by branch.
    std::vector<ActionSet> t1_subsets;
    std::vector<int> chosen;
    auto grow = [&](auto&& self, std::size_t next) -> void {
        if (next == candidates.size()) {
            if (!chosen.empty()) t1_subsets.emplace_back(chosen);
            return;
        }
        self(self, next + 1);
        const int id = candidates[next];
        const auto& nb = net.neighbors(id);
        const bool clash = std::any_of(chosen.begin(), chosen.end(),
                                       [&](int c) { return std::binary_search(nb.begin(), nb.end(), c); });
        if (!clash) {
            chosen.push_back(id);
            self(self, next + 1);
            chosen.pop_back();
        }
    };
    grow(grow, 0);

    std::vector<FeasibleAction> topological;
    for (ActionSet& a : t1_subsets) {
        OutcomeDistribution outcomes = outcome_distribution(net, pf, s, a);
        if (!check_t2(net, outcomes) || !check_e1(net, outcomes)) continue;
        topological.push_back({std::move(a), std::move(outcomes)});
    }

    StateExpansion result;
    result.limits = options.limits;
    std::vector<FeasibleAction> passing;
    auto evaluate = [&](const VoltageLimits& limits) {
        passing.clear();
        for (const FeasibleAction& fa : topological) {
            if (check_e2(net, fa.outcomes, limits, &pfc)) passing.push_back(fa);
        }
    };
    evaluate(options.limits);
    if (passing.empty() && !topological.empty() && options.relax_step > 0.0) {
        for (int level = 1; level * options.relax_step <= options.relax_cap + 1e-12; ++level) {
            const VoltageLimits widened = options.limits.widened(level * options.relax_step);
            evaluate(widened);
            if (!passing.empty()) {
                result.relax_level = level;
                result.limits = widened;
                break;
            }
        }
    }

    std::sort(passing.begin(), passing.end(),
              [](const FeasibleAction& x, const FeasibleAction& y) { return tie_order_less(x.action, y.action); });
    result.actions.reserve(passing.size() + 1);
    result.actions.push_back({ActionSet{}, {Outcome{s, 1.0}}});
    for (FeasibleAction& fa : passing) result.actions.push_back(std::move(fa));
    return result;
}

std::vector<ActionSet> feasible_actions(const Network& net, const PfAssignment& pf, const SystemState& s,
                                        const FeasibilityOptions& options) {
    std::vector<ActionSet> out;
    for (FeasibleAction& fa : expand_state(net, pf, s, options).actions) out.push_back(std::move(fa.action));
    return out;
}

std::optional<std::string> diagnose_action(const Network& net, const PfAssignment& pf, const SystemState& s,
                                           const ActionSet& a, const VoltageLimits& limits) {
    if (a.empty()) return std::nullopt;
    const std::vector<int> applicable = applicable_branches(net, s);
    for (int id : a.branches()) {
        if (!std::binary_search(applicable.begin(), applicable.end(), id)) return "not applicable";
    }
    if (!check_t1(net, a)) return "T1";
    const OutcomeDistribution outcomes = outcome_distribution(net, pf, s, a);
    if (!check_t2(net, outcomes)) return "T2";
    if (!check_e1(net, outcomes)) return "E1";
    if (!check_e2(net, outcomes, limits)) return "E2";
    return std::nullopt;
}

MdpModel::MdpModel(std::shared_ptr<const Network> network, PfAssignment pf, BuildOptions options)
    : network_(std::move(network)), pf_(std::move(pf)), options_(options) {
    if (!network_) throw std::invalid_argument("model needs a network");
}

std::optional<std::uint32_t> MdpModel::find(const SystemState& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> MdpModel::find_action(std::size_t i, const ActionSet& a) const {
    const auto& actions = states_.at(i).actions;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        if (actions[k].action == a) return static_cast<std::uint32_t>(k);
    }
    return std::nullopt;
}

std::size_t MdpModel::action_count() const {
    std::size_t n = 0;
    for (const StateEntry& e : states_) n += e.actions.size();
    return n;
}

std::size_t MdpModel::transition_count() const {
    std::size_t n = 0;
    for (const StateEntry& e : states_) {
        for (const ActionEntry& a : e.actions) n += a.outcomes.size();
    }
    return n;
}

std::size_t MdpModel::relaxed_count() const {
    return static_cast<std::size_t>(
        std::count_if(states_.begin(), states_.end(), [](const StateEntry& e) { return e.relaxed(); }));
}

std::uint32_t MdpModel::add_state(StateEntry entry) {
    const auto idx = static_cast<std::uint32_t>(states_.size());
    if (!index_.emplace(entry.state, idx).second) throw std::logic_error("duplicate state " + entry.state.to_string());
    states_.push_back(std::move(entry));
    return idx;
}

MdpModel build_mdp(std::shared_ptr<const Network> net, const PfAssignment& pf, const BuildOptions& options) {
    if (!net) throw std::invalid_argument("build_mdp needs a network");
    if (pf.pf.size() != static_cast<std::size_t>(net->branch_count())) {
        throw ValidationError("pf assignment does not cover every branch");
    }
    for (double p : pf.pf) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("pf values must lie in [0,1]");
    }
    options.feasibility.limits.validate();

    MdpModel model(net, pf, options);
    const SystemState initial(static_cast<std::size_t>(net->branch_count()));
    model.add_state({initial, state_cost(*net, initial), 0, 0, options.feasibility.limits, {}});

    const unsigned workers = std::max(1u, options.threads);
    std::vector<PowerFlowCache> caches(workers);
    std::vector<std::uint32_t> frontier{0};
    int depth = 0;
    while (!frontier.empty()) {
        std::vector<StateExpansion> expansions(frontier.size());
        auto expand = [&](std::size_t k, PowerFlowCache& cache) {
            expansions[k] = expand_state(*net, pf, model.state(frontier[k]).state, options.feasibility, &cache);
        };
        if (workers == 1 || frontier.size() < 2) {
            for (std::size_t k = 0; k < frontier.size(); ++k) expand(k, caches[0]);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    for (std::size_t k = next++; k < frontier.size(); k = next++) expand(k, caches[w]);
                });
            }
        }

        // Registration is sequential in frontier order, so indices do not depend on thread count.
        ++depth;
        std::vector<std::uint32_t> next_frontier;
        for (std::size_t k = 0; k < frontier.size(); ++k) {
            StateExpansion& ex = expansions[k];
            std::vector<ActionEntry> actions;
            actions.reserve(ex.actions.size());
            for (FeasibleAction& fa : ex.actions) {
                ActionEntry entry{std::move(fa.action), {}};
                for (Outcome& o : fa.outcomes) {
                    std::uint32_t target;
                    if (auto found = model.find(o.state)) {
                        target = *found;
                    } else {
                        if (model.size() >= options.state_budget) {
                            throw BudgetExceeded(options.state_budget, model.size(),
                                                 next_frontier.size() + (frontier.size() - k));
                        }
                        const int cost = state_cost(*net, o.state);
                        target = model.add_state({std::move(o.state), cost, depth, 0, options.feasibility.limits, {}});
                        next_frontier.push_back(target);
                    }
                    entry.outcomes.push_back({target, o.probability});
                }
                actions.push_back(std::move(entry));
            }
            StateEntry& se = model.mutable_state(frontier[k]);
            se.actions = std::move(actions);
            se.relax_level = ex.relax_level;
            se.limits = ex.limits;
        }
        frontier = std::move(next_frontier);
    }
    return model;
}

}  // namespace dsr
