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

#include "dsr/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace dsr {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint32_t CounterRng::next_u32() {
    if (used_ == 4) {
        buffer_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                             {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
        ++block_;
        used_ = 0;
    }
    return buffer_[static_cast<std::size_t>(used_++)];
}

double CounterRng::uniform() {
    const std::uint64_t hi = next_u32() >> 5;  // 27 bits
    const std::uint64_t lo = next_u32() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

std::size_t sample_index(const std::vector<Transition>& outcomes, CounterRng& rng) {
    if (outcomes.empty()) throw std::invalid_argument("cannot sample an empty distribution");
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        acc += outcomes[k].probability;
        if (u < acc) return k;
    }
    // Rounding left u above the cumulative sum: take the last outcome with mass.
    for (std::size_t k = outcomes.size(); k-- > 0;) {
        if (outcomes[k].probability > 0.0) return k;
    }
    return outcomes.size() - 1;
}

SystemState sample_outcome(const OutcomeDistribution& dist, CounterRng& rng) {
    std::vector<Transition> view;
    view.reserve(dist.size());
    for (std::size_t k = 0; k < dist.size(); ++k) view.push_back({static_cast<std::uint32_t>(k), dist[k].probability});
    return dist.at(sample_index(view, rng)).state;
}

namespace {

std::vector<int> energized_buses(const Network& net, const SystemState& s) {
    std::vector<int> out;
    for (int id = 1; id <= net.branch_count(); ++id) {
        if (!s.at(id).is_energized()) continue;
        out.push_back(net.branch(id).from_bus);
        out.push_back(net.branch(id).to_bus);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

template <typename BusesOf>
Trajectory rollout_impl(const MdpModel& model, const Policy& policy, int horizon, CounterRng& rng,
                        std::uint32_t start, BusesOf&& buses_of) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (policy.horizon < horizon) throw std::invalid_argument("policy horizon is shorter than the rollout horizon");
    if (start >= model.size()) throw std::invalid_argument("unknown start state");
    Trajectory tr;
    tr.bus_restoration_step.assign(static_cast<std::size_t>(model.network().bus_count()), horizon);
    std::uint32_t s = start;
    for (int t = 0; t < horizon; ++t) {
        const StateEntry& entry = model.state(s);
        tr.cost += entry.cost;
        for (int bus : buses_of(s)) {
            int& slot = tr.bus_restoration_step[static_cast<std::size_t>(bus - 1)];
            slot = std::min(slot, t);
        }
        if (t == horizon - 1) break;
        const int stage = horizon - t;
        const auto& stage_table = policy.stages.at(static_cast<std::size_t>(stage - 1));
        if (s >= stage_table.size()) throw std::invalid_argument("policy gap at state " + entry.state.to_string());
        const ActionEntry& a = entry.actions.at(stage_table[s]);
        const std::uint32_t next = a.outcomes.at(sample_index(a.outcomes, rng)).target;
        tr.steps.push_back({s, a.action, next});
        s = next;
    }
    tr.final_state = s;
    return tr;
}

}  // namespace

Trajectory rollout(const MdpModel& model, const Policy& policy, int horizon, CounterRng& rng, std::uint32_t start) {
    return rollout_impl(model, policy, horizon, rng, start,
                        [&](std::uint32_t s) { return energized_buses(model.network(), model.state(s).state); });
}

SimulationReport monte_carlo(const MdpModel& model, const Policy& policy, const MonteCarloOptions& options) {
    if (options.trials < 1) throw std::invalid_argument("trials must be at least 1");
    const int horizon = options.horizon > 0 ? options.horizon : policy.horizon;
    const int n_bus = model.network().bus_count();

    std::vector<std::vector<int>> buses(model.size());
    for (std::size_t s = 0; s < model.size(); ++s) buses[s] = energized_buses(model.network(), model.state(s).state);
    auto buses_of = [&](std::uint32_t s) -> const std::vector<int>& { return buses[s]; };

    SimulationReport rep;
    rep.seed = options.seed;
    rep.trials = options.trials;
    rep.horizon = horizon;
    rep.trial_cost.assign(static_cast<std::size_t>(options.trials), 0.0);
    rep.bus_restoration_step.assign(static_cast<std::size_t>(options.trials), {});

    auto run = [&](std::size_t trial) {
        CounterRng rng(options.seed, trial);
        Trajectory tr = rollout_impl(model, policy, horizon, rng, options.start, buses_of);
        rep.trial_cost[trial] = tr.cost;
        rep.bus_restoration_step[trial] = std::move(tr.bus_restoration_step);
    };
    const auto n_trials = static_cast<std::size_t>(options.trials);
    if (options.threads <= 1) {
        for (std::size_t i = 0; i < n_trials; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < options.threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n_trials; i = next++) run(i);
            });
        }
    }

    double sum = 0.0;
    for (double c : rep.trial_cost) sum += c / n_bus;
    rep.mean = sum / options.trials;
    if (options.trials > 1) {
        double ss = 0.0;
        for (double c : rep.trial_cost) ss += (c / n_bus - rep.mean) * (c / n_bus - rep.mean);
        rep.standard_error = std::sqrt(ss / (options.trials - 1) / options.trials);
    }
    rep.histogram.assign(static_cast<std::size_t>(n_bus), std::vector<int>(static_cast<std::size_t>(horizon) + 1, 0));
    for (const auto& steps : rep.bus_restoration_step) {
        for (std::size_t b = 0; b < steps.size(); ++b) ++rep.histogram[b][static_cast<std::size_t>(steps[b])];
    }
    return rep;
}

std::string report_to_json(const SimulationReport& report) {
    nlohmann::json doc;
    doc["seed"] = report.seed;
    doc["trials"] = report.trials;
    doc["horizon"] = report.horizon;
    doc["mean_average_restoration_time"] = report.mean;
    doc["standard_error"] = report.standard_error;
    doc["bus_histograms"] = report.histogram;
    return doc.dump(2);
}

std::string report_to_csv(const SimulationReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "trial,cost";
    const std::size_t n_bus = report.histogram.size();
    for (std::size_t b = 0; b < n_bus; ++b) out << ",bus_" << (b + 1);
    out << '\n';
    for (std::size_t i = 0; i < report.trial_cost.size(); ++i) {
        out << i << ',' << report.trial_cost[i];
        for (int step : report.bus_restoration_step[i]) out << ',' << step;
        out << '\n';
    }
    return out.str();
}

Policy baseline_policy(const MdpModel& model, BaselineKind kind, int horizon) {
    if (model.size() == 0) throw std::invalid_argument("empty model");
    if (kind == BaselineKind::min_total_time) {
        std::vector<double> steps_cost(model.size());
        for (std::size_t s = 0; s < model.size(); ++s) steps_cost[s] = model.state(s).terminal() ? 0.0 : 1.0;
        Policy p = solve_with_cost(model, horizon, steps_cost).policy;
        p.optimal = false;
        return p;
    }
    return make_stationary_policy(model, horizon, [&](std::size_t, const StateEntry& e) -> std::optional<ActionSet> {
        // Expected drop in unenergized buses, larger is better.
        auto gain = [&](const ActionEntry& a) {
            double expected = 0.0;
            for (const Transition& t : a.outcomes) expected += t.probability * model.state(t.target).cost;
            return e.cost - expected;
        };
        double best = -1.0;
        for (const ActionEntry& a : e.actions) best = std::max(best, gain(a));
        const ActionEntry* pick = nullptr;
        for (const ActionEntry& a : e.actions) {
            if (gain(a) < best - kTieTolerance) continue;
            if (!pick || tie_order_less(a.action, pick->action)) pick = &a;
        }
        return pick->action;
    });
}

BaselineKind parse_baseline_kind(const std::string& name) {
    if (name == "greedy-max-energize") return BaselineKind::greedy_max_energize;
    if (name == "min-total-time") return BaselineKind::min_total_time;
    throw std::invalid_argument("unknown baseline kind '" + name + "'");
}

}  // namespace dsr
