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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dsr/mdp.hpp"
#include "dsr/solver.hpp"

namespace dsr {

/// Philox4x32-10 block function (Salmon et al., SC'11). Counter-based: every
/// output block is a pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Stream of uniforms for one (seed, stream) pair; the draw index is the counter.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint32_t next_u32();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

/// Draws an outcome index of `outcomes` (state-level distribution).
std::size_t sample_index(const std::vector<Transition>& outcomes, CounterRng& rng);
SystemState sample_outcome(const OutcomeDistribution& dist, CounterRng& rng);

struct TrajectoryStep {
    std::uint32_t state = 0;
    ActionSet action;
    std::uint32_t outcome = 0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;  // steps[t].outcome == steps[t + 1].state
    std::uint32_t final_state = 0;
    /// Per bus (index = id - 1): completed steps before it was first energized;
    /// the horizon when it never was.
    std::vector<int> bus_restoration_step;
    double cost = 0.0;  // sum of c(state) over the horizon's states
};

/// Rolls the policy forward for `horizon` states starting at `start`.
Trajectory rollout(const MdpModel& model, const Policy& policy, int horizon, CounterRng& rng, std::uint32_t start = 0);

struct SimulationReport {
    std::uint64_t seed = 0;
    int trials = 0;
    int horizon = 0;
    double mean = 0.0;            // mean of trajectory cost / N
    double standard_error = 0.0;
    std::vector<double> trial_cost;  // raw trajectory cost per trial
    std::vector<std::vector<int>> bus_restoration_step;  // [trial][bus]
    /// histogram[bus][step] = trials in which the bus was restored after `step` steps (step = horizon: never).
    std::vector<std::vector<int>> histogram;
};

struct MonteCarloOptions {
    int trials = 10000;
    int horizon = 0;  // 0 = policy horizon
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::uint32_t start = 0;
};

/// Independent rollouts, trial i drawing from stream i; reduced in trial order.
SimulationReport monte_carlo(const MdpModel& model, const Policy& policy, const MonteCarloOptions& options);

std::string report_to_json(const SimulationReport& report);
std::string report_to_csv(const SimulationReport& report);

enum class BaselineKind { greedy_max_energize, min_total_time };

/// greedy_max_energize: stationary, maximizes expected newly energized buses one step ahead.
/// min_total_time: minimizes the expected number of steps spent in non-terminal states.
Policy baseline_policy(const MdpModel& model, BaselineKind kind, int horizon);
BaselineKind parse_baseline_kind(const std::string& name);

}  // namespace dsr
