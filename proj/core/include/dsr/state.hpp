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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dsr {

/// U (unknown), D (damaged) or E(k), energized from source k (0 = transmission grid).
class BranchStatus {
  public:
    static constexpr BranchStatus unknown() { return BranchStatus(0); }
    static constexpr BranchStatus damaged() { return BranchStatus(1); }
    static constexpr BranchStatus energized(int source) { return BranchStatus(static_cast<std::uint8_t>(2 + source)); }

    constexpr BranchStatus() = default;

    constexpr bool is_unknown() const { return code_ == 0; }
    constexpr bool is_damaged() const { return code_ == 1; }
    constexpr bool is_energized() const { return code_ >= 2; }
    /// Source index of an energized branch.
    constexpr int source() const { return code_ - 2; }
    /// Digit used by the base-(M+3) canonical key.
    constexpr std::uint8_t code() const { return code_; }

    std::string to_string() const;
    static BranchStatus parse(std::string_view token);

    constexpr bool operator==(const BranchStatus&) const = default;

  private:
    constexpr explicit BranchStatus(std::uint8_t code) : code_(code) {}
    std::uint8_t code_ = 0;
};

/// One MDP state: the status of every branch, indexed by 1-based branch id.
class SystemState {
  public:
    SystemState() = default;
    explicit SystemState(std::size_t branch_count) : statuses_(branch_count) {}
    explicit SystemState(std::vector<BranchStatus> statuses) : statuses_(std::move(statuses)) {}

    std::size_t size() const { return statuses_.size(); }
    BranchStatus at(int branch_id) const { return statuses_.at(static_cast<std::size_t>(branch_id - 1)); }
    void set(int branch_id, BranchStatus s) { statuses_.at(static_cast<std::size_t>(branch_id - 1)) = s; }
    const std::vector<BranchStatus>& statuses() const { return statuses_; }

    int count_unknown() const;
    int count_damaged() const;

    /// "E0,E0,U,U,E1"
    std::string to_string() const;
    static SystemState parse(std::string_view text);

    /// Base-(M+3) integer encoding. Throws std::overflow_error when it does not fit 64 bits.
    std::uint64_t canonical_key(int der_count) const;

    bool operator==(const SystemState&) const = default;

  private:
    std::vector<BranchStatus> statuses_;
};

struct SystemStateHash {
    std::size_t operator()(const SystemState& s) const noexcept;
};

/// Branches switched together in one restoration step; kept sorted and unique.
class ActionSet {
  public:
    ActionSet() = default;
    ActionSet(std::initializer_list<int> ids);
    explicit ActionSet(std::vector<int> ids);

    const std::vector<int>& branches() const { return branches_; }
    std::size_t size() const { return branches_.size(); }
    bool empty() const { return branches_.empty(); }
    bool contains(int branch_id) const;

    /// "{3,4}"
    std::string to_string() const;

    bool operator==(const ActionSet&) const = default;

  private:
    std::vector<int> branches_;
};

/// Deterministic tie-break order: smaller cardinality first, then lexicographic.
bool tie_order_less(const ActionSet& a, const ActionSet& b);

struct Outcome {
    SystemState state;
    double probability = 0.0;
};

using OutcomeDistribution = std::vector<Outcome>;

}  // namespace dsr
