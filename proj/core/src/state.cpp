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

#include "dsr/state.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <stdexcept>

namespace dsr {

std::string BranchStatus::to_string() const {
    if (is_unknown()) return "U";
    if (is_damaged()) return "D";
    return "E" + std::to_string(source());
}

BranchStatus BranchStatus::parse(std::string_view token) {
    if (token == "U") return unknown();
    if (token == "D") return damaged();
    if (token.size() >= 2 && token.front() == 'E') {
        int k = -1;
        auto [ptr, ec] = std::from_chars(token.data() + 1, token.data() + token.size(), k);
        if (ec == std::errc{} && ptr == token.data() + token.size() && k >= 0 && k <= 250) return energized(k);
    }
    throw std::invalid_argument("invalid branch status '" + std::string(token) + "'");
}

int SystemState::count_unknown() const {
    return static_cast<int>(std::count_if(statuses_.begin(), statuses_.end(), [](BranchStatus s) { return s.is_unknown(); }));
}

int SystemState::count_damaged() const {
    return static_cast<int>(std::count_if(statuses_.begin(), statuses_.end(), [](BranchStatus s) { return s.is_damaged(); }));
}

std::string SystemState::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < statuses_.size(); ++i) {
        if (i) out += ',';
        out += statuses_[i].to_string();
    }
    return out;
}

SystemState SystemState::parse(std::string_view text) {
    std::vector<BranchStatus> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        std::string_view token = text.substr(start, comma - start);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        out.push_back(BranchStatus::parse(token));
        start = comma + 1;
    }
    return SystemState(std::move(out));
}

std::uint64_t SystemState::canonical_key(int der_count) const {
    const std::uint64_t radix = static_cast<std::uint64_t>(der_count) + 3;
    // The whole key space radix^L has to fit, not just this state's value.
    unsigned __int128 space = 1;
    for (std::size_t i = 0; i < statuses_.size(); ++i) {
        space *= radix;
        if (space > (static_cast<unsigned __int128>(1) << 64)) {
            throw std::overflow_error("canonical key does not fit in 64 bits");
        }
    }
    std::uint64_t key = 0;
    // Most significant digit is branch 1.
    for (BranchStatus s : statuses_) {
        if (s.code() >= radix) throw std::invalid_argument("status source index exceeds DER count");
        key = key * radix + s.code();
    }
    return key;
}

std::size_t SystemStateHash::operator()(const SystemState& s) const noexcept {
    // FNV-1a over the status codes.
    std::uint64_t h = 1469598103934665603ULL;
    for (BranchStatus b : s.statuses()) {
        h ^= b.code();
        h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
}

ActionSet::ActionSet(std::initializer_list<int> ids) : ActionSet(std::vector<int>(ids)) {}

ActionSet::ActionSet(std::vector<int> ids) : branches_(std::move(ids)) {
    std::sort(branches_.begin(), branches_.end());
    branches_.erase(std::unique(branches_.begin(), branches_.end()), branches_.end());
}

bool ActionSet::contains(int branch_id) const {
    return std::binary_search(branches_.begin(), branches_.end(), branch_id);
}

std::string ActionSet::to_string() const {
    std::string out = "{";
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(branches_[i]);
    }
    return out + "}";
}

bool tie_order_less(const ActionSet& a, const ActionSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.branches() < b.branches();
}

}  // namespace dsr
