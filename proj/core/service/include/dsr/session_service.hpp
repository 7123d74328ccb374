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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsr/mdp.hpp"
#include "dsr/session_store.hpp"
#include "dsr/solver.hpp"

namespace dsr {

/// Failure carried to API clients as {code, message, constraint?}.
class ServiceError : public std::runtime_error {
  public:
    ServiceError(std::string code, int http_status, const std::string& message,
                 std::optional<std::string> constraint = std::nullopt)
        : std::runtime_error(message), code_(std::move(code)), status_(http_status), constraint_(std::move(constraint)) {}

    const std::string& code() const noexcept { return code_; }
    int http_status() const noexcept { return status_; }
    const std::optional<std::string>& constraint() const noexcept { return constraint_; }

  private:
    std::string code_;
    int status_;
    std::optional<std::string> constraint_;
};

struct SessionOptions {
    std::optional<int> horizon;  // default: branch count
    VoltageLimits limits;
    double relax_cap = 0.10;
    std::size_t state_budget = 2'000'000;
};

/// Inputs of a new session. `request_json` parses the API body:
/// {"network": {...}, "pf": [..] | "pf_uniform": x | "fragility": {...} + "exposure": {...}, "options": {...}}.
struct SessionRequest {
    std::shared_ptr<const Network> network;
    PfAssignment pf;
    SessionOptions options;

    static SessionRequest from_json(const std::string& body);
    /// Normalized form (explicit per-branch pf) used for persistence and caching.
    std::string to_json() const;
};

/// Completed once the policy recommends no further switching.
enum class SessionStatus { active, completed };
std::string to_string(SessionStatus status);

struct OutcomePreview {
    SystemState state;
    double probability = 0.0;
    int cost = 0;  // unenergized buses in the outcome
};

struct Recommendation {
    int step = 0;
    int stage = 0;
    SystemState state;
    ActionSet action;
    double expected_remaining_cost = 0.0;
    std::vector<OutcomePreview> outcomes;
    bool relaxed = false;
    VoltageLimits limits;
    bool terminal = false;
};

struct SessionEvent {
    int seq = 0;
    std::string at;
    ActionSet attempted;
    std::map<int, bool> observed;  // true = energized
    SystemState from;
    SystemState to;
};

struct SessionView {
    std::string id;
    SessionStatus status = SessionStatus::active;
    SystemState state;
    int step = 0;
    int horizon = 0;
    int bus_count = 0;
    std::string model_key;
    std::vector<SessionEvent> events;
};

struct TopologyView {
    struct BusView {
        int id = 0;
        bool grid_tie = false;
        int der = 0;  // DER id, 0 for none
        bool energized = false;
    };
    struct BranchView {
        int id = 0;
        int from = 0;
        int to = 0;
        std::string status;
    };
    SystemState state;
    std::vector<BusView> buses;
    std::vector<BranchView> branches;
};

/// Built model and solved policy shared by every session over the same inputs.
struct ModelBundle {
    std::string key;
    std::shared_ptr<const MdpModel> model;
    SolveResult solution;
    int horizon = 0;
};

struct ServiceConfig {
    std::string store_path;
    unsigned build_threads = 1;
};

/// Restoration sessions over cached models, persisted as an append-only log.
/// Sessions present in the store are replayed on construction.
class SessionService {
  public:
    explicit SessionService(const ServiceConfig& config);

    SessionView create_session(const SessionRequest& request);
    SessionView get_session(const std::string& id) const;
    Recommendation recommendation(const std::string& id) const;
    /// `expected_step`, when given, must equal the session's current step.
    SessionView report_outcome(const std::string& id, const ActionSet& attempted, const std::map<int, bool>& observed,
                               std::optional<int> expected_step = std::nullopt);
    /// Preview of `action` in the current state with optimal continuation; no mutation.
    Recommendation what_if(const std::string& id, const ActionSet& action) const;
    TopologyView topology(const std::string& id) const;

    std::vector<std::string> session_ids() const;
    std::size_t cached_models() const;
    std::shared_ptr<const ModelBundle> bundle_of(const std::string& id) const;

  private:
    struct Session {
        std::string id;
        std::shared_ptr<const ModelBundle> bundle;
        std::uint32_t state = 0;
        int step = 0;
        std::vector<SessionEvent> events;
        mutable std::shared_mutex mutex;
    };

    std::shared_ptr<const ModelBundle> bundle_for(const SessionRequest& request);
    std::shared_ptr<Session> find(const std::string& id) const;
    static SessionView view_of(const Session& s);
    static Recommendation preview(const Session& s, const ActionEntry& entry, double value);
    void replay();

    ServiceConfig config_;
    SessionStore store_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::mutex cache_mutex_;
    std::map<std::string, std::shared_ptr<const ModelBundle>> cache_;
};

}  // namespace dsr
