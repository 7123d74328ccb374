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

#include "dsr/session_service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dsr/error.hpp"

namespace dsr {

using nlohmann::json;

namespace {

ServiceError validation(const std::string& message) { return ServiceError("validation", 422, message); }

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

std::string new_session_id() {
    static std::mutex mutex;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mutex);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SessionOptions parse_options(const json& j) {
    SessionOptions o;
    if (j.is_null()) return o;
    if (!j.is_object()) throw validation("options must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "horizon") {
            o.horizon = value.get<int>();
        } else if (key == "vmin") {
            o.limits.v_min = value.get<double>();
        } else if (key == "vmax") {
            o.limits.v_max = value.get<double>();
        } else if (key == "relax_cap") {
            o.relax_cap = value.get<double>();
        } else if (key == "state_budget") {
            o.state_budget = value.get<std::size_t>();
        } else {
            throw validation("unknown option '" + key + "'");
        }
    }
    if (o.horizon && *o.horizon < 1) throw validation("horizon must be at least 1");
    if (!(o.relax_cap >= 0.0)) throw validation("relax_cap must be non-negative");
    if (o.state_budget < 1) throw validation("state_budget must be at least 1");
    return o;
}

std::string event_payload(const SessionEvent& e) {
    json observed = json::object();
    for (const auto& [branch, energized] : e.observed) observed[std::to_string(branch)] = energized;
    return json{{"attempted", e.attempted.branches()},
                {"observed", observed},
                {"from", e.from.to_string()},
                {"to", e.to.to_string()}}
        .dump();
}

}  // namespace

std::string to_string(SessionStatus status) { return status == SessionStatus::active ? "active" : "completed"; }

SessionRequest SessionRequest::from_json(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ServiceError("bad_request", 400, std::string("request body is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ServiceError("bad_request", 400, "request body must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (key != "network" && key != "pf" && key != "pf_uniform" && key != "fragility" && key != "exposure" &&
            key != "options") {
            throw validation("unknown key '" + key + "'");
        }
    }
    SessionRequest req;
    try {
        if (!doc.contains("network")) throw validation("missing key 'network'");
        std::istringstream net_in(doc["network"].dump());
        req.network = std::make_shared<const Network>(load_network(net_in));

        const int pf_forms = static_cast<int>(doc.contains("pf")) + static_cast<int>(doc.contains("pf_uniform")) +
                             static_cast<int>(doc.contains("fragility") || doc.contains("exposure"));
        if (pf_forms != 1) throw validation("give exactly one of 'pf', 'pf_uniform' or 'fragility' + 'exposure'");
        const auto l = static_cast<std::size_t>(req.network->branch_count());
        if (doc.contains("pf")) {
            req.pf.pf = doc["pf"].get<std::vector<double>>();
            if (req.pf.pf.size() != l) throw validation("pf must list one value per branch");
        } else if (doc.contains("pf_uniform")) {
            req.pf = PfAssignment::uniform(*req.network, doc["pf_uniform"].get<double>());
        } else {
            if (!doc.contains("fragility") || !doc.contains("exposure")) {
                throw validation("'fragility' and 'exposure' go together");
            }
            std::istringstream frag_in(doc["fragility"].dump());
            std::istringstream exp_in(doc["exposure"].dump());
            req.pf = assign_pf(*req.network, load_fragility(frag_in), load_exposure(exp_in));
        }
        for (double p : req.pf.pf) {
            if (!(p >= 0.0 && p <= 1.0)) throw validation("pf values must lie in [0,1]");
        }
        req.options = parse_options(doc.contains("options") ? doc["options"] : json());
        req.options.limits.validate();
    } catch (const ParseError& e) {
        throw validation(e.what());
    } catch (const ValidationError& e) {
        throw validation(e.what());
    } catch (const json::exception& e) {
        throw validation(e.what());
    }
    return req;
}

std::string SessionRequest::to_json() const {
    json options = {{"vmin", this->options.limits.v_min},
                    {"vmax", this->options.limits.v_max},
                    {"relax_cap", this->options.relax_cap},
                    {"state_budget", this->options.state_budget}};
    if (this->options.horizon) options["horizon"] = *this->options.horizon;
    return json{{"network", json::parse(serialize_network(*network))}, {"pf", pf.pf}, {"options", options}}.dump();
}

SessionService::SessionService(const ServiceConfig& config) : config_(config), store_(config.store_path) { replay(); }

std::shared_ptr<const ModelBundle> SessionService::bundle_for(const SessionRequest& request) {
    const std::string key = fnv1a_hex(request.to_json());
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    BuildOptions build;
    build.feasibility.limits = request.options.limits;
    build.feasibility.relax_cap = request.options.relax_cap;
    build.state_budget = request.options.state_budget;
    build.threads = config_.build_threads;
    auto bundle = std::make_shared<ModelBundle>();
    bundle->key = key;
    try {
        bundle->model = std::make_shared<const MdpModel>(build_mdp(request.network, request.pf, build));
    } catch (const BudgetExceeded& e) {
        throw ServiceError("budget_exceeded", 422, e.what());
    }
    bundle->horizon = request.options.horizon.value_or(request.network->branch_count());
    bundle->solution = solve(*bundle->model, bundle->horizon);
    cache_.emplace(key, bundle);
    return bundle;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError("not_found", 404, "unknown session '" + id + "'");
    return it->second;
}

SessionView SessionService::view_of(const Session& s) {
    SessionView v;
    v.id = s.id;
    const StateEntry& entry = s.bundle->model->state(s.state);
    const int stage = stage_for_step(s.bundle->horizon, s.step);
    const bool idle = entry.actions.at(s.bundle->solution.policy.action_index(s.state, stage)).action.empty();
    v.status = entry.terminal() || idle ? SessionStatus::completed : SessionStatus::active;
    v.state = entry.state;
    v.step = s.step;
    v.horizon = s.bundle->horizon;
    v.bus_count = s.bundle->model->network().bus_count();
    v.model_key = s.bundle->key;
    v.events = s.events;
    return v;
}

SessionView SessionService::create_session(const SessionRequest& request) {
    auto session = std::make_shared<Session>();
    session->id = new_session_id();
    session->bundle = bundle_for(request);
    store_.create_session({session->id, utc_now(), request.to_json(), {}});
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(session->id, session);
    return view_of(*session);
}

SessionView SessionService::get_session(const std::string& id) const {
    auto s = find(id);
    std::shared_lock lock(s->mutex);
    return view_of(*s);
}

Recommendation SessionService::preview(const Session& s, const ActionEntry& entry, double value) {
    const MdpModel& model = *s.bundle->model;
    const StateEntry& current = model.state(s.state);
    Recommendation r;
    r.step = s.step;
    r.stage = stage_for_step(s.bundle->horizon, s.step);
    r.state = current.state;
    r.action = entry.action;
    r.expected_remaining_cost = value;
    r.relaxed = current.relaxed();
    r.limits = current.limits;
    r.terminal = current.terminal();
    for (const Transition& t : entry.outcomes) {
        r.outcomes.push_back({model.state(t.target).state, t.probability, model.state(t.target).cost});
    }
    return r;
}

Recommendation SessionService::recommendation(const std::string& id) const {
    auto s = find(id);
    std::shared_lock lock(s->mutex);
    const SolveResult& sol = s->bundle->solution;
    const int stage = stage_for_step(s->bundle->horizon, s->step);
    const ActionEntry& entry = s->bundle->model->state(s->state).actions.at(sol.policy.action_index(s->state, stage));
    return preview(*s, entry, sol.values.value(s->state, stage));
}

Recommendation SessionService::what_if(const std::string& id, const ActionSet& action) const {
    auto s = find(id);
    std::shared_lock lock(s->mutex);
    const MdpModel& model = *s->bundle->model;
    const StateEntry& current = model.state(s->state);
    const auto k = model.find_action(s->state, action);
    if (!k) {
        const auto why = diagnose_action(model.network(), model.pf(), current.state, action, current.limits);
        const std::string name = why.value_or("feasibility");
        throw ServiceError("infeasible_action", 422, "action " + action.to_string() + " violates " + name, name);
    }
    const ActionEntry& entry = current.actions[*k];
    const int stage = stage_for_step(s->bundle->horizon, s->step);
    double value = current.cost;
    if (stage > 1) {
        for (const Transition& t : entry.outcomes) value += t.probability * s->bundle->solution.values.value(t.target, stage - 1);
    }
    return preview(*s, entry, value);
}

SessionView SessionService::report_outcome(const std::string& id, const ActionSet& attempted,
                                           const std::map<int, bool>& observed, std::optional<int> expected_step) {
    auto s = find(id);
    std::unique_lock lock(s->mutex);
    if (expected_step && *expected_step != s->step) {
        throw ServiceError("stale_step", 409,
                           "session is at step " + std::to_string(s->step) + ", report was for step " +
                               std::to_string(*expected_step));
    }
    const MdpModel& model = *s->bundle->model;
    const StateEntry& current = model.state(s->state);
    if (attempted.empty()) throw ServiceError("invalid_observation", 422, "attempted action is empty");
    const auto k = model.find_action(s->state, attempted);
    if (!k) {
        const auto why = diagnose_action(model.network(), model.pf(), current.state, attempted, current.limits);
        const std::string name = why.value_or("feasibility");
        throw ServiceError("infeasible_action", 422, "action " + attempted.to_string() + " violates " + name, name);
    }
    SystemState next;
    try {
        next = apply_observation(model.network(), current.state, attempted, observed);
    } catch (const std::invalid_argument& e) {
        throw ServiceError("invalid_observation", 422, e.what());
    }
    std::optional<std::uint32_t> target;
    for (const Transition& t : current.actions[*k].outcomes) {
        if (model.state(t.target).state == next) target = t.target;
    }
    if (!target) {
        throw ServiceError("invalid_observation", 422,
                           "observation leads to " + next.to_string() + ", which the model rules out");
    }

    SessionEvent event{s->step + 1, utc_now(), attempted, observed, current.state, next};
    if (!store_.append_event(s->id, {event.seq, event.at, "outcome", event_payload(event)})) {
        throw ServiceError("stale_step", 409, "step " + std::to_string(event.seq) + " was already recorded");
    }
    s->events.push_back(std::move(event));
    s->state = *target;
    s->step += 1;
    return view_of(*s);
}

TopologyView SessionService::topology(const std::string& id) const {
    auto s = find(id);
    std::shared_lock lock(s->mutex);
    const Network& net = s->bundle->model->network();
    TopologyView v;
    v.state = s->bundle->model->state(s->state).state;
    std::vector<bool> energized(static_cast<std::size_t>(net.bus_count()) + 1, false);
    for (int i = 1; i <= net.branch_count(); ++i) {
        const Branch& br = net.branch(i);
        v.branches.push_back({i, br.from_bus, br.to_bus, v.state.at(i).to_string()});
        if (v.state.at(i).is_energized()) {
            energized[static_cast<std::size_t>(br.from_bus)] = true;
            energized[static_cast<std::size_t>(br.to_bus)] = true;
        }
    }
    for (int b = 1; b <= net.bus_count(); ++b) {
        v.buses.push_back({b, net.bus(b).is_grid_tie, net.der_at(b), energized[static_cast<std::size_t>(b)]});
    }
    return v;
}

std::vector<std::string> SessionService::session_ids() const {
    std::lock_guard lock(sessions_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
}

std::size_t SessionService::cached_models() const {
    std::lock_guard lock(const_cast<std::mutex&>(cache_mutex_));
    return cache_.size();
}

std::shared_ptr<const ModelBundle> SessionService::bundle_of(const std::string& id) const { return find(id)->bundle; }

void SessionService::replay() {
    for (const StoredSession& stored : store_.load_all()) {
        auto session = std::make_shared<Session>();
        session->id = stored.id;
        session->bundle = bundle_for(SessionRequest::from_json(stored.request));
        const MdpModel& model = *session->bundle->model;
        for (const StoredEvent& e : stored.events) {
            if (e.kind != "outcome") continue;
            const json p = json::parse(e.payload);
            SessionEvent event;
            event.seq = e.seq;
            event.at = e.at;
            event.attempted = ActionSet(p.at("attempted").get<std::vector<int>>());
            for (const auto& [branch, energized] : p.at("observed").items()) {
                event.observed[std::stoi(branch)] = energized.get<bool>();
            }
            event.from = model.state(session->state).state;
            event.to = apply_observation(model.network(), event.from, event.attempted, event.observed);
            if (event.seq != session->step + 1 || event.to.to_string() != p.at("to").get<std::string>()) {
                throw StoreError("session " + stored.id + " does not replay at event " + std::to_string(e.seq));
            }
            const auto target = model.find(event.to);
            if (!target) throw StoreError("session " + stored.id + " replays into an unknown state");
            session->state = *target;
            session->step = event.seq;
            session->events.push_back(std::move(event));
        }
        sessions_.emplace(session->id, session);
    }
}

}  // namespace dsr
