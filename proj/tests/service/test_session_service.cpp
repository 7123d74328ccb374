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

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dsr/session_service.hpp"
#include "fixtures.hpp"
#include "store_dir.hpp"

using namespace dsr;
using nlohmann::json;

namespace {

SystemState st(const char* text) { return SystemState::parse(text); }

json fixture_json(const std::string& name) {
    std::ifstream in(testing::fixture_path(name));
    return json::parse(in);
}

std::string six_bus_body(double pf = 0.4) {
    return json{{"network", fixture_json("six_bus.json")}, {"pf_uniform", pf}}.dump();
}

/// Drives a fresh six-bus session to s1 = [E0,U,U,U,E1].
std::string session_at_s1(SessionService& svc) {
    const std::string id = svc.create_session(SessionRequest::from_json(six_bus_body())).id;
    svc.report_outcome(id, {1, 5}, {{1, true}, {5, true}});
    REQUIRE(svc.get_session(id).state == st("E0,U,U,U,E1"));
    return id;
}

std::string session_at_s2(SessionService& svc) {
    const std::string id = session_at_s1(svc);
    svc.report_outcome(id, {2}, {{2, true}});
    REQUIRE(svc.get_session(id).state == st("E0,E0,U,U,E1"));
    return id;
}

std::string session_at_s7(SessionService& svc) {
    const std::string id = session_at_s1(svc);
    svc.report_outcome(id, {2}, {{2, false}});
    REQUIRE(svc.get_session(id).state == st("E0,D,U,U,E1"));
    return id;
}

std::map<std::string, double> preview_map(const Recommendation& r) {
    std::map<std::string, double> out;
    for (const auto& o : r.outcomes) out[o.state.to_string()] += o.probability;
    return out;
}

void check_error(const std::function<void()>& fn, const std::string& code, int status) {
    try {
        fn();
        FAIL("expected ServiceError " << code);
    } catch (const ServiceError& e) {
        CHECK(e.code() == code);
        CHECK(e.http_status() == status);
    }
}

}  // namespace

TEST_CASE("new session starts all-unknown with a recommendation") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const SessionView v = svc.create_session(SessionRequest::from_json(six_bus_body()));
    CHECK(v.state == st("U,U,U,U,U"));
    CHECK(v.step == 0);
    CHECK(v.horizon == 5);
    CHECK(v.status == SessionStatus::active);
    const Recommendation r = svc.recommendation(v.id);
    CHECK_FALSE(r.action.empty());
    const auto bundle = svc.bundle_of(v.id);
    CHECK(bundle->model->find_action(0, r.action).has_value());
}

TEST_CASE("at s2 {3} and {3,4} tie; {3,4} previews the four outcomes of Post(s2, {3,4})") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s2(svc);
    // Branch 4 joins two already energized buses, so it adds nothing here and
    // the smaller action wins the tie.
    const Recommendation rec = svc.recommendation(id);
    CHECK(rec.action == ActionSet{3});
    const Recommendation r = svc.what_if(id, {3, 4});
    CHECK(r.expected_remaining_cost == doctest::Approx(rec.expected_remaining_cost).epsilon(1e-12));
    const auto m = preview_map(r);
    REQUIRE(m.size() == 4);
    CHECK(m.at("E0,E0,E0,E0,E0") == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(m.at("E0,E0,E0,D,E1") == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(m.at("E0,E0,D,E0,E0") == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(m.at("E0,E0,D,D,E1") == doctest::Approx(0.16).epsilon(1e-12));
    CHECK_FALSE(r.relaxed);
    CHECK_FALSE(r.terminal);
    for (const auto& o : r.outcomes) CHECK(o.cost == (o.state.at(3).is_damaged() ? 1 : 0));
}

TEST_CASE("what-if {3} at s7 previews Post(s7, {3})") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s7(svc);
    const Recommendation w = svc.what_if(id, {3});
    const auto m = preview_map(w);
    REQUIRE(m.size() == 2);
    CHECK(m.at("E0,D,E0,U,E1") == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(m.at("E0,D,D,U,E1") == doctest::Approx(0.4).epsilon(1e-12));
    // Branch 4 can still pick up bus 4 from the DER side, so {3,4} beats {3}.
    const Recommendation r = svc.recommendation(id);
    CHECK(r.action == ActionSet{3, 4});
    CHECK(r.expected_remaining_cost < w.expected_remaining_cost);
}

TEST_CASE("reported outcomes advance the session, C1 merge included") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    {
        const std::string id = session_at_s2(svc);
        const SessionView v = svc.report_outcome(id, {3, 4}, {{3, true}, {4, false}});
        CHECK(v.state == st("E0,E0,E0,D,E1"));
        CHECK(v.step == 3);
        CHECK(v.events.size() == 3);
        CHECK(v.events.back().from == st("E0,E0,U,U,E1"));
    }
    {
        const std::string id = session_at_s2(svc);
        const SessionView v = svc.report_outcome(id, {3, 4}, {{3, false}, {4, true}});
        CHECK(v.state == st("E0,E0,D,E0,E0"));
        CHECK(v.status == SessionStatus::completed);
    }
}

TEST_CASE("observations must cover exactly the attempted branches") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s2(svc);
    check_error([&] { svc.report_outcome(id, {3, 4}, {{3, true}, {4, true}, {5, true}}); }, "invalid_observation", 422);
    check_error([&] { svc.report_outcome(id, {3, 4}, {{3, true}}); }, "invalid_observation", 422);
    check_error([&] { svc.report_outcome(id, {3}, {{4, true}}); }, "invalid_observation", 422);
    check_error([&] { svc.report_outcome(id, {}, {}); }, "invalid_observation", 422);
    CHECK(svc.get_session(id).step == 2);
}

TEST_CASE("infeasible actions name the violated constraint") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s1(svc);
    try {
        svc.what_if(id, {2, 3});
        FAIL("expected T1 violation");
    } catch (const ServiceError& e) {
        CHECK(e.code() == "infeasible_action");
        CHECK(std::string(e.what()).find("violates T1") != std::string::npos);
        REQUIRE(e.constraint().has_value());
        CHECK(*e.constraint() == "T1");
    }
    try {
        svc.report_outcome(id, {2, 3}, {{2, true}, {3, true}});
        FAIL("expected T1 violation");
    } catch (const ServiceError& e) {
        CHECK(e.constraint() == std::optional<std::string>("T1"));
    }
    CHECK(svc.get_session(id).step == 1);
}

TEST_CASE("what-if leaves the session untouched") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s2(svc);
    const SessionView before = svc.get_session(id);
    const Recommendation rec = svc.recommendation(id);
    const Recommendation w3 = svc.what_if(id, {3});
    CHECK(w3.outcomes.size() == 2);
    CHECK(w3.expected_remaining_cost >= rec.expected_remaining_cost - 1e-12);
    const Recommendation w4 = svc.what_if(id, {4});
    CHECK(w4.expected_remaining_cost > rec.expected_remaining_cost);
    const SessionView after = svc.get_session(id);
    CHECK(after.state == before.state);
    CHECK(after.step == before.step);
    CHECK(after.events.size() == before.events.size());
}

TEST_CASE("terminal session recommends the empty action at zero cost") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s2(svc);
    svc.report_outcome(id, {3, 4}, {{3, true}, {4, true}});
    const Recommendation r = svc.recommendation(id);
    CHECK(r.terminal);
    CHECK(r.action.empty());
    CHECK(r.expected_remaining_cost == 0.0);
    CHECK(svc.what_if(id, {}).expected_remaining_cost == 0.0);
    CHECK(svc.get_session(id).status == SessionStatus::completed);
}

TEST_CASE("stale step reports are rejected") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s2(svc);
    check_error([&] { svc.report_outcome(id, {3, 4}, {{3, true}, {4, true}}, 1); }, "stale_step", 409);
    svc.report_outcome(id, {3, 4}, {{3, true}, {4, false}}, 2);
    check_error([&] { svc.report_outcome(id, {3}, {{3, true}}, 2); }, "stale_step", 409);
}

TEST_CASE("concurrent reports for one step: exactly one wins") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s2(svc);
    std::atomic<int> wins{0}, stale{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < 4; ++i) {
        pool.emplace_back([&] {
            try {
                svc.report_outcome(id, {3, 4}, {{3, true}, {4, false}}, 2);
                ++wins;
            } catch (const ServiceError& e) {
                if (e.code() == "stale_step") ++stale;
            }
        });
    }
    for (auto& t : pool) t.join();
    CHECK(wins == 1);
    CHECK(stale == 3);
    CHECK(svc.get_session(id).step == 3);
}

TEST_CASE("sessions replay from the store after a restart") {
    testing::TempDir dir;
    std::string id;
    SessionView before;
    {
        SessionService svc({dir.file("s.db")});
        id = session_at_s2(svc);
        svc.report_outcome(id, {3, 4}, {{3, false}, {4, false}});
        before = svc.get_session(id);
    }
    SessionService again({dir.file("s.db")});
    const SessionView after = again.get_session(id);
    CHECK(after.state == before.state);
    CHECK(after.step == before.step);
    REQUIRE(after.events.size() == before.events.size());
    for (std::size_t i = 0; i < after.events.size(); ++i) {
        CHECK(after.events[i].at == before.events[i].at);
        CHECK(after.events[i].to == before.events[i].to);
    }
    CHECK(again.recommendation(id).action == ActionSet{});
}

TEST_CASE("identical requests share one cached model") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const SessionView a = svc.create_session(SessionRequest::from_json(six_bus_body()));
    const SessionView b = svc.create_session(SessionRequest::from_json(six_bus_body()));
    CHECK(a.id != b.id);
    CHECK(a.model_key == b.model_key);
    CHECK(svc.cached_models() == 1);
    CHECK(svc.bundle_of(a.id) == svc.bundle_of(b.id));
    svc.create_session(SessionRequest::from_json(six_bus_body(0.3)));
    CHECK(svc.cached_models() == 2);
}

TEST_CASE("malformed requests create no session") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    check_error([] { SessionRequest::from_json("{not json"); }, "bad_request", 400);
    json bad = fixture_json("six_bus.json");
    bad["branches"][0]["to"] = 1;
    check_error([&] { SessionRequest::from_json(json{{"network", bad}, {"pf_uniform", 0.4}}.dump()); }, "validation",
                422);
    check_error([] { SessionRequest::from_json(json{{"network", fixture_json("six_bus.json")}}.dump()); }, "validation", 422);
    check_error(
        [] {
            SessionRequest::from_json(json{{"network", fixture_json("six_bus.json")}, {"pf", {0.1, 0.2}}}.dump());
        },
        "validation", 422);
    check_error(
        [] {
            SessionRequest::from_json(
                json{{"network", fixture_json("six_bus.json")}, {"pf_uniform", 0.4}, {"options", {{"speed", 1}}}}.dump());
        },
        "validation", 422);
    CHECK(svc.session_ids().empty());
    SessionService again({dir.file("s.db")});
    CHECK(again.session_ids().empty());
}

TEST_CASE("state budget overflow is reported and nothing persists") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string body = json{{"network", fixture_json("six_bus.json")},
                                  {"pf_uniform", 0.4},
                                  {"options", {{"state_budget", 3}}}}
                                 .dump();
    check_error([&] { svc.create_session(SessionRequest::from_json(body)); }, "budget_exceeded", 422);
    CHECK(svc.session_ids().empty());
}

TEST_CASE("unknown sessions are not found") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    check_error([&] { svc.get_session("nope"); }, "not_found", 404);
    check_error([&] { svc.recommendation("nope"); }, "not_found", 404);
}

TEST_CASE("topology lists buses and branches with live statuses") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = session_at_s7(svc);
    const TopologyView t = svc.topology(id);
    REQUIRE(t.buses.size() == 6);
    REQUIRE(t.branches.size() == 5);
    CHECK(t.buses[0].grid_tie);
    CHECK(t.buses[5].der == 1);
    CHECK(t.branches[1].status == "D");
    CHECK(t.branches[4].status == "E1");
    std::vector<bool> energized;
    for (const auto& b : t.buses) energized.push_back(b.energized);
    CHECK(energized == std::vector<bool>{true, true, false, false, true, true});
}

TEST_CASE("expected remaining cost never rises along an all-success run") {
    testing::TempDir dir;
    SessionService svc({dir.file("s.db")});
    const std::string id = svc.create_session(SessionRequest::from_json(six_bus_body(0.3))).id;
    double last = svc.recommendation(id).expected_remaining_cost;
    for (int guard = 0; guard < 10; ++guard) {
        const Recommendation r = svc.recommendation(id);
        CHECK(r.expected_remaining_cost <= last + 1e-12);
        last = r.expected_remaining_cost;
        if (r.action.empty()) break;
        std::map<int, bool> ok;
        for (int b : r.action.branches()) ok[b] = true;
        svc.report_outcome(id, r.action, ok);
    }
    CHECK(svc.get_session(id).status == SessionStatus::completed);
    const auto bundle = svc.bundle_of(id);
    CHECK(bundle->model->state(*bundle->model->find(svc.get_session(id).state)).cost == 0);
}
