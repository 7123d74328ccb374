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
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dsr/http_api.hpp"
#include "fixtures.hpp"
#include "store_dir.hpp"

using namespace dsr;
using nlohmann::json;

namespace {

json six_bus_request() {
    std::ifstream in(testing::fixture_path("six_bus.json"));
    return {{"network", json::parse(in)}, {"pf_uniform", 0.4}};
}

/// Service + HTTP server on a free loopback port for one test.
class Harness {
  public:
    explicit Harness(const std::string& store) : service_({store}), api_(service_) {
        port_ = api_.bind("127.0.0.1", 0);
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { api_.serve(); });
        api_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }
    ~Harness() {
        api_.stop();
        thread_.join();
    }

    httplib::Client& client() { return *client_; }

    httplib::Result post(const std::string& path, const json& body) {
        return client_->Post(path, body.dump(), "application/json");
    }

  private:
    SessionService service_;
    HttpApi api_;
    int port_ = -1;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_CASE("POST /sessions creates a session") {
    testing::TempDir dir;
    Harness h(dir.file("s.db"));
    auto res = h.post("/sessions", six_bus_request());
    REQUIRE(res);
    CHECK(res->status == 201);
    const json doc = json::parse(res->body);
    CHECK(doc["id"].get<std::string>().size() == 32);
    CHECK(doc["state"] == "U,U,U,U,U");
    CHECK(doc["status"] == "active");
    CHECK(doc["step"] == 0);
    CHECK(doc["events"].empty());
}

TEST_CASE("unknown session is a structured 404") {
    testing::TempDir dir;
    Harness h(dir.file("s.db"));
    for (const char* path : {"/sessions/abc", "/sessions/abc/recommendation", "/sessions/abc/topology"}) {
        auto res = h.client().Get(path);
        REQUIRE(res);
        CHECK(res->status == 404);
        const json doc = json::parse(res->body);
        CHECK(doc["code"] == "not_found");
        CHECK(doc["message"].is_string());
        CHECK_FALSE(doc.contains("constraint"));
    }
}

TEST_CASE("walk a session over HTTP to s2 and through its outcomes") {
    testing::TempDir dir;
    Harness h(dir.file("s.db"));
    const std::string id = json::parse(h.post("/sessions", six_bus_request())->body)["id"];
    const std::string base = "/sessions/" + id;

    auto res = h.post(base + "/outcome", {{"step", 0}, {"attempted", {1, 5}}, {"observed", {{"1", "energized"}, {"5", "energized"}}}});
    REQUIRE(res);
    CHECK(res->status == 200);
    res = h.post(base + "/outcome", {{"attempted", {2}}, {"observed", {{"2", "energized"}}}});
    CHECK(json::parse(res->body)["state"] == "E0,E0,U,U,E1");

    res = h.client().Get(base + "/recommendation");
    REQUIRE(res);
    const json rec = json::parse(res->body);
    CHECK(rec["action"] == json{3});
    CHECK(rec["outcomes"].size() == 2);
    CHECK(rec["relaxed"] == false);

    res = h.post(base + "/what-if", {{"action", {3}}});
    const json w = json::parse(res->body);
    CHECK(res->status == 200);
    CHECK(w["outcomes"].size() == 2);
    CHECK(w["expected_remaining_cost"].get<double>() >= rec["expected_remaining_cost"].get<double>() - 1e-12);

    res = h.post(base + "/outcome",
                 {{"step", 2}, {"attempted", {3, 4}}, {"observed", {{"3", "damaged"}, {"4", "energized"}}}});
    const json after = json::parse(res->body);
    CHECK(after["state"] == "E0,E0,D,E0,E0");
    CHECK(after["events"].size() == 3);
    CHECK(after["events"][2]["observed"]["3"] == "damaged");

    res = h.client().Get(base + "/topology");
    const json topo = json::parse(res->body);
    CHECK(topo["branches"][4]["status"] == "E0");
    CHECK(topo["buses"][5]["der"] == 1);
    CHECK(topo["buses"][2]["energized"] == false);

    res = h.post(base + "/outcome", {{"step", 2}, {"attempted", {3}}, {"observed", {{"3", "damaged"}}}});
    CHECK(res->status == 409);
    CHECK(json::parse(res->body)["code"] == "stale_step");
}

TEST_CASE("infeasible what-if carries the constraint name") {
    testing::TempDir dir;
    Harness h(dir.file("s.db"));
    const std::string id = json::parse(h.post("/sessions", six_bus_request())->body)["id"];
    h.post("/sessions/" + id + "/outcome", {{"attempted", {1, 5}}, {"observed", {{"1", "energized"}, {"5", "energized"}}}});
    auto res = h.post("/sessions/" + id + "/what-if", {{"action", {2, 3}}});
    REQUIRE(res);
    CHECK(res->status == 422);
    const json doc = json::parse(res->body);
    CHECK(doc["code"] == "infeasible_action");
    CHECK(doc["constraint"] == "T1");
    CHECK(doc["message"].get<std::string>().find("violates T1") != std::string::npos);
}

TEST_CASE("malformed bodies are rejected") {
    testing::TempDir dir;
    Harness h(dir.file("s.db"));
    auto res = h.client().Post("/sessions", "{oops", "application/json");
    CHECK(res->status == 400);
    res = h.post("/sessions", {{"network", {{"buses", json::array()}}}, {"pf_uniform", 0.1}});
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["code"] == "validation");
    const std::string id = json::parse(h.post("/sessions", six_bus_request())->body)["id"];
    res = h.post("/sessions/" + id + "/outcome", {{"attempted", {1}}, {"observed", {{"1", "maybe"}}}});
    CHECK(res->status == 400);
    res = h.post("/sessions/" + id + "/what-if", {{"action", "1"}});
    CHECK(res->status == 400);
}
