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

#include "dsr/http_api.hpp"

#include <filesystem>

#include <httplib.h>
#include <json.hpp>

namespace dsr {

using nlohmann::json;

namespace {

json limits_json(const VoltageLimits& l) { return {{"vmin", l.v_min}, {"vmax", l.v_max}}; }

json recommendation_doc(const Recommendation& r) {
    json outcomes = json::array();
    for (const OutcomePreview& o : r.outcomes) {
        outcomes.push_back({{"state", o.state.to_string()}, {"probability", o.probability}, {"cost", o.cost}});
    }
    return {{"step", r.step},
            {"stage", r.stage},
            {"state", r.state.to_string()},
            {"action", r.action.branches()},
            {"expected_remaining_cost", r.expected_remaining_cost},
            {"outcomes", outcomes},
            {"relaxed", r.relaxed},
            {"limits", limits_json(r.limits)},
            {"terminal", r.terminal}};
}

ActionSet parse_action(const json& j) {
    if (!j.is_array()) throw ServiceError("bad_request", 400, "action must be an array of branch ids");
    std::vector<int> ids;
    for (const json& v : j) {
        if (!v.is_number_integer()) throw ServiceError("bad_request", 400, "action must be an array of branch ids");
        ids.push_back(v.get<int>());
    }
    const std::size_t n = ids.size();
    ActionSet a(std::move(ids));
    if (a.size() != n) throw ServiceError("bad_request", 400, "action lists a branch twice");
    return a;
}

json parse_body(const httplib::Request& req) {
    try {
        json doc = json::parse(req.body);
        if (!doc.is_object()) throw ServiceError("bad_request", 400, "request body must be a JSON object");
        return doc;
    } catch (const json::parse_error& e) {
        throw ServiceError("bad_request", 400, std::string("request body is not valid JSON: ") + e.what());
    }
}

std::map<int, bool> parse_observed(const json& j) {
    if (!j.is_object()) throw ServiceError("bad_request", 400, "observed must map branch ids to outcomes");
    std::map<int, bool> out;
    for (const auto& [key, value] : j.items()) {
        int branch = 0;
        try {
            std::size_t used = 0;
            branch = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw ServiceError("bad_request", 400, "observed key '" + key + "' is not a branch id");
        }
        if (value == "energized" || value == true) {
            out[branch] = true;
        } else if (value == "damaged" || value == false) {
            out[branch] = false;
        } else {
            throw ServiceError("bad_request", 400, "observed values are \"energized\" or \"damaged\"");
        }
    }
    return out;
}

}  // namespace

std::string session_view_json(const SessionView& v) {
    json events = json::array();
    for (const SessionEvent& e : v.events) {
        json observed = json::object();
        for (const auto& [branch, energized] : e.observed) {
            observed[std::to_string(branch)] = energized ? "energized" : "damaged";
        }
        events.push_back({{"seq", e.seq},
                          {"at", e.at},
                          {"attempted", e.attempted.branches()},
                          {"observed", observed},
                          {"from", e.from.to_string()},
                          {"to", e.to.to_string()}});
    }
    return json{{"id", v.id},
                {"status", to_string(v.status)},
                {"state", v.state.to_string()},
                {"step", v.step},
                {"horizon", v.horizon},
                {"bus_count", v.bus_count},
                {"model_key", v.model_key},
                {"events", events}}
        .dump();
}

std::string recommendation_json(const Recommendation& rec) { return recommendation_doc(rec).dump(); }

std::string topology_json(const TopologyView& v) {
    json buses = json::array();
    for (const auto& b : v.buses) {
        json bus = {{"id", b.id}, {"grid_tie", b.grid_tie}, {"energized", b.energized}};
        bus["der"] = b.der > 0 ? json(b.der) : json(nullptr);
        buses.push_back(bus);
    }
    json branches = json::array();
    for (const auto& br : v.branches) {
        branches.push_back({{"id", br.id}, {"from", br.from}, {"to", br.to}, {"status", br.status}});
    }
    return json{{"state", v.state.to_string()}, {"buses", buses}, {"branches", branches}}.dump();
}

std::string error_json(const ServiceError& e) {
    json doc = {{"code", e.code()}, {"message", e.what()}};
    if (e.constraint()) doc["constraint"] = *e.constraint();
    return doc.dump();
}

struct HttpApi::Impl {
    SessionService& service;
    httplib::Server server;

    explicit Impl(SessionService& s) : service(s) {}

    template <typename Fn>
    httplib::Server::Handler wrap(int ok_status, Fn fn) {
        return [this, ok_status, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                res.set_content(fn(req), "application/json");
                res.status = ok_status;
            } catch (const ServiceError& e) {
                res.status = e.http_status();
                res.set_content(error_json(e), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(error_json(ServiceError("internal", 500, e.what())), "application/json");
            }
        };
    }
};

HttpApi::HttpApi(SessionService& service, std::optional<std::string> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto& svc = impl_->service;

    srv.Post("/sessions", impl_->wrap(201, [&svc](const httplib::Request& req) {
        return session_view_json(svc.create_session(SessionRequest::from_json(req.body)));
    }));
    srv.Get("/sessions/:id", impl_->wrap(200, [&svc](const httplib::Request& req) {
        return session_view_json(svc.get_session(req.path_params.at("id")));
    }));
    srv.Get("/sessions/:id/recommendation", impl_->wrap(200, [&svc](const httplib::Request& req) {
        return recommendation_json(svc.recommendation(req.path_params.at("id")));
    }));
    srv.Get("/sessions/:id/topology", impl_->wrap(200, [&svc](const httplib::Request& req) {
        return topology_json(svc.topology(req.path_params.at("id")));
    }));
    srv.Post("/sessions/:id/outcome", impl_->wrap(200, [&svc](const httplib::Request& req) {
        const json body = parse_body(req);
        if (!body.contains("attempted") || !body.contains("observed")) {
            throw ServiceError("bad_request", 400, "outcome needs 'attempted' and 'observed'");
        }
        std::optional<int> step;
        if (body.contains("step")) {
            if (!body["step"].is_number_integer()) throw ServiceError("bad_request", 400, "step must be an integer");
            step = body["step"].get<int>();
        }
        return session_view_json(svc.report_outcome(req.path_params.at("id"), parse_action(body["attempted"]),
                                                    parse_observed(body["observed"]), step));
    }));
    srv.Post("/sessions/:id/what-if", impl_->wrap(200, [&svc](const httplib::Request& req) {
        const json body = parse_body(req);
        if (!body.contains("action")) throw ServiceError("bad_request", 400, "what-if needs 'action'");
        return recommendation_json(svc.what_if(req.path_params.at("id"), parse_action(body["action"])));
    }));

    if (static_dir && std::filesystem::is_directory(*static_dir)) srv.set_mount_point("/", *static_dir);
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpApi::serve() { return impl_->server.listen_after_bind(); }

void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpApi::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace dsr
