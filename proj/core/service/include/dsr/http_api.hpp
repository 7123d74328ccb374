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

#include <memory>
#include <optional>
#include <string>

#include "dsr/session_service.hpp"

namespace dsr {

/// JSON forms shared by the HTTP layer and its tests.
std::string session_view_json(const SessionView& view);
std::string recommendation_json(const Recommendation& rec);
std::string topology_json(const TopologyView& view);
std::string error_json(const ServiceError& error);

/// HTTP front of a SessionService:
///   POST /sessions, GET /sessions/{id}, GET /sessions/{id}/recommendation,
///   POST /sessions/{id}/outcome, POST /sessions/{id}/what-if, GET /sessions/{id}/topology.
/// Files under `static_dir` (when it exists) are served at /.
class HttpApi {
  public:
    explicit HttpApi(SessionService& service, std::optional<std::string> static_dir = std::nullopt);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds `host:port` (port 0 picks a free one) and returns the bound port, -1 on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop(); requires a successful bind().
    bool serve();
    /// Blocks until serve() is accepting connections.
    void wait_until_ready() const;
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace dsr
