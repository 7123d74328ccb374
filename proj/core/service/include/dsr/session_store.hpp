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
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

struct sqlite3;

namespace dsr {

class StoreError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct StoredEvent {
    int seq = 0;
    std::string at;       // UTC, ISO 8601
    std::string kind;
    std::string payload;  // JSON text
};

struct StoredSession {
    std::string id;
    std::string created_at;
    std::string request;  // JSON text of the normalized create request
    std::vector<StoredEvent> events;  // ascending seq
};

/// Append-only session log in one SQLite file. Every write is its own
/// committed transaction; safe to call from several threads.
class SessionStore {
  public:
    explicit SessionStore(const std::string& path);
    ~SessionStore();
    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    void create_session(const StoredSession& session);
    /// Returns false when an event with this seq already exists for the session.
    bool append_event(const std::string& session_id, const StoredEvent& event);
    std::vector<StoredSession> load_all() const;

  private:
    void exec(const char* sql) const;

    sqlite3* db_ = nullptr;
    mutable std::mutex mutex_;
};

}  // namespace dsr
