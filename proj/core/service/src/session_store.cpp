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

#include "dsr/session_store.hpp"

#include <map>

#include <sqlite3.h>

namespace dsr {

namespace {

class Statement {
  public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
            throw StoreError(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    void bind(int index, const std::string& text) {
        sqlite3_bind_text(stmt_, index, text.c_str(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
    }
    void bind(int index, int value) { sqlite3_bind_int(stmt_, index, value); }
    int step() { return sqlite3_step(stmt_); }
    std::string text(int column) const {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, column));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, column))) : std::string();
    }
    int integer(int column) const { return sqlite3_column_int(stmt_, column); }
    const char* error() const { return sqlite3_errmsg(db_); }

  private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

}  // namespace

SessionStore::SessionStore(const std::string& path) {
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw StoreError("cannot open session store '" + path + "': " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    exec("CREATE TABLE IF NOT EXISTS sessions ("
         " id TEXT PRIMARY KEY, created_at TEXT NOT NULL, request TEXT NOT NULL)");
    exec("CREATE TABLE IF NOT EXISTS events ("
         " session_id TEXT NOT NULL REFERENCES sessions(id), seq INTEGER NOT NULL, at TEXT NOT NULL,"
         " kind TEXT NOT NULL, payload TEXT NOT NULL, PRIMARY KEY (session_id, seq))");
}

SessionStore::~SessionStore() { sqlite3_close(db_); }

void SessionStore::exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StoreError("sqlite: " + msg);
    }
}

void SessionStore::create_session(const StoredSession& session) {
    std::lock_guard lock(mutex_);
    exec("BEGIN IMMEDIATE");
    try {
        Statement insert(db_, "INSERT INTO sessions (id, created_at, request) VALUES (?, ?, ?)");
        insert.bind(1, session.id);
        insert.bind(2, session.created_at);
        insert.bind(3, session.request);
        if (insert.step() != SQLITE_DONE) throw StoreError(std::string("sqlite insert session: ") + insert.error());
        for (const StoredEvent& e : session.events) {
            Statement ev(db_, "INSERT INTO events (session_id, seq, at, kind, payload) VALUES (?, ?, ?, ?, ?)");
            ev.bind(1, session.id);
            ev.bind(2, e.seq);
            ev.bind(3, e.at);
            ev.bind(4, e.kind);
            ev.bind(5, e.payload);
            if (ev.step() != SQLITE_DONE) throw StoreError(std::string("sqlite insert event: ") + ev.error());
        }
        exec("COMMIT");
    } catch (...) {
        exec("ROLLBACK");
        throw;
    }
}

bool SessionStore::append_event(const std::string& session_id, const StoredEvent& event) {
    std::lock_guard lock(mutex_);
    Statement ev(db_, "INSERT INTO events (session_id, seq, at, kind, payload) VALUES (?, ?, ?, ?, ?)");
    ev.bind(1, session_id);
    ev.bind(2, event.seq);
    ev.bind(3, event.at);
    ev.bind(4, event.kind);
    ev.bind(5, event.payload);
    const int rc = ev.step();
    if (rc == SQLITE_CONSTRAINT) return false;
    if (rc != SQLITE_DONE) throw StoreError(std::string("sqlite append event: ") + ev.error());
    return true;
}

std::vector<StoredSession> SessionStore::load_all() const {
    std::lock_guard lock(mutex_);
    std::vector<StoredSession> out;
    std::map<std::string, std::size_t> index;
    Statement sessions(db_, "SELECT id, created_at, request FROM sessions ORDER BY created_at, id");
    while (sessions.step() == SQLITE_ROW) {
        index[sessions.text(0)] = out.size();
        out.push_back({sessions.text(0), sessions.text(1), sessions.text(2), {}});
    }
    Statement events(db_, "SELECT session_id, seq, at, kind, payload FROM events ORDER BY session_id, seq");
    while (events.step() == SQLITE_ROW) {
        auto it = index.find(events.text(0));
        if (it == index.end()) throw StoreError("event for unknown session " + events.text(0));
        out[it->second].events.push_back({events.integer(1), events.text(2), events.text(3), events.text(4)});
    }
    return out;
}

}  // namespace dsr
