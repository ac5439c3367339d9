#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "commentloop/comments.hpp"
#include "commentloop/gateway.hpp"
#include "commentloop/refinement.hpp"

namespace httplib {
class Server;
}

namespace commentloop::session {

class StoreFailure : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class Conflict : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

enum class State { created, generated, refining, done };

std::string_view to_string(State s);

/// Random 128-bit id, RFC 4648 base32 without padding, lowercase (26 characters).
std::string new_session_id();
bool valid_session_id(std::string_view id);

/// One append-only JSONL event file per session. Every event is a single write followed by fsync.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path dir);

    /// Fails if the session file already exists.
    void create(const std::string& id, const nlohmann::json& event);
    void append(const std::string& id, const nlohmann::json& event);
    /// Complete events in order. A torn final line is discarded and truncated away.
    std::vector<nlohmann::json> read(const std::string& id) const;
    std::vector<std::string> list() const;
    std::filesystem::path file(const std::string& id) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

struct Iteration {
    int index = 0;
    CommentedView view;
    std::vector<SubmittedComment> submitted;
    std::vector<CommentEdit> edits;
    std::optional<CommentEdit> applied;
    std::vector<CommentEdit> pending;
    std::optional<Span> replaced_span;
    std::optional<Span> regenerated_span;
    nlohmann::json transcript = nlohmann::json::array();
    std::string ts;
};

struct SessionData {
    std::string id;
    std::string problem;
    std::string task_id;
    int max_rounds = 3;
    std::string created_at;
    std::string updated_at;
    std::vector<Iteration> iterations;
    std::vector<nlohmann::json> errors;

    State state() const;
    int rounds_used() const { return iterations.empty() ? 0 : static_cast<int>(iterations.size()) - 1; }
};

/// Rebuilds a session from the snapshots stored in its events.
SessionData restore(const std::vector<nlohmann::json>& events);

/// Re-derives every iteration's unit by running the engines against the backend responses recorded
/// in the events. The result has one unit per iteration.
std::vector<SourceUnit> replay(const std::vector<nlohmann::json>& events);

/// Replaces every occurrence of each secret in string values, and drops authorization headers.
void redact(nlohmann::json& j, const std::vector<std::string>& secrets);

struct ServiceOptions {
    int max_rounds = 3;
    RefinementOptions refinement;
};

/// The interactive loop over persistent sessions. Operations on one session are serialized;
/// different sessions proceed independently.
class SessionService {
public:
    SessionService(SessionStore& store, Gateway& gateway, ServiceOptions options = {});

    nlohmann::json create(const std::string& problem, const std::string& task_id = {});
    nlohmann::json generate(const std::string& id);
    nlohmann::json view(const std::string& id) const;
    nlohmann::json submit(const std::string& id, const std::vector<SubmittedComment>& comments);
    nlohmann::json history(const std::string& id) const;
    /// The raw event log, one JSON object per line.
    std::string export_log(const std::string& id) const;
    std::size_t size() const;

private:
    struct Entry {
        std::mutex op;
        mutable std::mutex data_mutex;
        SessionData data;
        bool busy = false;
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    nlohmann::json view_json(const SessionData& data, bool busy) const;
    void record_error(Entry& entry, const std::string& op, const std::string& message, InteractionLog& transcript);
    nlohmann::json transcript_json(const InteractionLog& log) const;

    SessionStore& store_;
    Gateway& gateway_;
    ServiceOptions options_;
    std::vector<std::string> secrets_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// JSON-over-HTTP front end for a SessionService.
class HttpApi {
public:
    explicit HttpApi(SessionService& service);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void serve();
    void stop();

private:
    SessionService& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace commentloop::session
