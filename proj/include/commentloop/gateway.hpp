#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "commentloop/comments.hpp"
#include "commentloop/refinement.hpp"
#include "commentloop/source.hpp"

namespace commentloop {

enum class Role { generator, commenter, refiner };

std::string_view to_string(Role r);
Role role_from(std::string_view s);

class BackendError : public Error {
public:
    enum class Kind { timeout, auth_failure, rate_limited, server_error, malformed_response, http_error, mock_miss };

    BackendError(Kind kind, const std::string& what);
    Kind kind() const { return kind_; }
    bool retryable() const { return kind_ == Kind::timeout || kind_ == Kind::rate_limited || kind_ == Kind::server_error; }

private:
    Kind kind_;
};

std::string_view to_string(BackendError::Kind k);

struct BackendConfig {
    Role role = Role::generator;
    std::string backend = "mock";  // "mock" or "http"
    std::string endpoint;
    std::string api = "chat";      // "chat" or "completion" request shape
    std::string auth_env;          // name of the environment variable holding the key
    std::string model_name;
    double temperature = 1.0;
    double top_p = 1.0;
    int max_output = 512;
    double timeout_s = 60.0;
    int retries = 3;
    double backoff_base_s = 1.0;
    std::vector<std::string> stop;

    static BackendConfig defaults(Role role);
    void validate() const;
    bool live() const { return backend == "http"; }
};

BackendConfig backend_config_from_json(Role role, const nlohmann::json& j);
/// Never includes the credential itself, only the variable name.
nlohmann::json to_json(const BackendConfig& cfg);

struct BackendRequest {
    Role role = Role::generator;
    std::string prompt;
    std::string tag;  // lookup key for scripted backends: task id, statement text, or edited comment
    std::map<std::string, std::string> fields;
    std::vector<std::string> stop;
    int max_output = 0;
};

/// Append-only, thread-safe record of backend traffic. Optionally mirrors to a JSONL file
/// and forwards every record to a parent log.
class InteractionLog {
public:
    InteractionLog() = default;
    explicit InteractionLog(std::optional<std::filesystem::path> file);
    explicit InteractionLog(InteractionLog* parent) : parent_(parent) {}

    void append(nlohmann::json record);
    std::vector<nlohmann::json> records() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> records_;
    std::optional<std::filesystem::path> file_;
    InteractionLog* parent_ = nullptr;
};

/// Canned responses keyed by role and either a prompt hash or a tag, with optional templates.
class MockScript {
public:
    struct RoleScript {
        std::map<std::string, std::string> by_tag;
        std::map<std::string, std::string> by_hash;
        std::optional<std::string> template_text;
        int delay_ms = 0;
    };

    MockScript() = default;
    static MockScript from_json(const nlohmann::json& j);
    static MockScript load(const std::filesystem::path& file);
    /// Built-in offline script: the commenter describes each statement as "executes: <statement>".
    static MockScript builtin();

    RoleScript& role(Role r) { return roles_[r]; }
    const RoleScript* find(Role r) const;

    /// Throws BackendError(mock_miss) when nothing matches.
    std::string lookup(const BackendRequest& request) const;

private:
    std::map<Role, RoleScript> roles_;
};

/// FNV-1a 64 of the whitespace-normalized prompt, as 16 hex digits.
std::string prompt_hash(std::string_view prompt);

class Transport {
public:
    virtual ~Transport() = default;
    /// One attempt. Throws BackendError on failure. `exchange` receives the raw request/response bodies.
    virtual std::string send(const BackendRequest& request, const BackendConfig& cfg, nlohmann::json& exchange) = 0;
};

class MockTransport : public Transport {
public:
    explicit MockTransport(std::shared_ptr<const MockScript> script) : script_(std::move(script)) {}
    std::string send(const BackendRequest& request, const BackendConfig& cfg, nlohmann::json& exchange) override;

private:
    std::shared_ptr<const MockScript> script_;
};

/// OpenAI-style JSON over HTTP(S): "chat" posts messages, "completion" posts a raw prompt.
class HttpTransport : public Transport {
public:
    std::string send(const BackendRequest& request, const BackendConfig& cfg, nlohmann::json& exchange) override;
};

struct GatewayConfig {
    std::map<Role, BackendConfig> roles;
    std::optional<std::filesystem::path> mock_script;
    std::optional<std::filesystem::path> log_file;
    bool deterministic = false;

    static GatewayConfig offline();
    /// Relative paths resolve against the config file's directory.
    static GatewayConfig load(const std::filesystem::path& file);
    static GatewayConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    const BackendConfig& role(Role r) const;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Uniform access to the generator, commenter and refiner roles with retries and logging.
class Gateway {
public:
    explicit Gateway(GatewayConfig config, Sleeper sleeper = {}, std::uint64_t seed = 0x5eed);

    /// Overrides the transport of one role (tests, fault injection).
    void set_transport(Role role, std::shared_ptr<Transport> transport);

    std::string call(const BackendRequest& request, InteractionLog* transcript = nullptr);

    SourceUnit generate_code(std::string_view problem, std::string_view task_id, InteractionLog* transcript = nullptr);
    std::string complete(const RefinementContext& context, InteractionLog* transcript = nullptr);
    std::string comment(std::string_view statement, std::string_view context, InteractionLog* transcript = nullptr);

    const GatewayConfig& config() const { return config_; }
    InteractionLog& log() { return log_; }
    std::string backend_id(Role role) const;

private:
    std::chrono::duration<double> backoff(int attempt);

    GatewayConfig config_;
    std::map<Role, std::shared_ptr<Transport>> transports_;
    InteractionLog log_;
    Sleeper sleeper_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
    std::mutex seq_mutex_;
    std::uint64_t next_call_ = 1;
};

std::string comment_prompt(std::string_view statement, std::string_view context);

/// Strips a surrounding markdown code fence, if any.
std::string extract_code(std::string_view response);

class CodeBackend {
public:
    virtual ~CodeBackend() = default;
    virtual SourceUnit generate(std::string_view problem, std::string_view task_id) = 0;
    virtual std::string id() const = 0;
};

/// Role adapters that route engine calls through a gateway, recording into `transcript`.
class GatewayGenerator : public CodeBackend {
public:
    GatewayGenerator(Gateway& g, InteractionLog* transcript = nullptr) : g_(g), transcript_(transcript) {}
    SourceUnit generate(std::string_view problem, std::string_view task_id) override {
        return g_.generate_code(problem, task_id, transcript_);
    }
    std::string id() const override { return g_.backend_id(Role::generator); }

private:
    Gateway& g_;
    InteractionLog* transcript_;
};

class GatewayCommenter : public CommentBackend {
public:
    GatewayCommenter(Gateway& g, InteractionLog* transcript = nullptr) : g_(g), transcript_(transcript) {}
    std::string comment(const CommentRequest& r) override { return g_.comment(r.statement, r.context, transcript_); }
    std::string id() const override { return g_.backend_id(Role::commenter); }

private:
    Gateway& g_;
    InteractionLog* transcript_;
};

class GatewayRefiner : public RefinementBackend {
public:
    GatewayRefiner(Gateway& g, InteractionLog* transcript = nullptr) : g_(g), transcript_(transcript) {}
    std::string complete(const RefinementContext& c) override { return g_.complete(c, transcript_); }
    std::string id() const override { return g_.backend_id(Role::refiner); }

private:
    Gateway& g_;
    InteractionLog* transcript_;
};

}  // namespace commentloop
