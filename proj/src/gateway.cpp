#include "commentloop/gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace commentloop {

using nlohmann::json;

namespace {

std::string now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::string substitute(std::string text, const std::map<std::string, std::string>& fields) {
    for (const auto& [key, value] : fields) {
        const std::string needle = "{" + key + "}";
        for (std::size_t at = text.find(needle); at != std::string::npos; at = text.find(needle, at + value.size())) {
            text.replace(at, needle.size(), value);
        }
    }
    return text;
}

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url parse_url(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint '" + endpoint + "' has no scheme");
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

constexpr std::string_view kCommenterSystem =
    "You write one short inline comment that explains what a single Python statement does. "
    "Reply with the comment text only.";
constexpr std::string_view kGeneratorSystem =
    "You write Python code that solves the given task. Reply with the complete code only.";
constexpr std::string_view kRefinerSystem =
    "Continue the Python code so that the next statement does what the final comment says. "
    "Reply with code only.";

}  // namespace

std::string_view to_string(Role r) {
    switch (r) {
        case Role::generator:
            return "generator";
        case Role::commenter:
            return "commenter";
        case Role::refiner:
            return "refiner";
    }
    return "?";
}

Role role_from(std::string_view s) {
    if (s == "generator") return Role::generator;
    if (s == "commenter") return Role::commenter;
    if (s == "refiner") return Role::refiner;
    throw Error("unknown backend role '" + std::string(s) + "'");
}

std::string_view to_string(BackendError::Kind k) {
    switch (k) {
        case BackendError::Kind::timeout:
            return "timeout";
        case BackendError::Kind::auth_failure:
            return "auth-failure";
        case BackendError::Kind::rate_limited:
            return "rate-limited";
        case BackendError::Kind::server_error:
            return "server-error";
        case BackendError::Kind::malformed_response:
            return "malformed-response";
        case BackendError::Kind::http_error:
            return "http-error";
        case BackendError::Kind::mock_miss:
            return "mock-miss";
    }
    return "?";
}

BackendError::BackendError(Kind kind, const std::string& what)
    : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

// --- config ------------------------------------------------------------

BackendConfig BackendConfig::defaults(Role role) {
    BackendConfig cfg;
    cfg.role = role;
    switch (role) {
        case Role::commenter:
            cfg.max_output = 128;
            break;
        case Role::refiner:
            cfg.max_output = 512;
            cfg.api = "completion";
            cfg.stop = {"\ndef ", "\nclass ", "\n\n\n"};
            break;
        case Role::generator:
            cfg.max_output = 512;
            break;
    }
    return cfg;
}

void BackendConfig::validate() const {
    const std::string who = std::string(to_string(role)) + " backend: ";
    if (backend != "mock" && backend != "http") throw Error(who + "unknown backend type '" + backend + "'");
    if (!(temperature >= 0.0)) throw Error(who + "temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(who + "top_p must be in (0, 1]");
    if (retries < 0) throw Error(who + "retries must be >= 0");
    if (max_output <= 0) throw Error(who + "max_output must be positive");
    if (!(timeout_s > 0.0)) throw Error(who + "timeout must be positive");
    if (backoff_base_s < 0.0) throw Error(who + "backoff_base must be >= 0");
    if (backend == "http") {
        if (endpoint.empty()) throw Error(who + "endpoint is required");
        if (api != "chat" && api != "completion") throw Error(who + "api must be 'chat' or 'completion'");
    }
}

BackendConfig backend_config_from_json(Role role, const json& j) {
    for (const char* forbidden : {"api_key", "key", "token", "credential", "password"}) {
        if (j.contains(forbidden)) {
            throw Error(std::string(to_string(role)) +
                        " backend: credentials are read from the environment variable named by auth_env, "
                        "not from config files");
        }
    }
    BackendConfig cfg = BackendConfig::defaults(role);
    cfg.backend = j.value("backend", cfg.backend);
    cfg.endpoint = j.value("endpoint", cfg.endpoint);
    cfg.api = j.value("api", cfg.api);
    cfg.auth_env = j.value("auth_env", cfg.auth_env);
    cfg.model_name = j.value("model", cfg.model_name);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.top_p = j.value("top_p", cfg.top_p);
    cfg.max_output = j.value("max_output", cfg.max_output);
    cfg.timeout_s = j.value("timeout", cfg.timeout_s);
    cfg.retries = j.value("retries", cfg.retries);
    cfg.backoff_base_s = j.value("backoff_base", cfg.backoff_base_s);
    if (j.contains("stop")) cfg.stop = j.at("stop").get<std::vector<std::string>>();
    cfg.validate();
    return cfg;
}

json to_json(const BackendConfig& cfg) {
    return json{{"role", to_string(cfg.role)},  {"backend", cfg.backend},       {"endpoint", cfg.endpoint},
                {"api", cfg.api},               {"auth_env", cfg.auth_env},     {"model", cfg.model_name},
                {"temperature", cfg.temperature}, {"top_p", cfg.top_p},         {"max_output", cfg.max_output},
                {"timeout", cfg.timeout_s},     {"retries", cfg.retries},       {"stop", cfg.stop}};
}

GatewayConfig GatewayConfig::offline() {
    GatewayConfig c;
    for (Role r : {Role::generator, Role::commenter, Role::refiner}) c.roles[r] = BackendConfig::defaults(r);
    return c;
}

GatewayConfig GatewayConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    GatewayConfig c = offline();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    if (j.contains("roles")) {
        for (const auto& [name, value] : j.at("roles").items()) {
            const Role r = role_from(name);
            c.roles[r] = backend_config_from_json(r, value);
        }
    }
    if (j.contains("mock_script")) c.mock_script = resolve(j.at("mock_script").get<std::string>());
    if (j.contains("log")) c.log_file = resolve(j.at("log").get<std::string>());
    c.deterministic = j.value("deterministic", false);
    return c;
}

GatewayConfig GatewayConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read config file " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("config file " + file.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j, file.parent_path());
}

const BackendConfig& GatewayConfig::role(Role r) const {
    auto it = roles.find(r);
    if (it == roles.end()) throw Error("no backend configured for role " + std::string(to_string(r)));
    return it->second;
}

// --- interaction log ---------------------------------------------------

InteractionLog::InteractionLog(std::optional<std::filesystem::path> file) : file_(std::move(file)) {}

void InteractionLog::append(json record) {
    std::lock_guard lock(mutex_);
    if (file_) {
        std::error_code ec;
        if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path(), ec);
        std::ofstream out(*file_, std::ios::app);
        if (!out) throw Error("cannot append to interaction log " + file_->string());
        out << record.dump() << '\n';
    }
    if (parent_ != nullptr) parent_->append(record);
    records_.push_back(std::move(record));
}

std::vector<json> InteractionLog::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t InteractionLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

// --- mock script -------------------------------------------------------

std::string prompt_hash(std::string_view prompt) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : collapse_whitespace(prompt)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

MockScript MockScript::from_json(const json& j) {
    MockScript script;
    for (const auto& [name, value] : j.items()) {
        RoleScript& rs = script.roles_[role_from(name)];
        if (value.contains("by_tag")) rs.by_tag = value.at("by_tag").get<std::map<std::string, std::string>>();
        if (value.contains("by_hash")) rs.by_hash = value.at("by_hash").get<std::map<std::string, std::string>>();
        if (value.contains("template")) rs.template_text = value.at("template").get<std::string>();
        rs.delay_ms = value.value("delay_ms", 0);
    }
    return script;
}

MockScript MockScript::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read mock script " + file.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error("mock script " + file.string() + " is not valid: " + e.what());
    }
}

MockScript MockScript::builtin() {
    MockScript script;
    script.role(Role::commenter).template_text = "executes: {statement}";
    script.role(Role::generator);
    script.role(Role::refiner);
    return script;
}

const MockScript::RoleScript* MockScript::find(Role r) const {
    auto it = roles_.find(r);
    return it == roles_.end() ? nullptr : &it->second;
}

std::string MockScript::lookup(const BackendRequest& request) const {
    const RoleScript* rs = find(request.role);
    const std::string hash = prompt_hash(request.prompt);
    if (rs != nullptr) {
        if (auto it = rs->by_hash.find(hash); it != rs->by_hash.end()) return it->second;
        if (auto it = rs->by_tag.find(request.tag); it != rs->by_tag.end()) return it->second;
        if (rs->template_text) {
            std::map<std::string, std::string> fields = request.fields;
            fields.emplace("tag", request.tag);
            fields.emplace("prompt", request.prompt);
            return substitute(*rs->template_text, fields);
        }
    }
    throw BackendError(BackendError::Kind::mock_miss, "no scripted " + std::string(to_string(request.role)) +
                                                          " response for tag '" + request.tag + "' (hash " + hash + ")");
}

// --- transports --------------------------------------------------------

std::string MockTransport::send(const BackendRequest& request, const BackendConfig&, json& exchange) {
    const MockScript::RoleScript* rs = script_->find(request.role);
    if (rs != nullptr && rs->delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(rs->delay_ms));
    exchange["prompt_hash"] = prompt_hash(request.prompt);
    return script_->lookup(request);
}

std::string HttpTransport::send(const BackendRequest& request, const BackendConfig& cfg, json& exchange) {
    httplib::Headers headers;
    if (!cfg.auth_env.empty()) {
        const char* key = std::getenv(cfg.auth_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw BackendError(BackendError::Kind::auth_failure, "environment variable " + cfg.auth_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body{{"model", cfg.model_name},
              {"temperature", cfg.temperature},
              {"top_p", cfg.top_p},
              {"max_tokens", request.max_output > 0 ? request.max_output : cfg.max_output},
              {"n", 1}};
    if (!request.stop.empty()) body["stop"] = request.stop;
    if (cfg.api == "chat") {
        const std::string_view system = request.role == Role::commenter ? kCommenterSystem
                                        : request.role == Role::refiner ? kRefinerSystem
                                                                        : kGeneratorSystem;
        body["messages"] = json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", request.prompt}}});
    } else {
        body["prompt"] = request.prompt;
    }
    const std::string payload = body.dump();
    exchange["request_body"] = payload;

    const Url url = parse_url(cfg.endpoint);
    httplib::Client client(url.origin);
    const auto secs = static_cast<time_t>(cfg.timeout_s);
    const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
        throw BackendError(BackendError::Kind::timeout, "request to " + url.origin + " failed: " + httplib::to_string(res.error()));
    }
    exchange["status"] = res->status;
    exchange["response_body"] = res->body;
    if (res->status == 401 || res->status == 403) {
        throw BackendError(BackendError::Kind::auth_failure, "HTTP " + std::to_string(res->status));
    }
    if (res->status == 429) throw BackendError(BackendError::Kind::rate_limited, "HTTP 429");
    if (res->status >= 500) throw BackendError(BackendError::Kind::server_error, "HTTP " + std::to_string(res->status));
    if (res->status != 200) throw BackendError(BackendError::Kind::http_error, "HTTP " + std::to_string(res->status));

    try {
        const json reply = json::parse(res->body);
        const json& choice = reply.at("choices").at(0);
        if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
        return choice.at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(BackendError::Kind::malformed_response, std::string("unexpected response body: ") + e.what());
    }
}

// --- gateway -----------------------------------------------------------

Gateway::Gateway(GatewayConfig config, Sleeper sleeper, std::uint64_t seed)
    : config_(std::move(config)), log_(config_.log_file), sleeper_(std::move(sleeper)), rng_(seed) {
    if (!sleeper_) sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
    auto script = std::make_shared<const MockScript>(config_.mock_script ? MockScript::load(*config_.mock_script)
                                                                         : MockScript::builtin());
    for (Role r : {Role::generator, Role::commenter, Role::refiner}) {
        if (!config_.roles.contains(r)) config_.roles[r] = BackendConfig::defaults(r);
        const BackendConfig& cfg = config_.roles[r];
        cfg.validate();
        if (config_.deterministic && cfg.live()) {
            throw Error("deterministic mode forbids the live " + std::string(to_string(r)) + " backend");
        }
        transports_[r] = cfg.live() ? std::shared_ptr<Transport>(std::make_shared<HttpTransport>())
                                    : std::shared_ptr<Transport>(std::make_shared<MockTransport>(script));
    }
}

void Gateway::set_transport(Role role, std::shared_ptr<Transport> transport) { transports_[role] = std::move(transport); }

std::string Gateway::backend_id(Role role) const {
    const BackendConfig& cfg = config_.role(role);
    if (!cfg.live()) return "mock-" + std::string(to_string(role));
    return cfg.model_name.empty() ? "http-" + std::string(to_string(role)) : cfg.model_name;
}

std::chrono::duration<double> Gateway::backoff(int attempt) {
    std::lock_guard lock(rng_mutex_);
    std::uniform_real_distribution<double> jitter(0.8, 1.2);
    return std::chrono::duration<double>(std::ldexp(1.0, attempt) * jitter(rng_));
}

std::string Gateway::call(const BackendRequest& request, InteractionLog* transcript) {
    const BackendConfig& cfg = config_.role(request.role);
    Transport& transport = *transports_.at(request.role);
    std::uint64_t call_id;
    {
        std::lock_guard lock(seq_mutex_);
        call_id = next_call_++;
    }
    auto record = [&](json r) {
        if (transcript != nullptr) transcript->append(r);
        log_.append(std::move(r));
    };
    record(json{{"call_id", call_id},
                {"event", "request"},
                {"role", to_string(request.role)},
                {"backend", backend_id(request.role)},
                {"endpoint", cfg.endpoint},
                {"tag", request.tag},
                {"prompt", request.prompt},
                {"ts", now_iso()}});

    json attempts = json::array();
    const int total = cfg.retries + 1;
    for (int attempt = 1;; ++attempt) {
        json exchange = json::object();
        try {
            std::string text = transport.send(request, cfg, exchange);
            attempts.push_back({{"attempt", attempt}, {"outcome", "ok"}});
            record(json{{"call_id", call_id},
                        {"event", "response"},
                        {"role", to_string(request.role)},
                        {"text", text},
                        {"attempts", attempts},
                        {"attempt_count", attempt},
                        {"exchange", exchange},
                        {"ts", now_iso()}});
            return text;
        } catch (const BackendError& e) {
            attempts.push_back({{"attempt", attempt}, {"outcome", to_string(e.kind())}, {"message", e.what()}});
            if (!e.retryable() || attempt >= total) {
                record(json{{"call_id", call_id},
                            {"event", "error"},
                            {"role", to_string(request.role)},
                            {"error_kind", to_string(e.kind())},
                            {"error", e.what()},
                            {"attempts", attempts},
                            {"attempt_count", attempt},
                            {"exchange", exchange},
                            {"ts", now_iso()}});
                throw;
            }
        }
        const auto delay = backoff(attempt - 1) * cfg.backoff_base_s;
        sleeper_(delay);
    }
}

std::string extract_code(std::string_view response) {
    const auto fence = response.find("```");
    if (fence == std::string_view::npos) return std::string(response);
    const auto body = response.find('\n', fence);
    if (body == std::string_view::npos) return std::string(response);
    const auto close = response.find("```", body + 1);
    return std::string(response.substr(body + 1, close == std::string_view::npos ? std::string_view::npos : close - body - 1));
}

SourceUnit Gateway::generate_code(std::string_view problem, std::string_view task_id, InteractionLog* transcript) {
    const BackendConfig& cfg = config_.role(Role::generator);
    BackendRequest req{Role::generator, std::string(problem), std::string(task_id.empty() ? problem : task_id),
                       {{"problem", std::string(problem)}, {"task_id", std::string(task_id)}}, cfg.stop, cfg.max_output};
    std::string code = extract_code(call(req, transcript));
    if (code.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw BackendError(BackendError::Kind::malformed_response, "generator returned no code");
    }
    return SourceUnit::from_text(std::move(code), std::string(task_id));
}

std::string Gateway::complete(const RefinementContext& context, InteractionLog* transcript) {
    const BackendConfig& cfg = config_.role(Role::refiner);
    BackendRequest req{Role::refiner,
                       context.prompt(),
                       context.edited_comment,
                       {{"comment", context.edited_comment}, {"prefix", context.prefix}, {"problem", context.problem}},
                       cfg.stop,
                       cfg.max_output};
    return call(req, transcript);
}

std::string comment_prompt(std::string_view statement, std::string_view context) {
    std::string prompt;
    if (!context.empty()) prompt = "# Context:\n" + std::string(context) + "\n";
    prompt += "# Statement:\n" + std::string(statement) + "\n# Comment:";
    return prompt;
}

std::string Gateway::comment(std::string_view statement, std::string_view context, InteractionLog* transcript) {
    if (statement.find_first_not_of(" \t\r\n") == std::string_view::npos) throw Error("cannot comment an empty statement");
    const BackendConfig& cfg = config_.role(Role::commenter);
    BackendRequest req{Role::commenter,
                       comment_prompt(statement, context),
                       std::string(statement),
                       {{"statement", collapse_whitespace(statement)}, {"context", std::string(context)}},
                       cfg.stop,
                       cfg.max_output};
    std::string text = collapse_whitespace(call(req, transcript));
    if (text.empty()) throw BackendError(BackendError::Kind::malformed_response, "commenter returned an empty comment");
    return text;
}

}  // namespace commentloop
