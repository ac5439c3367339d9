#include "commentloop/session.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>

#include "httplib.h"

#include "commentloop/codec.hpp"

namespace commentloop::session {

using nlohmann::json;

namespace {

constexpr std::string_view kBase32 = "abcdefghijklmnopqrstuvwxyz234567";

std::string now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms));
    return buf;
}

std::string errno_text(const std::string& what, const std::filesystem::path& p) {
    return what + " " + p.string() + ": " + std::strerror(errno);
}

void write_all(int fd, std::string_view data, const std::filesystem::path& p) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw StoreFailure(errno_text("cannot write", p));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

void fsync_dir(const std::filesystem::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

json spans_or_null(const std::optional<Span>& s) { return s ? to_json(*s) : json(nullptr); }

json edits_json(const std::vector<CommentEdit>& edits) {
    json out = json::array();
    for (const auto& e : edits) out.push_back(to_json(e));
    return out;
}

json submitted_json(const std::vector<SubmittedComment>& comments) {
    json out = json::array();
    for (const auto& c : comments) out.push_back({{"segment_id", c.segment_id}, {"text", c.text}});
    return out;
}

std::vector<SubmittedComment> submitted_from_json(const json& j) {
    std::vector<SubmittedComment> out;
    for (const auto& c : j) out.push_back({c.at("segment_id").get<std::size_t>(), c.at("text").get<std::string>()});
    return out;
}

std::vector<CommentEdit> edits_from_json(const json& j) {
    std::vector<CommentEdit> out;
    for (const auto& e : j) out.push_back(edit_from_json(e));
    return out;
}

json segments_json(const CommentedView& view) {
    json out = json::array();
    for (const auto& e : view.entries()) {
        json s = to_json(e.segment);
        s["comment"] = e.comment.text;
        s["provenance"] = to_string(e.comment.provenance);
        s["backend"] = e.comment.backend_id;
        out.push_back(std::move(s));
    }
    return out;
}

json comment_options_json(const RefinementOptions& o) {
    return json{{"context_statements", o.comments.context_statements},
                {"max_input_units", o.comments.max_input_units},
                {"max_output_units", o.comments.max_output_units},
                {"allow_fallback", o.allow_fallback}};
}

RefinementOptions refinement_options_from(const json& created) {
    RefinementOptions o;
    o.max_rounds = created.value("max_rounds", 3);
    if (created.contains("options")) {
        const json& j = created.at("options");
        o.comments.context_statements = j.value("context_statements", o.comments.context_statements);
        o.comments.max_input_units = j.value("max_input_units", o.comments.max_input_units);
        o.comments.max_output_units = j.value("max_output_units", o.comments.max_output_units);
        o.allow_fallback = j.value("allow_fallback", o.allow_fallback);
    }
    return o;
}

/// Backend responses recorded in one event's transcript, keyed by role and prompt.
class Recorded {
public:
    explicit Recorded(const json& transcript) {
        std::map<std::uint64_t, std::pair<std::string, std::string>> requests;
        for (const auto& r : transcript) {
            const auto id = r.at("call_id").get<std::uint64_t>();
            const std::string event = r.at("event").get<std::string>();
            if (event == "request") {
                requests[id] = {r.at("role").get<std::string>(), r.at("prompt").get<std::string>()};
            } else if (event == "response") {
                auto it = requests.find(id);
                if (it != requests.end()) responses_[it->second] = r.at("text").get<std::string>();
            }
        }
    }

    std::string get(Role role, const std::string& prompt) const {
        auto it = responses_.find({std::string(to_string(role)), prompt});
        if (it == responses_.end()) {
            throw Error("replay: no recorded " + std::string(to_string(role)) + " response for prompt hash " +
                        prompt_hash(prompt));
        }
        return it->second;
    }

    std::optional<std::string> first(Role role) const {
        for (const auto& [key, text] : responses_) {
            if (key.first == to_string(role)) return text;
        }
        return std::nullopt;
    }

private:
    std::map<std::pair<std::string, std::string>, std::string> responses_;
};

class RecordedCommenter : public CommentBackend {
public:
    RecordedCommenter(const Recorded& r, std::string id) : r_(r), id_(std::move(id)) {}
    std::string comment(const CommentRequest& req) override {
        return r_.get(Role::commenter, comment_prompt(req.statement, req.context));
    }
    std::string id() const override { return id_; }

private:
    const Recorded& r_;
    std::string id_;
};

class RecordedRefiner : public RefinementBackend {
public:
    RecordedRefiner(const Recorded& r, std::string id) : r_(r), id_(std::move(id)) {}
    std::string complete(const RefinementContext& ctx) override { return r_.get(Role::refiner, ctx.prompt()); }
    std::string id() const override { return id_; }

private:
    const Recorded& r_;
    std::string id_;
};

std::string backend_of(const json& event, const char* role) {
    if (!event.contains("backends")) return {};
    return event.at("backends").value(role, std::string());
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string_view to_string(State s) {
    switch (s) {
        case State::created:
            return "created";
        case State::generated:
            return "generated";
        case State::refining:
            return "refining";
        case State::done:
            return "done";
    }
    return "?";
}

std::string new_session_id() {
    std::random_device rd;
    std::array<unsigned char, 16> bytes{};
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
        const std::uint32_t v = rd();
        for (std::size_t k = 0; k < 4; ++k) bytes[i + k] = static_cast<unsigned char>(v >> (8 * k));
    }
    std::string out;
    std::uint32_t buffer = 0;
    int bits = 0;
    for (unsigned char b : bytes) {
        buffer = (buffer << 8) | b;
        bits += 8;
        while (bits >= 5) {
            out += kBase32[(buffer >> (bits - 5)) & 31];
            bits -= 5;
        }
    }
    if (bits > 0) out += kBase32[(buffer << (5 - bits)) & 31];
    return out;
}

bool valid_session_id(std::string_view id) {
    return id.size() == 26 && std::all_of(id.begin(), id.end(), [](char c) { return kBase32.find(c) != std::string_view::npos; });
}

// --- store -------------------------------------------------------------

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) throw StoreFailure("cannot use data directory " + dir_.string());
}

std::filesystem::path SessionStore::file(const std::string& id) const {
    if (!valid_session_id(id)) throw NotFound("no session " + id);
    return dir_ / (id + ".jsonl");
}

void SessionStore::create(const std::string& id, const json& event) {
    const auto p = file(id);
    const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_APPEND | O_CLOEXEC, 0600);
    if (fd < 0) throw StoreFailure(errno_text("cannot create", p));
    try {
        write_all(fd, event.dump() + "\n", p);
        if (::fsync(fd) != 0) throw StoreFailure(errno_text("cannot sync", p));
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    fsync_dir(dir_);
}

void SessionStore::append(const std::string& id, const json& event) {
    const auto p = file(id);
    const int fd = ::open(p.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (fd < 0) throw StoreFailure(errno_text("cannot open", p));
    try {
        write_all(fd, event.dump() + "\n", p);
        if (::fsync(fd) != 0) throw StoreFailure(errno_text("cannot sync", p));
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
}

std::vector<json> SessionStore::read(const std::string& id) const {
    const auto p = file(id);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFound("no session " + id);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    std::vector<json> events;
    std::size_t pos = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        if (nl == std::string::npos) {
            std::error_code ec;
            std::filesystem::resize_file(p, pos, ec);
            if (ec) throw StoreFailure("cannot truncate torn event in " + p.string());
            break;
        }
        try {
            events.push_back(json::parse(content.substr(pos, nl - pos)));
        } catch (const json::exception& e) {
            throw StoreFailure(p.string() + ": corrupt event at byte " + std::to_string(pos) + ": " + e.what());
        }
        pos = nl + 1;
    }
    if (events.empty()) throw StoreFailure(p.string() + ": no complete events");
    return events;
}

std::vector<std::string> SessionStore::list() const {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
        const std::string id = entry.path().stem().string();
        if (valid_session_id(id)) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

// --- restore and replay -------------------------------------------------

State SessionData::state() const {
    if (iterations.empty()) return State::created;
    if (rounds_used() >= max_rounds) return State::done;
    return State::generated;
}

SessionData restore(const std::vector<json>& events) {
    if (events.empty() || events.front().value("type", "") != "created") {
        throw StoreFailure("session log does not start with a created event");
    }
    SessionData d;
    const json& created = events.front();
    d.id = created.at("session").get<std::string>();
    d.problem = created.at("problem").get<std::string>();
    d.task_id = created.value("task_id", std::string());
    d.max_rounds = created.value("max_rounds", 3);
    d.created_at = created.value("ts", std::string());
    d.updated_at = d.created_at;
    for (std::size_t i = 1; i < events.size(); ++i) {
        const json& e = events[i];
        const std::string type = e.at("type").get<std::string>();
        d.updated_at = e.value("ts", d.updated_at);
        if (type == "error") {
            d.errors.push_back(e);
            continue;
        }
        Iteration it;
        it.index = e.at("iteration").get<int>();
        if (it.index != static_cast<int>(d.iterations.size())) {
            throw StoreFailure("session " + d.id + ": iteration " + std::to_string(it.index) + " out of order");
        }
        it.view = view_from_json(unit_from_json(e.at("unit")), e.at("view"));
        it.transcript = e.value("transcript", json::array());
        it.ts = e.value("ts", std::string());
        if (type == "refined") {
            it.submitted = submitted_from_json(e.at("submitted"));
            it.edits = edits_from_json(e.at("edits"));
            it.applied = edit_from_json(e.at("applied"));
            it.pending = edits_from_json(e.at("pending"));
            it.replaced_span = span_from_json(e.at("replaced_span"));
            it.regenerated_span = span_from_json(e.at("regenerated_span"));
        } else if (type != "generated") {
            throw StoreFailure("session " + d.id + ": unknown event type " + type);
        }
        d.iterations.push_back(std::move(it));
    }
    return d;
}

std::vector<SourceUnit> replay(const std::vector<json>& events) {
    const SessionData d = restore(events);
    const RefinementOptions options = refinement_options_from(events.front());
    std::vector<SourceUnit> units;
    std::optional<CommentedView> view;
    for (std::size_t i = 1; i < events.size(); ++i) {
        const json& e = events[i];
        const std::string type = e.at("type").get<std::string>();
        if (type == "error") continue;
        const Recorded recorded(e.value("transcript", json::array()));
        RecordedCommenter commenter(recorded, backend_of(e, "commenter"));
        if (type == "generated") {
            const auto text = recorded.first(Role::generator);
            if (!text) throw Error("replay: generation response missing");
            SourceUnit unit = SourceUnit::from_text(extract_code(*text), d.task_id);
            view = generate_comments(unit, d.problem, commenter, options.comments);
        } else {
            if (!view) throw Error("replay: refinement before generation");
            RecordedRefiner refiner(recorded, backend_of(e, "refiner"));
            const auto submitted = submitted_from_json(e.at("submitted"));
            RoundOutcome out = refine_round(*view, submitted, d.problem, e.at("iteration").get<int>(), refiner,
                                            commenter, options);
            view = std::move(out.view);
        }
        units.push_back(view->unit());
    }
    return units;
}

void redact(json& j, const std::vector<std::string>& secrets) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        bool changed = false;
        for (const auto& secret : secrets) {
            if (secret.empty()) continue;
            for (auto at = s.find(secret); at != std::string::npos; at = s.find(secret, at)) {
                s.replace(at, secret.size(), "[redacted]");
                changed = true;
            }
        }
        if (changed) j = s;
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end();) {
            const std::string key = lower(it.key());
            if (key == "authorization" || key == "api_key" || key == "x-api-key") {
                it = j.erase(it);
            } else {
                redact(it.value(), secrets);
                ++it;
            }
        }
    } else if (j.is_array()) {
        for (auto& v : j) redact(v, secrets);
    }
}

// --- service -----------------------------------------------------------

SessionService::SessionService(SessionStore& store, Gateway& gateway, ServiceOptions options)
    : store_(store), gateway_(gateway), options_(std::move(options)) {
    if (options_.max_rounds < 0) throw ValidationError("max_rounds must be >= 0");
    options_.refinement.max_rounds = options_.max_rounds;
    for (const auto& [role, cfg] : gateway_.config().roles) {
        if (cfg.auth_env.empty()) continue;
        if (const char* v = std::getenv(cfg.auth_env.c_str()); v != nullptr && *v != '\0') secrets_.emplace_back(v);
    }
    for (const auto& id : store_.list()) {
        auto entry = std::make_shared<Entry>();
        entry->data = restore(store_.read(id));
        sessions_.emplace(id, std::move(entry));
    }
}

std::size_t SessionService::size() const {
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session " + id);
    return it->second;
}

json SessionService::transcript_json(const InteractionLog& log) const {
    json out = json::array();
    for (auto r : log.records()) out.push_back(std::move(r));
    redact(out, secrets_);
    return out;
}

void SessionService::record_error(Entry& entry, const std::string& op, const std::string& message,
                                  InteractionLog& transcript) {
    json event{{"type", "error"}, {"op", op}, {"message", message}, {"transcript", transcript_json(transcript)},
               {"ts", now_iso()}};
    redact(event, secrets_);
    store_.append(entry.data.id, event);
    std::lock_guard lock(entry.data_mutex);
    entry.data.errors.push_back(event);
    entry.data.updated_at = event.at("ts").get<std::string>();
}

json SessionService::view_json(const SessionData& d, bool busy) const {
    json j{{"id", d.id},
           {"problem", d.problem},
           {"state", to_string(busy ? State::refining : d.state())},
           {"round", d.rounds_used()},
           {"max_rounds", d.max_rounds},
           {"rounds_remaining", std::max(0, d.max_rounds - d.rounds_used())},
           {"created_at", d.created_at},
           {"updated_at", d.updated_at}};
    if (d.iterations.empty()) {
        j["iteration"] = nullptr;
        j["code"] = nullptr;
        j["rendered"] = nullptr;
        j["segments"] = json::array();
        j["highlight"] = nullptr;
        j["replaced_span"] = nullptr;
        j["pending"] = json::array();
        return j;
    }
    const Iteration& it = d.iterations.back();
    j["iteration"] = it.index;
    j["code"] = it.view.unit().text;
    j["parse_status"] = to_string(it.view.unit().parse_status);
    j["rendered"] = it.view.rendered();
    j["segments"] = segments_json(it.view);
    j["highlight"] = spans_or_null(it.regenerated_span);
    j["replaced_span"] = spans_or_null(it.replaced_span);
    j["pending"] = edits_json(it.pending);
    j["applied"] = it.applied ? to_json(*it.applied) : json(nullptr);
    return j;
}

json SessionService::create(const std::string& problem, const std::string& task_id) {
    if (problem.find_first_not_of(" \t\r\n") == std::string::npos) throw ValidationError("problem must not be empty");
    auto entry = std::make_shared<Entry>();
    SessionData& d = entry->data;
    d.id = new_session_id();
    d.problem = problem;
    d.task_id = task_id;
    d.max_rounds = options_.max_rounds;
    d.created_at = d.updated_at = now_iso();
    json event{{"type", "created"},     {"session", d.id},           {"problem", d.problem},
               {"task_id", d.task_id},  {"max_rounds", d.max_rounds}, {"options", comment_options_json(options_.refinement)},
               {"ts", d.created_at}};
    store_.create(d.id, event);
    json out = view_json(d, false);
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(d.id, std::move(entry));
    return out;
}

json SessionService::generate(const std::string& id) {
    auto entry = find(id);
    std::lock_guard op(entry->op);
    std::string problem, task_id;
    {
        std::lock_guard lock(entry->data_mutex);
        if (entry->data.state() != State::created) throw Conflict("session " + id + " has already generated code");
        problem = entry->data.problem;
        task_id = entry->data.task_id;
    }

    InteractionLog transcript;
    GatewayGenerator generator(gateway_, &transcript);
    GatewayCommenter commenter(gateway_, &transcript);
    Iteration it;
    try {
        SourceUnit unit = generator.generate(problem, task_id);
        it.view = generate_comments(unit, problem, commenter, options_.refinement.comments);
    } catch (const Error& e) {
        record_error(*entry, "generate", e.what(), transcript);
        throw;
    }
    it.index = 0;
    it.transcript = transcript_json(transcript);
    it.ts = now_iso();
    json event{{"type", "generated"},
               {"iteration", 0},
               {"unit", to_json(it.view.unit())},
               {"view", entries_to_json(it.view)},
               {"backends", {{"generator", generator.id()}, {"commenter", commenter.id()}}},
               {"transcript", it.transcript},
               {"ts", it.ts}};
    store_.append(id, event);

    std::lock_guard lock(entry->data_mutex);
    entry->data.iterations.push_back(std::move(it));
    entry->data.updated_at = event.at("ts").get<std::string>();
    return view_json(entry->data, false);
}

json SessionService::submit(const std::string& id, const std::vector<SubmittedComment>& comments) {
    auto entry = find(id);
    std::lock_guard op(entry->op);
    CommentedView current;
    std::string problem;
    int round = 0;
    {
        std::lock_guard lock(entry->data_mutex);
        const SessionData& d = entry->data;
        if (d.state() == State::created) throw Conflict("session " + id + " has no generated code yet");
        if (d.state() == State::done) {
            throw RoundsExhausted("all " + std::to_string(d.max_rounds) + " refinement rounds are used");
        }
        current = d.iterations.back().view;
        problem = d.problem;
        round = d.rounds_used() + 1;
        entry->busy = true;
    }
    struct Idle {
        Entry& e;
        ~Idle() {
            std::lock_guard lock(e.data_mutex);
            e.busy = false;
        }
    } idle{*entry};

    InteractionLog transcript;
    GatewayRefiner refiner(gateway_, &transcript);
    GatewayCommenter commenter(gateway_, &transcript);
    RoundOutcome out;
    try {
        out = refine_round(current, comments, problem, round, refiner, commenter, options_.refinement);
    } catch (const NoEdit&) {
        throw;
    } catch (const UnknownSegment&) {
        throw;
    } catch (const InvalidEdit&) {
        throw;
    } catch (const Error& e) {
        record_error(*entry, "refine", e.what(), transcript);
        throw;
    }

    Iteration it;
    it.index = round;
    it.view = std::move(out.view);
    it.submitted = comments;
    it.edits = std::move(out.edits);
    it.applied = out.applied;
    it.pending = std::move(out.pending);
    it.replaced_span = out.result.replaced_span;
    it.regenerated_span = out.result.regenerated_span;
    it.transcript = transcript_json(transcript);
    it.ts = now_iso();
    json event{{"type", "refined"},
               {"iteration", round},
               {"submitted", submitted_json(it.submitted)},
               {"edits", edits_json(it.edits)},
               {"applied", to_json(*it.applied)},
               {"pending", edits_json(it.pending)},
               {"context", to_json(out.context)},
               {"replaced_span", to_json(*it.replaced_span)},
               {"regenerated_span", to_json(*it.regenerated_span)},
               {"unit", to_json(it.view.unit())},
               {"view", entries_to_json(it.view)},
               {"backends", {{"refiner", refiner.id()}, {"commenter", commenter.id()}}},
               {"transcript", it.transcript},
               {"ts", it.ts}};
    redact(event, secrets_);
    store_.append(id, event);

    std::lock_guard lock(entry->data_mutex);
    entry->data.iterations.push_back(std::move(it));
    entry->data.updated_at = event.at("ts").get<std::string>();
    return view_json(entry->data, false);
}

json SessionService::view(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->data_mutex);
    return view_json(entry->data, entry->busy);
}

json SessionService::history(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard lock(entry->data_mutex);
    const SessionData& d = entry->data;
    json iterations = json::array();
    for (const auto& it : d.iterations) {
        json j{{"index", it.index},
               {"unit", to_json(it.view.unit())},
               {"rendered", it.view.rendered()},
               {"segments", segments_json(it.view)},
               {"submitted", submitted_json(it.submitted)},
               {"edits", edits_json(it.edits)},
               {"applied", it.applied ? to_json(*it.applied) : json(nullptr)},
               {"pending", edits_json(it.pending)},
               {"replaced_span", spans_or_null(it.replaced_span)},
               {"regenerated_span", spans_or_null(it.regenerated_span)},
               {"transcript", it.transcript},
               {"ts", it.ts}};
        iterations.push_back(std::move(j));
    }
    return json{{"id", d.id},
                {"problem", d.problem},
                {"task_id", d.task_id},
                {"state", to_string(entry->busy ? State::refining : d.state())},
                {"max_rounds", d.max_rounds},
                {"created_at", d.created_at},
                {"updated_at", d.updated_at},
                {"iterations", iterations},
                {"errors", d.errors}};
}

std::string SessionService::export_log(const std::string& id) const {
    auto entry = find(id);
    std::lock_guard op(entry->data_mutex);
    std::string out;
    for (const auto& e : store_.read(id)) out += e.dump() + "\n";
    return out;
}

// --- HTTP --------------------------------------------------------------

namespace {

struct Failure {
    int status;
    const char* kind;
};

Failure classify(const std::exception& e) {
    if (dynamic_cast<const NotFound*>(&e)) return {404, "not_found"};
    if (dynamic_cast<const ValidationError*>(&e)) return {400, "validation"};
    if (dynamic_cast<const UnknownSegment*>(&e)) return {400, "unknown_segment"};
    if (dynamic_cast<const InvalidEdit*>(&e)) return {400, "invalid_edit"};
    if (dynamic_cast<const Conflict*>(&e)) return {409, "conflict"};
    if (dynamic_cast<const RoundsExhausted*>(&e)) return {409, "rounds_exhausted"};
    if (dynamic_cast<const NoEdit*>(&e)) return {422, "no_edit"};
    if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const BackendFailure*>(&e)) return {502, "backend_failure"};
    if (dynamic_cast<const SpliceFailure*>(&e)) return {502, "splice_failure"};
    if (dynamic_cast<const StoreFailure*>(&e)) return {500, "store_failure"};
    return {500, "internal"};
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const json::exception& e) {
        reply(res, 400, {{"error", "validation"}, {"message", std::string("malformed request body: ") + e.what()}});
    } catch (const std::exception& e) {
        const Failure f = classify(e);
        reply(res, f.status, {{"error", f.kind}, {"message", e.what()}});
    }
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
}

}  // namespace

HttpApi::HttpApi(SessionService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    s.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, {{"status", "ok"}, {"sessions", service_.size()}});
    });
    s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = body_of(req);
            if (!body.contains("problem") || !body.at("problem").is_string()) {
                throw ValidationError("field 'problem' (string) is required");
            }
            reply(res, 201, service_.create(body.at("problem").get<std::string>(), body.value("task_id", std::string())));
        });
    });
    s.Post(R"(/sessions/([a-z2-7]+)/generate)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { reply(res, 200, service_.generate(req.matches[1])); });
    });
    s.Get(R"(/sessions/([a-z2-7]+)/view)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { reply(res, 200, service_.view(req.matches[1])); });
    });
    s.Post(R"(/sessions/([a-z2-7]+)/comments)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = body_of(req);
            if (!body.contains("comments") || !body.at("comments").is_array()) {
                throw ValidationError("field 'comments' (array) is required");
            }
            std::vector<SubmittedComment> comments;
            for (const auto& c : body.at("comments")) {
                comments.push_back({c.at("segment_id").get<std::size_t>(), c.at("text").get<std::string>()});
            }
            reply(res, 200, service_.submit(req.matches[1], comments));
        });
    });
    s.Get(R"(/sessions/([a-z2-7]+)/history)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (req.get_param_value("format") == "jsonl") {
                res.status = 200;
                res.set_content(service_.export_log(req.matches[1]), "application/x-ndjson");
                return;
            }
            reply(res, 200, service_.history(req.matches[1]));
        });
    });
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            res.set_content(json{{"error", res.status == 404 ? "not_found" : "http"}, {"message", httplib::status_message(res.status)}}.dump(),
                            "application/json");
        }
    });
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpApi::serve() { server_->listen_after_bind(); }

void HttpApi::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

}  // namespace commentloop::session
