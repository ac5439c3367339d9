#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "commentloop/comments.hpp"
#include "commentloop/gateway.hpp"
#include "commentloop/refinement.hpp"
#include "commentloop/source.hpp"

namespace commentloop::eval {

class DomainError : public Error {
public:
    using Error::Error;
};

class SandboxUnavailable : public Error {
public:
    using Error::Error;
};

/// 1 - C(n-c, k) / C(n, k) in product form. Exactly c/n for k = 1.
double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k);

struct Task {
    std::string id;
    std::string prompt;
    std::string entry_point;
    std::string tests;
    double timeout_s = 10.0;
};

Task task_from_json(const nlohmann::json& j);
std::vector<Task> load_suite(const std::filesystem::path& file);

enum class Status { pass, fail, timeout, crash };

std::string_view to_string(Status s);

struct RunOutcome {
    Status status = Status::crash;
    std::string message;
    std::string stdout_text;
    std::string stderr_text;
    std::chrono::milliseconds elapsed{0};
};

struct SandboxOptions {
    std::string interpreter = "python3";
    std::uint64_t memory_limit_bytes = 1ULL << 30;
    std::size_t output_limit_bytes = 64 * 1024;
    bool isolate_network = true;
};

/// Runs candidate code followed by the task's tests in a child process inside a fresh temporary
/// directory. A `check(candidate)` function defined by the tests is called with the entry point.
RunOutcome run_task(const Task& task, const SourceUnit& code, const SandboxOptions& options = {});

/// Segment locator: a segment id, or statement text matched after whitespace normalization
/// (exact first, then substring).
using Locator = std::variant<std::size_t, std::string>;

struct FeedbackEntry {
    std::string task_id;
    int iteration = 1;
    Locator locate;
    std::string comment;
};

class FeedbackScript {
public:
    FeedbackScript() = default;
    explicit FeedbackScript(std::vector<FeedbackEntry> entries);
    static FeedbackScript load(const std::filesystem::path& file);

    const FeedbackEntry* find(const std::string& task_id, int iteration) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::pair<std::string, int>, FeedbackEntry> entries_;
};

FeedbackEntry feedback_entry_from_json(const nlohmann::json& j);

/// Resolves a locator against the view's segments. Throws UnknownSegment.
std::size_t locate_segment(const CommentedView& view, const Locator& locator);

struct RoundRecord {
    int round = 0;
    Status status = Status::crash;
    std::string message;
    std::optional<std::size_t> edited_segment;
    std::string edited_comment;
    std::string code;
};

struct TaskTrail {
    std::string task_id;
    std::vector<RoundRecord> rounds;
    std::optional<int> passed_at;
    std::string error;
};

struct EvalReport {
    int max_rounds = 3;
    std::vector<double> pass_at_1;  // index 0 = original, i = after i feedback iterations
    std::vector<TaskTrail> tasks;
    nlohmann::json metadata;
};

nlohmann::json to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);

struct EvalOptions {
    int max_rounds = 3;
    unsigned workers = 4;
    SandboxOptions sandbox;
    RefinementOptions refinement;
};

struct EvalBackends {
    CodeBackend& generator;
    CommentBackend& commenter;
    RefinementBackend& refiner;
};

EvalReport evaluate(const std::vector<Task>& suite, const FeedbackScript& script, EvalBackends backends,
                    const EvalOptions& options = {});

}  // namespace commentloop::eval
