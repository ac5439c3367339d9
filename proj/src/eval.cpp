#include "commentloop/eval.hpp"

#include <fcntl.h>
#include <grp.h>
#include <linux/landlock.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace commentloop::eval {

using nlohmann::json;

namespace {

constexpr std::string_view kDriver = R"PY(import os
import sys
import traceback

nonce = sys.stdin.readline().strip()
sys.stdin = open(os.devnull)


def report(kind):
    os.write(3, (kind + ":" + nonce + "\n").encode())


def failing_line(tb):
    frames = traceback.extract_tb(tb)
    for frame in reversed(frames):
        if frame.filename in ("candidate.py", "tests.py") and frame.line:
            return frame.line.strip()
    return ""


def main():
    try:
        with open("candidate.py", encoding="utf-8") as f:
            code = f.read()
        with open("tests.py", encoding="utf-8") as f:
            tests = f.read()
    except BaseException as e:
        print("harness: cannot read inputs: %r" % (e,), file=sys.stderr)
        return 5
    entry = sys.argv[1]
    ns = {"__name__": "__main__"}
    try:
        exec(compile(code, "candidate.py", "exec"), ns)
        exec(compile(tests, "tests.py", "exec"), ns)
        check = ns.get("check")
        if callable(check):
            check(ns[entry])
    except AssertionError as e:
        traceback.print_exc()
        line = failing_line(e.__traceback__)
        detail = str(e)
        message = "AssertionError" + (": " + detail if detail else "")
        sys.stderr.flush()
        report("assert " + (line + " -> " if line else "") + message)
        return 3
    except BaseException as e:
        traceback.print_exc()
        sys.stderr.flush()
        report("error " + type(e).__name__ + ": " + str(e))
        return 4
    sys.stdout.flush()
    report("pass")
    return 0


sys.exit(main())
)PY";

std::optional<std::string> find_executable(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        return ::access(name.c_str(), X_OK) == 0 ? std::optional(name) : std::nullopt;
    }
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path != nullptr ? path : "/usr/local/bin:/usr/bin:/bin");
    for (std::string dir; std::getline(dirs, dir, ':');) {
        if (dir.empty()) continue;
        const std::string candidate = dir + "/" + name;
        if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    return std::nullopt;
}

void write_text(const std::filesystem::path& p, std::string_view text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw SandboxUnavailable("cannot write " + p.string());
}

std::string make_nonce() {
    std::random_device rd;
    std::ostringstream ss;
    for (int i = 0; i < 4; ++i) ss << std::hex << std::setw(8) << std::setfill('0') << rd();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        std::string templ = (std::filesystem::temp_directory_path() / "commentloop-run-XXXXXX").string();
        if (::mkdtemp(templ.data()) == nullptr) throw SandboxUnavailable("cannot create sandbox directory");
        path_ = templ;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::permissions(path_, std::filesystem::perms::owner_all, std::filesystem::perm_options::add, ec);
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

#ifndef LANDLOCK_ACCESS_FS_REFER
#define LANDLOCK_ACCESS_FS_REFER (1ULL << 13)
#endif
#ifndef LANDLOCK_ACCESS_FS_TRUNCATE
#define LANDLOCK_ACCESS_FS_TRUNCATE (1ULL << 14)
#endif

constexpr int kSetupFailed = 125;
constexpr uid_t kNobody = 65534;

/// Landlock ruleset that confines writes to `dir` (and /dev/null). -1 when the kernel has no Landlock.
int write_confinement(const std::string& dir) {
    const long abi = ::syscall(SYS_landlock_create_ruleset, nullptr, 0, LANDLOCK_CREATE_RULESET_VERSION);
    if (abi < 1) return -1;
    std::uint64_t handled = LANDLOCK_ACCESS_FS_WRITE_FILE | LANDLOCK_ACCESS_FS_REMOVE_DIR | LANDLOCK_ACCESS_FS_REMOVE_FILE |
                            LANDLOCK_ACCESS_FS_MAKE_CHAR | LANDLOCK_ACCESS_FS_MAKE_DIR | LANDLOCK_ACCESS_FS_MAKE_REG |
                            LANDLOCK_ACCESS_FS_MAKE_SOCK | LANDLOCK_ACCESS_FS_MAKE_FIFO | LANDLOCK_ACCESS_FS_MAKE_BLOCK |
                            LANDLOCK_ACCESS_FS_MAKE_SYM;
    std::uint64_t file_rights = LANDLOCK_ACCESS_FS_WRITE_FILE;
    if (abi >= 2) handled |= LANDLOCK_ACCESS_FS_REFER;
    if (abi >= 3) {
        handled |= LANDLOCK_ACCESS_FS_TRUNCATE;
        file_rights |= LANDLOCK_ACCESS_FS_TRUNCATE;
    }
    landlock_ruleset_attr attr{};
    attr.handled_access_fs = handled;
    const int ruleset = static_cast<int>(::syscall(SYS_landlock_create_ruleset, &attr, sizeof attr, 0));
    if (ruleset < 0) return -1;
    auto allow = [&](const char* path, std::uint64_t rights) {
        const int fd = ::open(path, O_PATH | O_CLOEXEC);
        if (fd < 0) return false;
        landlock_path_beneath_attr rule{};
        rule.allowed_access = rights;
        rule.parent_fd = fd;
        const bool ok = ::syscall(SYS_landlock_add_rule, ruleset, LANDLOCK_RULE_PATH_BENEATH, &rule, 0) == 0;
        ::close(fd);
        return ok;
    };
    if (!allow(dir.c_str(), handled)) {
        ::close(ruleset);
        throw SandboxUnavailable("cannot confine writes to " + dir);
    }
    allow("/dev/null", file_rights);
    return ruleset;
}

struct Pipe {
    int fds[2] = {-1, -1};
    Pipe() {
        if (::pipe2(fds, O_CLOEXEC) != 0) throw SandboxUnavailable(std::string("pipe: ") + std::strerror(errno));
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    void close_read() {
        if (fds[0] >= 0) ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) ::close(fds[1]);
        fds[1] = -1;
    }
};

std::string collapse(std::string_view s) {
    std::string out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

std::string now_iso() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string last_line(std::string_view text) {
    auto end = text.find_last_not_of("\r\n");
    if (end == std::string_view::npos) return {};
    auto start = text.rfind('\n', end);
    return std::string(text.substr(start == std::string_view::npos ? 0 : start + 1, end + 1 - (start == std::string_view::npos ? 0 : start + 1)));
}

}  // namespace

double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
    if (n < 0 || c < 0 || c > n) throw DomainError("pass@k requires 0 <= c <= n");
    if (k < 1 || k > n) throw DomainError("pass@k requires 1 <= k <= n");
    if (k == 1) return static_cast<double>(c) / static_cast<double>(n);
    if (n - c < k) return 1.0;
    double fail = 1.0;
    for (std::int64_t i = n - c + 1; i <= n; ++i) fail *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
    return 1.0 - fail;
}

std::string_view to_string(Status s) {
    switch (s) {
        case Status::pass:
            return "pass";
        case Status::fail:
            return "fail";
        case Status::timeout:
            return "timeout";
        case Status::crash:
            return "crash";
    }
    return "?";
}

Task task_from_json(const json& j) {
    Task t;
    try {
        t.id = j.at("id").get<std::string>();
        t.prompt = j.at("prompt").get<std::string>();
        t.entry_point = j.at("entry_point").get<std::string>();
        t.tests = j.at("tests").get<std::string>();
        t.timeout_s = j.value("timeout", t.timeout_s);
    } catch (const json::exception& e) {
        throw Error(std::string("invalid task record: ") + e.what());
    }
    if (t.id.empty()) throw Error("task id must not be empty");
    if (!(t.timeout_s > 0.0)) throw Error("task " + t.id + ": timeout must be positive");
    if (t.tests.find(t.entry_point) == std::string::npos && t.tests.find("check") == std::string::npos) {
        throw Error("task " + t.id + ": tests do not reference " + t.entry_point);
    }
    return t;
}

std::vector<Task> load_suite(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read suite " + file.string());
    std::vector<Task> suite;
    std::set<std::string> ids;
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            suite.push_back(task_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!ids.insert(suite.back().id).second) throw Error("duplicate task id " + suite.back().id);
    }
    if (suite.empty()) throw Error("suite " + file.string() + " has no tasks");
    return suite;
}

RunOutcome run_task(const Task& task, const SourceUnit& code, const SandboxOptions& options) {
    const auto interpreter = find_executable(options.interpreter);
    if (!interpreter) throw SandboxUnavailable("interpreter '" + options.interpreter + "' not found");

    TempDir dir;
    write_text(dir.path() / "driver.py", kDriver);
    write_text(dir.path() / "candidate.py", code.text);
    write_text(dir.path() / "tests.py", task.tests);
    const std::string nonce = make_nonce();

    Pipe in, out, err, status;
    const std::string dir_str = dir.path().string();
    const std::string home = "HOME=" + dir_str;
    std::vector<std::string> args = {*interpreter, "-I", "-B", "driver.py", task.entry_point};
    std::vector<std::string> env = {"PATH=/usr/local/bin:/usr/bin:/bin", home, "LANG=C.UTF-8", "PYTHONHASHSEED=0",
                                    "PYTHONDONTWRITEBYTECODE=1"};
    std::vector<char*> argv, envp;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    for (auto& e : env) envp.push_back(e.data());
    envp.push_back(nullptr);
    const rlim_t mem = static_cast<rlim_t>(options.memory_limit_bytes);
    const bool isolate = options.isolate_network;
    const int ruleset = write_confinement(dir_str);
    const bool drop_to_nobody = ruleset < 0 && ::geteuid() == 0;
    if (drop_to_nobody) {
        for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
            [[maybe_unused]] int rc = ::chown(e.path().c_str(), kNobody, kNobody);
        }
        [[maybe_unused]] int rc = ::chown(dir_str.c_str(), kNobody, kNobody);
    }
    struct RulesetCloser {
        int fd;
        ~RulesetCloser() {
            if (fd >= 0) ::close(fd);
        }
    } ruleset_closer{ruleset};

    const auto started = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw SandboxUnavailable(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        auto fail = [](const char* what) {
            [[maybe_unused]] auto w = ::write(2, what, std::strlen(what));
            ::_exit(kSetupFailed);
        };
        ::setpgid(0, 0);
        if (::chdir(dir_str.c_str()) != 0) fail("sandbox: chdir failed\n");
        if (drop_to_nobody) {
            if (::setgroups(0, nullptr) != 0 || ::setgid(kNobody) != 0 || ::setuid(kNobody) != 0) {
                fail("sandbox: cannot drop privileges\n");
            }
        }
        if (isolate && ::unshare(CLONE_NEWUSER | CLONE_NEWNET) != 0) ::unshare(CLONE_NEWNET);
        if (ruleset >= 0) {
            if (::prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0 || ::syscall(SYS_landlock_restrict_self, ruleset, 0) != 0) {
                fail("sandbox: cannot apply the write confinement\n");
            }
        }
        rlimit lim{mem, mem};
        if (mem > 0) ::setrlimit(RLIMIT_AS, &lim);
        rlimit core{0, 0};
        ::setrlimit(RLIMIT_CORE, &core);
        ::dup2(in.fds[0], 0);
        ::dup2(out.fds[1], 1);
        ::dup2(err.fds[1], 2);
        ::dup2(status.fds[1], 3);
        ::execve(argv[0], argv.data(), envp.data());
        fail("sandbox: exec failed\n");
    }
    ::setpgid(pid, pid);
    in.close_read();
    out.close_write();
    err.close_write();
    status.close_write();
    {
        const std::string line = nonce + "\n";
        ::signal(SIGPIPE, SIG_IGN);
        [[maybe_unused]] auto w = ::write(in.fds[1], line.data(), line.size());
        in.close_write();
    }

    RunOutcome outcome;
    std::string status_text;
    const auto deadline = started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(task.timeout_s));
    int wait_status = 0;
    bool reaped = false;
    bool timed_out = false;
    struct Stream {
        int fd;
        std::string* sink;
        std::size_t limit;
    };
    std::vector<Stream> streams = {{out.fds[0], &outcome.stdout_text, options.output_limit_bytes},
                                   {err.fds[0], &outcome.stderr_text, options.output_limit_bytes},
                                   {status.fds[0], &status_text, 4096}};
    char buf[8192];
    while (true) {
        if (!reaped && ::waitpid(pid, &wait_status, WNOHANG) == pid) reaped = true;
        const bool streams_open = std::any_of(streams.begin(), streams.end(), [](const Stream& s) { return s.fd >= 0; });
        if (reaped && !streams_open) break;
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            if (!reaped) timed_out = true;
            break;
        }
        std::vector<pollfd> fds;
        for (const auto& s : streams) {
            if (s.fd >= 0) fds.push_back({s.fd, POLLIN, 0});
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        const int wait_ms = static_cast<int>(std::min<long long>(remaining + 1, reaped ? 50 : 20));
        if (!fds.empty()) {
            ::poll(fds.data(), fds.size(), wait_ms);
        } else {
            std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
        }
        for (auto& s : streams) {
            if (s.fd < 0) continue;
            pollfd p{s.fd, POLLIN, 0};
            if (::poll(&p, 1, 0) <= 0) continue;
            const ssize_t n = ::read(s.fd, buf, sizeof buf);
            if (n > 0) {
                const std::size_t room = s.limit > s.sink->size() ? s.limit - s.sink->size() : 0;
                s.sink->append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
            } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
                s.fd = -1;
            }
        }
        if (reaped) ::kill(-pid, SIGKILL);
    }
    ::kill(-pid, SIGKILL);
    if (!reaped) ::waitpid(pid, &wait_status, 0);
    outcome.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (timed_out) {
        outcome.status = Status::timeout;
        std::ostringstream msg;
        msg << "timed out after " << task.timeout_s << "s";
        outcome.message = msg.str();
        return outcome;
    }

    std::string marker;
    const std::string suffix = ":" + nonce;
    for (std::size_t pos = 0; pos < status_text.size();) {
        auto nl = status_text.find('\n', pos);
        std::string line = status_text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        if (line.size() > suffix.size() && line.ends_with(suffix)) marker = line.substr(0, line.size() - suffix.size());
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }

    if (WIFSIGNALED(wait_status)) {
        outcome.status = Status::crash;
        outcome.message = std::string("killed by signal ") + ::strsignal(WTERMSIG(wait_status));
        return outcome;
    }
    const int code_exit = WIFEXITED(wait_status) ? WEXITSTATUS(wait_status) : -1;
    if (code_exit == kSetupFailed && marker.empty() && outcome.stderr_text.starts_with("sandbox: ")) {
        throw SandboxUnavailable(outcome.stderr_text.substr(0, outcome.stderr_text.find('\n')));
    }
    if (code_exit == 0 && marker == "pass") {
        outcome.status = Status::pass;
    } else if (code_exit == 3 && marker.starts_with("assert ")) {
        outcome.status = Status::fail;
        outcome.message = marker.substr(7);
    } else if (code_exit == 4 && marker.starts_with("error ")) {
        outcome.status = Status::fail;
        outcome.message = marker.substr(6);
    } else {
        outcome.status = Status::crash;
        outcome.message = "exited with status " + std::to_string(code_exit) + " before the tests completed";
        if (auto l = last_line(outcome.stderr_text); !l.empty()) outcome.message += ": " + l;
    }
    return outcome;
}

FeedbackScript::FeedbackScript(std::vector<FeedbackEntry> entries) {
    for (auto& e : entries) {
        if (e.iteration < 1) throw Error("feedback for " + e.task_id + ": iteration must be >= 1");
        auto key = std::make_pair(e.task_id, e.iteration);
        if (!entries_.emplace(key, std::move(e)).second) {
            throw Error("duplicate feedback for " + key.first + " iteration " + std::to_string(key.second));
        }
    }
}

FeedbackEntry feedback_entry_from_json(const json& j) {
    FeedbackEntry e;
    try {
        e.task_id = j.at("task_id").get<std::string>();
        e.iteration = j.at("iteration").get<int>();
        const json& loc = j.at("locate");
        if (loc.is_number_unsigned() || loc.is_number_integer()) {
            const auto v = loc.get<std::int64_t>();
            if (v < 0) throw Error("feedback for " + e.task_id + ": negative segment ordinal");
            e.locate = static_cast<std::size_t>(v);
        } else {
            e.locate = loc.get<std::string>();
        }
        e.comment = j.at("comment").get<std::string>();
    } catch (const json::exception& ex) {
        throw Error(std::string("invalid feedback record: ") + ex.what());
    }
    return e;
}

FeedbackScript FeedbackScript::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read feedback script " + file.string());
    std::vector<FeedbackEntry> entries;
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            entries.push_back(feedback_entry_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return FeedbackScript(std::move(entries));
}

const FeedbackEntry* FeedbackScript::find(const std::string& task_id, int iteration) const {
    auto it = entries_.find({task_id, iteration});
    return it == entries_.end() ? nullptr : &it->second;
}

std::size_t locate_segment(const CommentedView& view, const Locator& locator) {
    const auto& entries = view.entries();
    if (const auto* ordinal = std::get_if<std::size_t>(&locator)) {
        if (*ordinal >= entries.size()) {
            throw UnknownSegment("segment " + std::to_string(*ordinal) + " does not exist (" +
                                 std::to_string(entries.size()) + " segments)");
        }
        return *ordinal;
    }
    const std::string wanted = collapse(std::get<std::string>(locator));
    if (wanted.empty()) throw UnknownSegment("empty statement locator");
    for (const auto& e : entries) {
        if (collapse(e.segment.text) == wanted) return e.segment.id;
    }
    for (const auto& e : entries) {
        if (collapse(e.segment.text).find(wanted) != std::string::npos) return e.segment.id;
    }
    throw UnknownSegment("no segment matches '" + wanted + "'");
}

json to_json(const EvalReport& report) {
    json tasks = json::array();
    for (const auto& t : report.tasks) {
        json rounds = json::array();
        for (const auto& r : t.rounds) {
            json jr{{"round", r.round}, {"status", to_string(r.status)}, {"message", r.message}, {"code", r.code}};
            if (r.edited_segment) {
                jr["edited_segment"] = *r.edited_segment;
                jr["edited_comment"] = r.edited_comment;
            }
            rounds.push_back(std::move(jr));
        }
        json jt{{"task_id", t.task_id}, {"rounds", rounds}};
        jt["passed_at"] = t.passed_at ? json(*t.passed_at) : json(nullptr);
        if (!t.error.empty()) jt["error"] = t.error;
        tasks.push_back(std::move(jt));
    }
    json columns = json::array();
    for (std::size_t i = 0; i < report.pass_at_1.size(); ++i) {
        columns.push_back(i == 0 ? std::string("Original") : std::to_string(i) + (i == 1 ? " iteration" : " iterations"));
    }
    return json{{"max_rounds", report.max_rounds},
                {"columns", columns},
                {"pass_at_1", report.pass_at_1},
                {"tasks", tasks},
                {"metadata", report.metadata}};
}

std::string format_table(const EvalReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "";
    for (std::size_t i = 0; i < report.pass_at_1.size(); ++i) {
        const std::string col = i == 0 ? "Original" : std::to_string(i) + (i == 1 ? " iteration" : " iterations");
        out << std::right << std::setw(14) << col;
    }
    out << "\n" << std::left << std::setw(10) << "pass@1";
    for (double v : report.pass_at_1) out << std::right << std::setw(14) << std::fixed << std::setprecision(2) << v;
    out << "\n";
    return out.str();
}

EvalReport evaluate(const std::vector<Task>& suite, const FeedbackScript& script, EvalBackends backends,
                    const EvalOptions& options) {
    if (suite.empty()) throw Error("evaluation suite is empty");
    if (options.max_rounds < 0) throw Error("max_rounds must be >= 0");

    EvalReport report;
    report.max_rounds = options.max_rounds;
    report.tasks.resize(suite.size());
    const std::string started = now_iso();

    RefinementOptions refinement = options.refinement;
    refinement.max_rounds = options.max_rounds;

    auto run_one = [&](const Task& task) {
        TaskTrail trail;
        trail.task_id = task.id;
        try {
            SourceUnit unit = backends.generator.generate(task.prompt, task.id);
            CommentedView view = generate_comments(unit, task.prompt, backends.commenter, refinement.comments);
            RunOutcome outcome = run_task(task, view.unit(), options.sandbox);
            trail.rounds.push_back(RoundRecord{0, outcome.status, outcome.message, std::nullopt, {}, view.unit().text});
            if (outcome.status == Status::pass) trail.passed_at = 0;

            for (int round = 1; round <= options.max_rounds && !trail.passed_at; ++round) {
                const FeedbackEntry* entry = script.find(task.id, round);
                if (entry == nullptr) break;
                const std::size_t target = locate_segment(view, entry->locate);
                std::vector<SubmittedComment> submitted;
                for (const auto& e : view.entries()) {
                    submitted.push_back({e.segment.id, e.segment.id == target ? entry->comment : e.comment.text});
                }
                RoundOutcome step = refine_round(view, submitted, task.prompt, round, backends.refiner,
                                                 backends.commenter, refinement);
                view = std::move(step.view);
                outcome = run_task(task, view.unit(), options.sandbox);
                trail.rounds.push_back(
                    RoundRecord{round, outcome.status, outcome.message, target, entry->comment, view.unit().text});
                if (outcome.status == Status::pass) trail.passed_at = round;
            }
        } catch (const SandboxUnavailable&) {
            throw;
        } catch (const std::exception& e) {
            trail.error = e.what();
            const int round = trail.rounds.empty() ? 0 : trail.rounds.back().round + 1;
            trail.rounds.push_back(RoundRecord{round, Status::fail, e.what(), std::nullopt, {}, {}});
        }
        return trail;
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(suite.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < suite.size();) {
                    try {
                        report.tasks[i] = run_one(suite[i]);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);

    const auto n = static_cast<double>(suite.size());
    for (int r = 0; r <= options.max_rounds; ++r) {
        double sum = 0.0;
        for (const auto& t : report.tasks) sum += pass_at_k(1, t.passed_at && *t.passed_at <= r ? 1 : 0, 1);
        report.pass_at_1.push_back(sum / n);
    }
    report.metadata = json{{"generator", backends.generator.id()},
                           {"commenter", backends.commenter.id()},
                           {"refiner", backends.refiner.id()},
                           {"task_count", suite.size()},
                           {"max_rounds", options.max_rounds},
                           {"interpreter", options.sandbox.interpreter},
                           {"started", started},
                           {"finished", now_iso()}};
    return report;
}

}  // namespace commentloop::eval
