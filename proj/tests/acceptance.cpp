#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <thread>

#include "commentloop/eval.hpp"
#include "commentloop/session.hpp"
#include "httplib.h"
#include "properties.hpp"
#include "testkit.hpp"

extern char** environ;

using namespace commentloop;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;
    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Verdict segmentation_conformance() {
    Verdict v;
    const auto files = testkit::segment_fixtures();
    if (files.size() != 25) v.fail(std::to_string(files.size()) + " fixtures, want 25");
    std::size_t mismatches = 0;
    const auto t0 = Clock::now();
    for (const auto& f : files) {
        if (const auto m = testkit::fixture_mismatch(f); !m.empty()) {
            ++mismatches;
            v.fail(m);
        }
    }
    const double elapsed = seconds_since(t0);
    if (elapsed >= 1.0) v.fail("took " + std::to_string(elapsed) + "s");
    if (v.ok) v.detail = std::to_string(files.size()) + " fixtures, " + std::to_string(mismatches) + " mismatches, " +
                         std::to_string(elapsed) + "s";
    return v;
}

Verdict reassembly_and_idempotence() {
    Verdict v;
    testkit::EchoCommenter commenter;
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        testkit::ProgramGen gen(seed * 104729 + 17);
        const auto unit = SourceUnit::from_text(gen.program());
        if (unit.parse_status != ParseStatus::parsed) {
            v.fail("seed " + std::to_string(seed) + " did not parse");
            continue;
        }
        if (auto e = testkit::reassembly_error(unit, segment(unit)); !e.empty()) v.fail("seed " + std::to_string(seed) + ": " + e);
        if (auto e = testkit::idempotence_error(unit, commenter); !e.empty()) v.fail("seed " + std::to_string(seed) + ": " + e);
        ++checked;
    }
    if (v.ok) v.detail = std::to_string(checked) + " random programs";
    return v;
}

double enumerated_pass_at_k(int n, int c, int k) {
    long hit = 0;
    long total = 0;
    for (unsigned s = 0; s < (1u << n); ++s) {
        if (std::popcount(s) != k) continue;
        ++total;
        hit += (s & ((1u << c) - 1u)) != 0;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

Verdict pass_at_k_exactness() {
    Verdict v;
    double worst = 0.0;
    for (int n = 1; n <= 12; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) worst = std::max(worst, std::abs(eval::pass_at_k(n, c, k) - enumerated_pass_at_k(n, c, k)));
        }
    }
    if (worst > 1e-12) v.fail("max deviation " + std::to_string(worst));
    for (int n = 1; n <= 1000 && v.ok; ++n) {
        for (int c = 0; c <= n; ++c) {
            if (eval::pass_at_k(n, c, 1) != static_cast<double>(c) / n) {
                v.fail("pass@1 != c/n at n=" + std::to_string(n) + " c=" + std::to_string(c));
                break;
            }
        }
    }
    if (v.ok) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "max deviation %.3g for n <= 12", worst);
        v.detail = buf;
    }
    return v;
}

Verdict prefix_preservation() {
    Verdict v;
    int held = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::string e = testkit::prefix_round_error(seed + 5000);
        if (e.empty()) {
            ++held;
        } else {
            v.fail("seed " + std::to_string(seed + 5000) + ": " + e);
        }
    }
    v.detail = std::to_string(held) + "/200 rounds" + (v.ok ? "" : "; " + v.detail);
    return v;
}

Verdict corpus_rules() {
    Verdict v;
    std::size_t checked = 0;
    for (const auto& m : testkit::corpus_label_mismatches(&checked)) v.fail(m);
    if (checked != 50) v.fail(std::to_string(checked) + " labeled files, want 50");
    const auto dir = testkit::fixtures() / "corpus";
    auto verdict = [&](const char* name) { return corpus::filter_file(testkit::read_text(dir / name), name); };
    if (!verdict("ratio_030_100.py").kept) v.fail("ratio 0.30 dropped");
    if (!verdict("ratio_095_100.py").kept) v.fail("ratio 0.95 dropped");
    if (verdict("avg_len_101.py").kept) v.fail("avg line length 101 kept");
    if (v.ok) v.detail = "50 files match their labels";
    return v;
}

Verdict end_to_end() {
    Verdict v;
    const auto dir = testkit::fixtures() / "eval";
    GatewayConfig cfg = GatewayConfig::load(dir / "config.json");
    for (const auto& [role, c] : cfg.roles) {
        if (c.live()) v.fail("config uses a live backend");
    }
    Gateway gateway(cfg);
    GatewayGenerator generator(gateway);
    GatewayCommenter commenter(gateway);
    GatewayRefiner refiner(gateway);
    const auto t0 = Clock::now();
    const auto report = eval::evaluate(eval::load_suite(dir / "suite.jsonl"), eval::FeedbackScript::load(dir / "script.jsonl"),
                                       {generator, commenter, refiner});
    const double elapsed = seconds_since(t0);
    const std::vector<double> want{0.4, 0.7, 0.9};
    std::string trail;
    for (std::size_t i = 0; i < report.pass_at_1.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%s%.2f", i ? " -> " : "", report.pass_at_1[i]);
        trail += buf;
        if (i > 0 && report.pass_at_1[i] < report.pass_at_1[i - 1]) v.fail("not monotone: " + trail);
    }
    if (report.pass_at_1.size() < want.size()) v.fail("trail too short: " + trail);
    for (std::size_t i = 0; i < want.size() && i < report.pass_at_1.size(); ++i) {
        if (std::abs(report.pass_at_1[i] - want[i]) > 1e-12) v.fail("trail " + trail);
    }
    for (const auto& r : gateway.log().records()) {
        if (!r.value("endpoint", std::string()).empty()) v.fail("network call recorded");
    }
    if (elapsed >= 60.0) v.fail("took " + std::to_string(elapsed) + "s");
    if (v.ok) v.detail = trail + " in " + std::to_string(elapsed) + "s";
    return v;
}

Verdict sandbox_isolation() {
    Verdict v;
    const eval::Task spin{"spin", "p", "spin", "def check(candidate):\n    candidate()\n", 1.0};
    const auto t0 = Clock::now();
    const auto r = eval::run_task(spin, SourceUnit::from_text("import os\ndef spin():\n    os.fork()\n    while True:\n        pass\n"));
    const double elapsed = seconds_since(t0);
    if (r.status != eval::Status::timeout) v.fail("spinning task ended as " + std::string(eval::to_string(r.status)));
    if (elapsed > 2.0) v.fail("timeout took " + std::to_string(elapsed) + "s");

    testkit::TempDir harness;
    const auto keep = harness.path() / "harness.py";
    testkit::write_text(keep, "HARNESS = True\n");
    const std::string code = "import os, shutil\n"
                             "def wipe():\n"
                             "    for p in ('tests.py', 'driver.py', " + testkit::quote(keep.string()) + "):\n"
                             "        try:\n"
                             "            os.remove(p)\n"
                             "        except OSError:\n"
                             "            pass\n"
                             "    shutil.rmtree(" + testkit::quote(harness.path().string()) + ", ignore_errors=True)\n";
    const eval::Task wipe{"wipe", "p", "wipe", "def check(candidate):\n    candidate()\n", 10.0};
    const auto w = eval::run_task(wipe, SourceUnit::from_text(code));
    if (w.status != eval::Status::pass) v.fail("deleting candidate ended as " + std::string(eval::to_string(w.status)) + ": " + w.message);
    if (testkit::read_text(keep) != "HARNESS = True\n") v.fail("harness file was deleted");
    if (v.ok) v.detail = "timeout after " + std::to_string(elapsed) + "s, harness files intact";
    return v;
}

// --- crash safety ----------------------------------------------------------

class Server {
public:
    Server(const std::string& config, const std::string& data_dir) {
        int fds[2];
        if (::pipe(fds) != 0) throw std::runtime_error("pipe");
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, fds[1], 1);
        posix_spawn_file_actions_addclose(&actions, fds[0]);
        posix_spawn_file_actions_addclose(&actions, fds[1]);
        std::vector<std::string> args{testkit::cli(), "--config", config, "serve", "--addr", "127.0.0.1:0", "--data-dir", data_dir};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        const int rc = ::posix_spawn(&pid_, argv[0], &actions, nullptr, argv.data(), environ);
        posix_spawn_file_actions_destroy(&actions);
        ::close(fds[1]);
        if (rc != 0) {
            ::close(fds[0]);
            throw std::runtime_error("cannot start server");
        }
        std::string line;
        char ch;
        while (::read(fds[0], &ch, 1) == 1 && ch != '\n') line += ch;
        ::close(fds[0]);
        const auto colon = line.rfind(':');
        if (line.rfind("listening on ", 0) != 0 || colon == std::string::npos) throw std::runtime_error("server said '" + line + "'");
        port_ = std::stoi(line.substr(colon + 1));
    }
    ~Server() { kill(); }

    void kill() {
        if (pid_ <= 0) return;
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
    int port() const { return port_; }

private:
    pid_t pid_ = -1;
    int port_ = 0;
};

json comments_with(const json& view, std::size_t target, const std::string& text) {
    json out = json::array();
    for (const auto& s : view.at("segments")) {
        const auto id = s.at("id").get<std::size_t>();
        out.push_back({{"segment_id", id}, {"text", id == target ? text : s.at("comment").get<std::string>()}});
    }
    return {{"comments", out}};
}

std::string fs_path(const std::string& data, const std::string& id) { return session::SessionStore(data).file(id).string(); }

Verdict crash_safety() {
    Verdict v;
    testkit::TempDir dir;
    json mock = json::parse(testkit::read_text(testkit::fixtures() / "eval" / "mock.json"));
    mock["refiner"]["delay_ms"] = 150;
    testkit::write_text(dir.path() / "mock.json", mock.dump());
    testkit::write_text(dir.path() / "config.json", json{{"deterministic", true}, {"mock_script", "mock.json"}}.dump());
    const std::string config = (dir.path() / "config.json").string();
    const std::string data = (dir.path() / "sessions").string();

    const std::string problem = "Given a positive integer N, return the total sum of its digits in binary.";
    const std::string edit = "convert the input N to a binary string without prefix";
    std::vector<std::string> ids;
    std::map<std::string, int> rounds_before;
    int kills = 0;
    int checked = 0;
    int advanced = 0;

    for (int cycle = 0; cycle < 4 && v.ok; ++cycle) {
        Server server(config, data);
        httplib::Client c("127.0.0.1", server.port());
        c.set_read_timeout(30);
        for (int i = 0; i < 3; ++i) {
            auto res = c.Post("/sessions", json{{"problem", problem}, {"task_id", "t05"}}.dump(), "application/json");
            if (!res || res->status != 201) {
                v.fail("create failed");
                break;
            }
            const std::string id = json::parse(res->body)["id"];
            ids.push_back(id);
            if (i < 2 && !c.Post("/sessions/" + id + "/generate", "", "application/json")) v.fail("generate failed");
        }
        for (const auto& id : ids) {
            auto res = c.Get("/sessions/" + id + "/view");
            if (!res || res->status != 200) {
                v.fail("view of " + id + " failed after restart");
                continue;
            }
            rounds_before[id] = json::parse(res->body)["round"].get<int>();
        }

        // Start a submit on every session that can take one, then kill the server mid-flight.
        std::vector<std::thread> clients;
        for (const auto& id : ids) {
            clients.emplace_back([port = server.port(), id, &edit] {
                httplib::Client cc("127.0.0.1", port);
                cc.set_read_timeout(30);
                auto view = cc.Get("/sessions/" + id + "/view");
                if (!view || view->status != 200) return;
                const json j = json::parse(view->body);
                if (j["segments"].size() < 2) return;
                const bool edited = j["segments"][1]["comment"] == edit;
                cc.Post("/sessions/" + id + "/comments",
                        comments_with(j, edited ? 0 : 1, edited ? "start the total at zero" : edit).dump(), "application/json");
            });
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(60 + 70 * cycle));
        server.kill();
        ++kills;
        for (auto& t : clients) t.join();

        // A write cut short by the kill leaves a torn final line.
        if (cycle == 1) {
            std::ofstream torn(fs_path(data, ids.front()), std::ios::app | std::ios::binary);
            torn << R"({"type": "refined", "iteration": 9, "un)";
        }

        Server restarted(config, data);
        httplib::Client r("127.0.0.1", restarted.port());
        r.set_read_timeout(30);
        for (const auto& id : ids) {
            auto view = r.Get("/sessions/" + id + "/view");
            auto log = r.Get("/sessions/" + id + "/history?format=jsonl");
            if (!view || view->status != 200 || !log || log->status != 200) {
                v.fail("session " + id + " unavailable after restart");
                continue;
            }
            const json j = json::parse(view->body);
            std::vector<json> events;
            std::istringstream lines(log->body);
            for (std::string line; std::getline(lines, line);) events.push_back(json::parse(line));
            int refined = 0;
            for (const auto& e : events) refined += e["type"] == "refined";
            if (j["state"] == "refining") v.fail(id + " still refining after restart");
            if (j["round"].get<int>() != refined) v.fail(id + " round " + j["round"].dump() + " but " + std::to_string(refined) + " refined events");
            const int before = rounds_before[id];
            advanced += refined == before + 1;
            if (refined != before && refined != before + 1) v.fail(id + " jumped from round " + std::to_string(before) + " to " + std::to_string(refined));
            if (j["code"].is_null()) {
                ++checked;
                continue;
            }
            const auto units = session::replay(events);
            if (units.empty() || units.back().text != j["code"].get<std::string>()) v.fail(id + " replay differs from the stored code");
            ++checked;
        }
        restarted.kill();
    }
    if (v.ok) v.detail = std::to_string(kills) + " kills, " + std::to_string(checked) + " session checks (" + std::to_string(advanced) +
                         " rounds committed before a kill), replay byte-exact";
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"segmentation conformance", segmentation_conformance},
        {"reassembly and idempotence", reassembly_and_idempotence},
        {"pass@k exactness", pass_at_k_exactness},
        {"prefix preservation", prefix_preservation},
        {"corpus rules", corpus_rules},
        {"end-to-end feedback trail", end_to_end},
        {"sandbox isolation", sandbox_isolation},
        {"crash safety and replay", crash_safety},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.fail(std::string("exception: ") + e.what());
        }
        std::cout << (v.ok ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
        failed += v.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
