#include <signal.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "commentloop/codec.hpp"
#include "commentloop/comments.hpp"
#include "commentloop/corpus.hpp"
#include "commentloop/eval.hpp"
#include "commentloop/gateway.hpp"
#include "commentloop/refinement.hpp"
#include "commentloop/segmenter.hpp"
#include "commentloop/session.hpp"

using namespace commentloop;
using nlohmann::json;

namespace {

constexpr const char* kConfigEnv = "COMMENTLOOP_CONFIG";

struct Globals {
    std::string config;
    bool deterministic = false;
    std::uint64_t seed = 0x5eed;
    int verbosity = 0;
};

GatewayConfig load_config(const Globals& g) {
    std::string path = g.config;
    if (path.empty()) {
        if (const char* env = std::getenv(kConfigEnv); env != nullptr) path = env;
    }
    GatewayConfig cfg = path.empty() ? GatewayConfig::offline() : GatewayConfig::load(path);
    if (g.deterministic) cfg.deterministic = true;
    return cfg;
}

std::string read_text(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    return corpus::read_file(path);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("cannot write " + path);
}

std::string span_text(const Span& s) {
    return std::to_string(s.start.line) + ":" + std::to_string(s.start.col) + "-" + std::to_string(s.end.line) + ":" +
           std::to_string(s.end.col);
}

std::string one_line(std::string_view s) {
    std::string out;
    for (char c : s) out += c == '\n' ? ' ' : c;
    return out;
}

json view_json(const CommentedView& view) {
    return json{{"unit", to_json(view.unit())}, {"entries", entries_to_json(view)}, {"rendered", view.rendered()}};
}

int run_segment(const std::string& file, bool as_json) {
    const SourceUnit unit = SourceUnit::from_text(read_text(file), file);
    const auto segments = segment(unit);
    if (as_json) {
        json out{{"origin", unit.origin}, {"parse_status", to_string(unit.parse_status)}, {"segments", json::array()}};
        for (const auto& s : segments) out["segments"].push_back(to_json(s));
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    for (const auto& s : segments) {
        std::cout << s.id << '\t' << to_string(s.kind) << '\t' << s.depth << '\t' << span_text(s.span) << '\t'
                  << one_line(s.text) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statement-level comments for generated Python code, with comment-driven refinement."};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, std::string("Backend config JSON (default: $") + kConfigEnv + ")");
    app.add_flag("--deterministic", g.deterministic, "Mock backends only; live endpoints are rejected");
    app.add_option("--seed", g.seed, "Seed for retry jitter");
    app.add_flag("-v,--verbose", g.verbosity, "Log backend traffic to stderr");

    std::string file, problem, task_id, out_path, locate;
    bool as_json = false;

    auto* seg = app.add_subcommand("segment", "List the segments of a Python file");
    seg->add_option("file", file, "Python file, or - for stdin")->required();
    seg->add_flag("--json", as_json, "Emit JSON");

    auto* com = app.add_subcommand("comment", "Render a file with one generated comment per segment");
    com->add_option("file", file, "Python file, or - for stdin")->required();
    com->add_option("--problem", problem, "Problem description given to the commenter");
    com->add_flag("--json", as_json, "Emit the commented view as JSON");

    auto* gen = app.add_subcommand("generate", "Generate code for a problem and comment it");
    gen->add_option("--problem", problem, "Problem description")->required();
    gen->add_option("--task-id", task_id, "Task identifier passed to the generator");
    gen->add_option("--out", out_path, "Write the generated code here");
    gen->add_flag("--json", as_json, "Emit the commented view as JSON");

    std::size_t segment_id = 0;
    std::string new_comment;
    int iteration = 1;
    auto* ref = app.add_subcommand("refine", "Edit one segment's comment and regenerate code from there");
    ref->add_option("file", file, "Python file")->required();
    auto* seg_opt = ref->add_option("--segment", segment_id, "Segment id to edit");
    auto* loc_opt = ref->add_option("--locate", locate, "Statement text identifying the segment to edit");
    seg_opt->excludes(loc_opt);
    ref->add_option("--comment", new_comment, "New comment text")->required();
    ref->add_option("--problem", problem, "Problem description");
    ref->add_option("--iteration", iteration, "Refinement round number")->check(CLI::Range(1, 1000));
    ref->add_option("--out", out_path, "Write the refined code here instead of overwriting the file");
    ref->add_flag("--json", as_json, "Emit the result as JSON");

    std::string dir, report_path;
    unsigned workers = 0;
    auto* corp = app.add_subcommand("corpus", "Build fine-tuning data from a directory of Python files");
    corp->require_subcommand(1);
    auto* cfilter = corp->add_subcommand("filter", "Write one verdict per file");
    cfilter->add_option("dir", dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
    cfilter->add_option("--report", report_path, "Verdicts JSONL (default: stdout)");
    cfilter->add_option("--workers", workers, "Worker threads (0 = hardware)");
    auto* cextract = corp->add_subcommand("extract", "Write cleaned comment/code pairs from kept files");
    cextract->add_option("dir", dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
    cextract->add_option("--out", out_path, "Pairs JSONL (default: stdout)");
    cextract->add_option("--workers", workers, "Worker threads (0 = hardware)");

    std::string suite_path, script_path;
    int rounds = 3;
    unsigned eval_workers = 4;
    auto* ev = app.add_subcommand("eval", "Run a task suite with scripted comment feedback");
    ev->add_option("--suite", suite_path, "Task suite JSONL")->required()->check(CLI::ExistingFile);
    ev->add_option("--script", script_path, "Feedback script JSONL")->check(CLI::ExistingFile);
    ev->add_option("--rounds", rounds, "Maximum feedback rounds")->check(CLI::Range(0, 100));
    ev->add_option("--report", report_path, "Write the JSON report here");
    ev->add_option("--workers", eval_workers, "Tasks evaluated concurrently")->check(CLI::Range(1u, 256u));
    ev->add_flag("--json", as_json, "Print the JSON report instead of the table");

    std::string addr = "127.0.0.1:8787", data_dir = "sessions";
    int serve_rounds = 3;
    auto* srv = app.add_subcommand("serve", "Serve the session HTTP API");
    srv->add_option("--addr", addr, "host:port to bind (port 0 picks a free port)");
    srv->add_option("--data-dir", data_dir, "Directory for session logs");
    srv->add_option("--rounds", serve_rounds, "Refinement rounds per session")->check(CLI::Range(0, 100));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*seg) return run_segment(file, as_json);

        GatewayConfig config = load_config(g);
        Gateway gateway(std::move(config), {}, g.seed);
        struct Trace {
            Gateway& gateway;
            int verbosity;
            ~Trace() {
                if (verbosity <= 0) return;
                for (const auto& r : gateway.log().records()) {
                    json brief{{"call_id", r.at("call_id")}, {"event", r.at("event")}, {"role", r.at("role")}};
                    if (r.contains("attempt_count")) brief["attempts"] = r.at("attempt_count");
                    if (r.contains("error")) brief["error"] = r.at("error");
                    std::cerr << (verbosity > 1 ? r.dump() : brief.dump()) << "\n";
                }
            }
        } trace{gateway, g.verbosity};

        if (*com) {
            const SourceUnit unit = SourceUnit::from_text(read_text(file), file);
            GatewayCommenter commenter(gateway);
            const CommentedView view = generate_comments(unit, problem, commenter);
            std::cout << (as_json ? view_json(view).dump(2) + "\n" : view.rendered());
            return 0;
        }
        if (*gen) {
            GatewayGenerator generator(gateway);
            GatewayCommenter commenter(gateway);
            const SourceUnit unit = generator.generate(problem, task_id);
            const CommentedView view = generate_comments(unit, problem, commenter);
            if (!out_path.empty()) write_text(out_path, unit.text);
            std::cout << (as_json ? view_json(view).dump(2) + "\n" : view.rendered());
            return 0;
        }
        if (*ref) {
            const SourceUnit unit = SourceUnit::from_text(read_text(file), file);
            GatewayCommenter commenter(gateway);
            GatewayRefiner refiner(gateway);
            const CommentedView view = generate_comments(unit, problem, commenter);
            const std::size_t target = loc_opt->count() > 0 ? eval::locate_segment(view, locate)
                                       : seg_opt->count() > 0 ? eval::locate_segment(view, segment_id)
                                                              : throw Error("one of --segment or --locate is required");
            std::vector<SubmittedComment> submitted;
            for (const auto& e : view.entries()) {
                submitted.push_back({e.segment.id, e.segment.id == target ? new_comment : e.comment.text});
            }
            RefinementOptions options;
            options.max_rounds = std::max(options.max_rounds, iteration);
            const RoundOutcome out = refine_round(view, submitted, problem, iteration, refiner, commenter, options);
            write_text(out_path.empty() ? file : out_path, out.view.unit().text);
            if (as_json) {
                json j = view_json(out.view);
                j["replaced_span"] = to_json(out.result.replaced_span);
                j["regenerated_span"] = to_json(out.result.regenerated_span);
                j["context"] = to_json(out.context);
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << out.view.rendered();
            }
            return 0;
        }
        if (*cfilter) {
            const auto verdicts = corpus::filter_directory(dir, workers);
            std::ostringstream ss;
            std::size_t kept = 0;
            for (const auto& v : verdicts) {
                ss << corpus::to_json(v).dump() << "\n";
                kept += v.kept ? 1 : 0;
            }
            if (report_path.empty()) {
                std::cout << ss.str();
            } else {
                write_text(report_path, ss.str());
            }
            std::cerr << kept << " of " << verdicts.size() << " files kept\n";
            return 0;
        }
        if (*cextract) {
            const auto pairs = corpus::extract_directory(dir, workers);
            std::ostringstream ss;
            for (const auto& p : pairs) ss << corpus::to_json(p).dump() << "\n";
            if (out_path.empty()) {
                std::cout << ss.str();
            } else {
                write_text(out_path, ss.str());
            }
            std::cerr << pairs.size() << " pairs\n";
            return 0;
        }
        if (*ev) {
            const auto suite = eval::load_suite(suite_path);
            const eval::FeedbackScript script =
                script_path.empty() ? eval::FeedbackScript{} : eval::FeedbackScript::load(script_path);
            GatewayGenerator generator(gateway);
            GatewayCommenter commenter(gateway);
            GatewayRefiner refiner(gateway);
            eval::EvalOptions options;
            options.max_rounds = rounds;
            options.workers = eval_workers;
            eval::EvalReport report = eval::evaluate(suite, script, {generator, commenter, refiner}, options);
            report.metadata["seed"] = g.seed;
            report.metadata["deterministic"] = gateway.config().deterministic;
            const json j = eval::to_json(report);
            if (!report_path.empty()) write_text(report_path, j.dump(2) + "\n");
            std::cout << (as_json ? j.dump(2) + "\n" : eval::format_table(report));
            return 0;
        }
        if (*srv) {
            const auto colon = addr.rfind(':');
            if (colon == std::string::npos) throw Error("--addr must be host:port");
            const std::string host = addr.substr(0, colon);
            const int port = std::stoi(addr.substr(colon + 1));

            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);

            session::SessionStore store(data_dir);
            session::ServiceOptions options;
            options.max_rounds = serve_rounds;
            session::SessionService service(store, gateway, options);
            session::HttpApi api(service);
            const int bound = api.bind(host, port);
            std::cout << "listening on " << host << ":" << bound << std::endl;

            std::jthread waiter([&] {
                int sig = 0;
                sigwait(&signals, &sig);
                api.stop();
            });
            api.serve();
            pthread_kill(waiter.native_handle(), SIGTERM);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
