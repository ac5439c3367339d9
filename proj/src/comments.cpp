#include "commentloop/comments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <map>
#include <sstream>
#include <thread>

#include "commentloop/python/tokenizer.hpp"

namespace commentloop {

namespace {

// Physical lines, each keeping its terminator.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t begin = 0;
    while (begin < text.size()) {
        const std::size_t nl = text.find('\n', begin);
        const std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
        lines.push_back(text.substr(begin, end - begin));
        begin = end;
    }
    return lines;
}

std::vector<std::string_view> units_of(std::string_view text) {
    std::vector<std::string_view> units;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t b = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > b) units.push_back(text.substr(b, i - b));
    }
    return units;
}

std::string join(std::span<const std::string_view> parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool ends_sentence(std::string_view unit) {
    const char last = unit.back();
    return last == '.' || last == '!' || last == '?';
}

}  // namespace

std::string_view to_string(Provenance p) { return p == Provenance::generated ? "generated" : "user-edited"; }

Provenance provenance_from(std::string_view s) {
    if (s == "generated") return Provenance::generated;
    if (s == "user-edited") return Provenance::user_edited;
    throw Error("unknown provenance '" + std::string(s) + "'");
}

BackendFailure::BackendFailure(const std::string& what, std::optional<std::size_t> segment_id)
    : Error(segment_id ? "segment " + std::to_string(*segment_id) + ": " + what : what), segment_id_(segment_id) {}

std::string_view indentation_of(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return line.substr(0, i);
}

CommentedView::CommentedView(SourceUnit unit, std::vector<ViewEntry> entries)
    : unit_(std::move(unit)), entries_(std::move(entries)) {
    const std::vector<Segment> expected = segment(unit_);
    if (expected.size() != entries_.size()) {
        throw Error("view has " + std::to_string(entries_.size()) + " entries for " + std::to_string(expected.size()) +
                    " segments");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const ViewEntry& e = entries_[i];
        if (!(e.segment == expected[i])) throw Error("view entry " + std::to_string(i) + " does not match its segment");
        if (e.comment.text.find_first_of("\r\n") != std::string::npos) {
            throw Error("comment for segment " + std::to_string(i) + " spans multiple lines");
        }
        if (units_of(e.comment.text).empty()) throw Error("comment for segment " + std::to_string(i) + " is empty");
    }
    rendered_ = commentloop::render(unit_, entries_);
}

std::size_t count_units(std::string_view text) { return units_of(text).size(); }

CommentRequest build_comment_request(std::span<const Segment> segments, std::size_t index, std::string_view problem,
                                     const CommentOptions& options) {
    CommentRequest req;
    req.segment_id = segments[index].id;
    req.statement = segments[index].text;

    std::vector<std::string_view> statement_units = units_of(req.statement);
    if (statement_units.size() >= options.max_input_units) {
        statement_units.resize(options.max_input_units);
        req.statement = join(statement_units, " ");
        return req;
    }
    std::size_t budget = options.max_input_units - statement_units.size();

    const std::size_t first = index > options.context_statements ? index - options.context_statements : 0;
    std::vector<std::string_view> preceding;
    for (std::size_t i = first; i < index; ++i) preceding.push_back(segments[i].text);

    std::size_t used = 0;
    for (auto s : preceding) used += count_units(s);
    std::size_t drop = 0;
    while (used > budget && drop < preceding.size()) used -= count_units(preceding[drop++]);
    preceding.erase(preceding.begin(), preceding.begin() + static_cast<std::ptrdiff_t>(drop));
    budget -= used;

    std::string head;
    std::vector<std::string_view> problem_units = units_of(problem);
    if (problem_units.size() <= budget) {
        head = std::string(problem);
    } else if (budget > 0) {
        head = join(std::span(problem_units).last(budget), " ");
    }
    std::ostringstream ctx;
    if (!head.empty()) ctx << head;
    for (auto s : preceding) {
        if (ctx.tellp() > 0) ctx << '\n';
        ctx << s;
    }
    req.context = ctx.str();
    return req;
}

std::string normalize_comment(std::string_view raw, std::size_t max_units) {
    std::vector<std::string_view> units = units_of(raw);
    if (units.size() > max_units) {
        units.resize(max_units);
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (ends_sentence(units[i])) {
                units.resize(i + 1);
                break;
            }
        }
    }
    return join(units, " ");
}

std::vector<std::string> request_comments(std::span<const Segment> segments, std::span<const std::size_t> which,
                                          std::string_view problem, CommentBackend& backend,
                                          const CommentOptions& options) {
    const std::size_t n = which.size();
    std::vector<std::string> texts(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                const CommentRequest req = build_comment_request(segments, which[k], problem, options);
                texts[k] = normalize_comment(backend.comment(req), options.max_output_units);
                if (texts[k].empty()) throw Error("backend returned an empty comment");
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, n));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    for (std::size_t k = 0; k < n; ++k) {
        if (!errors[k]) continue;
        try {
            std::rethrow_exception(errors[k]);
        } catch (const std::exception& e) {
            throw BackendFailure(e.what(), segments[which[k]].id);
        }
    }
    return texts;
}

CommentedView generate_comments(const SourceUnit& unit, std::span<const Segment> segments, std::string_view problem,
                                 CommentBackend& backend, const CommentOptions& options) {
    if (segments.empty()) throw Error("no segments to comment");
    std::vector<std::size_t> all(segments.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<std::string> texts = request_comments(segments, all, problem, backend, options);

    std::vector<ViewEntry> entries;
    entries.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        entries.push_back({segments[i], {std::move(texts[i]), Provenance::generated, backend.id()}});
    }
    return CommentedView(unit, std::move(entries));
}

CommentedView generate_comments(const SourceUnit& unit, std::string_view problem, CommentBackend& backend,
                                const CommentOptions& options) {
    const std::vector<Segment> segs = segment(unit);
    return generate_comments(unit, segs, problem, backend, options);
}

std::string render(const SourceUnit& unit, std::span<const ViewEntry> entries) {
    std::multimap<int, const ViewEntry*> by_anchor;
    for (const ViewEntry& e : entries) by_anchor.emplace(e.segment.anchor_line, &e);

    const std::vector<std::string_view> lines = split_lines(unit.text);
    std::string out;
    out.reserve(unit.text.size() + entries.size() * 32);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        auto [lo, hi] = by_anchor.equal_range(line_no);
        const std::string_view indent = indentation_of(lines[i]);
        for (auto it = lo; it != hi; ++it) {
            out += indent;
            out += "# ";
            out += it->second->comment.text;
            out += '\n';
        }
        out += lines[i];
    }
    return out;
}

SourceUnit strip_comments(std::string_view text, std::string origin) {
    if (text.empty()) return SourceUnit{std::string(), std::move(origin), ParseStatus::parsed};
    const SourceUnit rendered = SourceUnit::from_text(std::string(text));
    const std::vector<Segment> segs = segment(rendered);
    std::map<int, std::size_t> per_anchor;
    for (const Segment& s : segs) ++per_anchor[s.anchor_line];

    const std::vector<std::string_view> lines = split_lines(text);
    std::vector<bool> drop(lines.size(), false);
    for (const auto& [anchor, count] : per_anchor) {
        const auto anchor_idx = static_cast<std::size_t>(anchor - 1);
        if (anchor_idx < count || anchor_idx >= lines.size()) continue;
        const std::string_view indent = indentation_of(lines[anchor_idx]);
        bool all = true;
        for (std::size_t k = 1; k <= count; ++k) {
            const std::string_view above = lines[anchor_idx - k];
            if (above.substr(0, indent.size()) != indent || above.substr(indent.size(), 2) != "# ") {
                all = false;
                break;
            }
        }
        if (!all) continue;
        for (std::size_t k = 1; k <= count; ++k) drop[anchor_idx - k] = true;
    }
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!drop[i]) out += lines[i];
    }
    return SourceUnit::from_text(std::move(out), std::move(origin));
}

}  // namespace commentloop
