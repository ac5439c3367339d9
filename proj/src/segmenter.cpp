#include "commentloop/segmenter.hpp"

#include <array>

#include "commentloop/python/parser.hpp"

namespace commentloop {

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "simple", "loop-header", "branch-condition", "else-body-member", "with-header", "body-member", "fallback-line",
};

using python::ClauseKind;
using python::Stmt;
using python::StmtKind;

class Walker {
public:
    explicit Walker(std::string_view text) : text_(text), index_(text) {}

    std::vector<Segment> run(const python::Module& module) {
        walk(module.body, SegmentKind::simple, 0, true);
        return std::move(out_);
    }

private:
    void emit(const Span& span, SegmentKind kind, int depth, int anchor) {
        const std::size_t b = index_.offset(span.start);
        const std::size_t e = index_.offset(span.end);
        out_.push_back(Segment{out_.size(), span, kind, depth, std::string(text_.substr(b, e - b)), anchor});
    }

    void walk(const std::vector<Stmt>& body, SegmentKind member, int depth, bool docstring_slot) {
        for (std::size_t i = 0; i < body.size(); ++i) {
            const Stmt& s = body[i];
            if (i == 0 && docstring_slot && python::is_docstring(s)) continue;
            switch (s.kind) {
                case StmtKind::import:
                case StmtKind::import_from:
                    break;
                case StmtKind::function_def:
                case StmtKind::class_def:
                    walk(s.clauses.front().body, SegmentKind::simple, 0, true);
                    break;
                case StmtKind::if_:
                    for (const auto& c : s.clauses) {
                        if (c.kind == ClauseKind::else_) {
                            walk(c.body, SegmentKind::else_body_member, depth + 1, false);
                        } else {
                            emit(c.header, SegmentKind::branch_condition, depth, c.header.start.line);
                            walk(c.body, SegmentKind::body_member, depth + 1, false);
                        }
                    }
                    break;
                case StmtKind::for_:
                case StmtKind::while_:
                    for (const auto& c : s.clauses) {
                        if (c.kind == ClauseKind::else_) {
                            walk(c.body, SegmentKind::else_body_member, depth + 1, false);
                        } else {
                            emit(c.header, SegmentKind::loop_header, depth, c.header.start.line);
                            walk(c.body, SegmentKind::body_member, depth + 1, false);
                        }
                    }
                    break;
                case StmtKind::with:
                    emit(s.clauses.front().header, SegmentKind::with_header, depth, s.clauses.front().header.start.line);
                    walk(s.clauses.front().body, SegmentKind::body_member, depth + 1, false);
                    break;
                case StmtKind::try_:
                    for (const auto& c : s.clauses) {
                        walk(c.body, c.kind == ClauseKind::else_ ? SegmentKind::else_body_member : SegmentKind::body_member,
                             depth + 1, false);
                    }
                    break;
                default:
                    emit(s.span, member, depth, s.logical_line);
                    break;
            }
        }
    }

    std::string_view text_;
    LineIndex index_;
    std::vector<Segment> out_;
};

}  // namespace

std::string_view to_string(SegmentKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

SegmentKind segment_kind_from(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == s) return static_cast<SegmentKind>(i);
    }
    throw Error("unknown segment kind '" + std::string(s) + "'");
}

std::vector<Segment> segment_source(const SourceUnit& unit) {
    python::Module module;
    try {
        module = python::parse(unit.text);
    } catch (const python::SyntaxError& e) {
        throw ParseFailure(e.what());
    }
    return Walker(unit.text).run(module);
}

std::vector<Segment> segment_lines(const SourceUnit& unit) {
    std::vector<Segment> out;
    if (unit.text.empty()) return out;
    const LineIndex index(unit.text);
    for (int line = 1; line <= index.line_count(); ++line) {
        const std::string_view content = index.line(line);
        if (python::is_blank_line(content) || python::is_comment_line(content)) continue;
        Span span{{line, 0}, {line, static_cast<int>(content.size())}};
        out.push_back(Segment{out.size(), span, SegmentKind::fallback_line, 0, std::string(content), line});
    }
    return out;
}

std::vector<Segment> segment(const SourceUnit& unit) {
    try {
        return segment_source(unit);
    } catch (const ParseFailure&) {
        return segment_lines(unit);
    }
}

}  // namespace commentloop
