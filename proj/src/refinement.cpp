#include "commentloop/refinement.hpp"

#include <algorithm>
#include <map>

#include "commentloop/python/parser.hpp"
#include "commentloop/python/tokenizer.hpp"

namespace commentloop {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(b, e - b + 1);
}

std::string_view line_at(std::string_view text, std::size_t offset) {
    const std::size_t end = text.find('\n', offset);
    std::string_view line = text.substr(offset, end == std::string_view::npos ? std::string_view::npos : end - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool is_code_line(std::string_view line) { return !python::is_blank_line(line) && !python::is_comment_line(line); }

// First logical line after `from` (exclusive of the line containing it) that dedents to `def_indent` or less,
// moved up past the blank lines directly above it.
std::size_t region_end(std::string_view text, std::size_t from, std::optional<int> def_indent) {
    if (!def_indent) return text.size();
    for (std::size_t start : python::lenient_line_starts(text)) {
        if (start <= from) continue;
        const std::string_view line = line_at(text, start);
        if (!is_code_line(line) || python::indent_width(line) > *def_indent) continue;
        std::size_t end = start;
        while (end >= 2 && end > from) {
            const std::size_t prev = text.rfind('\n', end - 2);
            const std::size_t prev_start = prev == std::string_view::npos ? 0 : prev + 1;
            if (prev_start <= from || !python::is_blank_line(line_at(text, prev_start))) break;
            end = prev_start;
        }
        return end;
    }
    return text.size();
}

const python::Stmt* innermost_def(const std::vector<python::Stmt>& body, Position pos, const python::Stmt* best) {
    for (const python::Stmt& s : body) {
        if (!s.compound()) continue;
        if (pos < s.span.start || !(pos < s.span.end)) continue;
        const python::Stmt* here = best;
        if (s.kind == python::StmtKind::function_def && s.clauses.front().header.end <= pos) here = &s;
        for (const python::Clause& c : s.clauses) {
            const python::Stmt* inner = innermost_def(c.body, pos, here);
            if (inner != here) return inner;
        }
        return here;
    }
    return best;
}

std::optional<int> def_indent_by_lines(std::string_view text, std::size_t offset) {
    const LineIndex index(text);
    const Position pos = index.position(offset);
    int bound = python::indent_width(index.line(pos.line));
    for (int line = pos.line - 1; line >= 1 && bound > 0; --line) {
        const std::string_view content = index.line(line);
        if (!is_code_line(content)) continue;
        const int width = python::indent_width(content);
        if (width >= bound) continue;
        const std::string_view body = trim(content);
        if (body.starts_with("def ") || body.starts_with("async def ")) return width;
        bound = width;
    }
    return std::nullopt;
}

}  // namespace

std::string RefinementContext::prompt() const {
    std::string out(trim(problem));
    if (!out.empty()) out += "\n\n";
    out += prefix;
    out += indent;
    out += "# ";
    out += edited_comment;
    out += '\n';
    return out;
}

std::vector<CommentEdit> diff_views(const CommentedView& old, std::span<const SubmittedComment> submitted,
                                    int iteration) {
    std::map<std::size_t, std::string> latest;
    for (const SubmittedComment& c : submitted) {
        if (c.segment_id >= old.entries().size()) {
            throw UnknownSegment("segment " + std::to_string(c.segment_id) + " does not exist");
        }
        latest[c.segment_id] = std::string(trim(c.text));
    }
    std::vector<CommentEdit> edits;
    for (auto& [id, text] : latest) {
        if (text == trim(old.entries()[id].comment.text)) continue;
        if (text.empty()) throw InvalidEdit("comment for segment " + std::to_string(id) + " is empty");
        if (text.find_first_of("\r\n") != std::string::npos) {
            throw InvalidEdit("comment for segment " + std::to_string(id) + " spans multiple lines");
        }
        edits.push_back({id, std::move(text), iteration});
    }
    return edits;
}

RefinementPoint locate_refinement_point(std::span<const CommentEdit> edits) {
    if (edits.empty()) throw NoEdit();
    auto first = std::min_element(edits.begin(), edits.end(),
                                  [](const CommentEdit& a, const CommentEdit& b) { return a.segment_id < b.segment_id; });
    RefinementPoint point{*first, {}};
    for (auto it = edits.begin(); it != edits.end(); ++it) {
        if (it != first) point.pending.push_back(*it);
    }
    std::sort(point.pending.begin(), point.pending.end(),
              [](const CommentEdit& a, const CommentEdit& b) { return a.segment_id < b.segment_id; });
    return point;
}

RefinementContext build_context(const CommentedView& view, const CommentEdit& edit, std::string_view problem,
                                std::vector<CommentEdit> pending) {
    const auto& entries = view.entries();
    if (edit.segment_id >= entries.size()) {
        throw UnknownSegment("segment " + std::to_string(edit.segment_id) + " does not exist");
    }
    const std::string& text = view.unit().text;
    const Segment& seg = entries[edit.segment_id].segment;
    const LineIndex index(text);
    const std::size_t anchor_start = index.line_start(seg.anchor_line);

    std::vector<ViewEntry> before;
    std::vector<const ViewEntry*> same_line;
    for (std::size_t i = 0; i < edit.segment_id; ++i) {
        if (entries[i].segment.anchor_line < seg.anchor_line) {
            before.push_back(entries[i]);
        } else {
            same_line.push_back(&entries[i]);
        }
    }

    RefinementContext ctx;
    ctx.problem = std::string(problem);
    ctx.indent = std::string(indentation_of(index.line(seg.anchor_line)));
    SourceUnit head{text.substr(0, anchor_start), view.unit().origin, view.unit().parse_status};
    ctx.prefix = render(head, before);
    for (const ViewEntry* e : same_line) ctx.prefix += ctx.indent + "# " + e->comment.text + "\n";
    ctx.edited_comment = edit.new_text;
    ctx.pending_edits = std::move(pending);
    ctx.segment_id = edit.segment_id;
    ctx.splice_offset = index.offset(seg.span.start);
    ctx.iteration = edit.iteration;
    return ctx;
}

std::optional<int> enclosing_def_indent(const SourceUnit& unit, std::size_t offset) {
    if (unit.parse_status == ParseStatus::parsed) {
        try {
            const python::Module module = python::parse(unit.text);
            const LineIndex index(unit.text);
            const python::Stmt* def = innermost_def(module.body, index.position(offset), nullptr);
            if (def == nullptr) return std::nullopt;
            return python::indent_width(index.line(def->clauses.front().header.start.line));
        } catch (const python::SyntaxError&) {
        }
    }
    return def_indent_by_lines(unit.text, offset);
}

std::string trim_completion(std::string_view completion, std::string_view lead, std::optional<int> def_indent) {
    std::string_view c = completion;
    while (!c.empty()) {
        const std::size_t nl = c.find('\n');
        if (nl == std::string_view::npos || !python::is_blank_line(c.substr(0, nl))) break;
        c.remove_prefix(nl + 1);
    }
    // Drop a repeated `lead`; a mid-line splice also drops leading indentation.
    if (!trim(lead).empty() && c.starts_with(lead)) {
        c.remove_prefix(lead.size());
    } else if (!lead.empty()) {
        c.remove_prefix(std::min(c.find_first_not_of(" \t"), c.size()));
    }
    if (python::is_blank_line(c)) return {};
    return std::string(c.substr(0, region_end(c, 0, def_indent)));
}

std::pair<RefinementResult, CommentedView> apply_refinement(const CommentedView& view, const RefinementContext& ctx,
                                                            RefinementBackend& refiner, CommentBackend& commenter,
                                                            const RefinementOptions& options) {
    if (ctx.iteration < 1 || ctx.iteration > options.max_rounds) {
        throw RoundsExhausted("iteration " + std::to_string(ctx.iteration) + " exceeds the limit of " +
                              std::to_string(options.max_rounds));
    }
    const auto& entries = view.entries();
    if (ctx.segment_id >= entries.size()) {
        throw UnknownSegment("segment " + std::to_string(ctx.segment_id) + " does not exist");
    }
    const std::string& old = view.unit().text;
    const LineIndex old_index(old);
    const Segment& seg = entries[ctx.segment_id].segment;
    const std::size_t splice = ctx.splice_offset;

    std::string raw;
    try {
        raw = refiner.complete(ctx);
    } catch (const BackendFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendFailure(e.what());
    }

    const std::size_t line_begin = old_index.line_start(seg.span.start.line);
    const std::string_view lead = std::string_view(old).substr(line_begin, splice - line_begin);
    const std::optional<int> def_indent = enclosing_def_indent(view.unit(), splice);
    const std::size_t old_end = region_end(old, splice, def_indent);

    const std::string body = trim_completion(raw, lead, def_indent);
    if (trim(body).empty()) throw SpliceFailure("completion is empty after trimming");

    std::string text = old.substr(0, splice) + body;
    const std::string_view trailing = std::string_view(old).substr(old_end);
    if (!trailing.empty() && text.back() != '\n') text += '\n';
    const std::size_t regen_end = text.size();
    text += trailing;

    SourceUnit unit = SourceUnit::from_text(std::move(text), view.unit().origin);
    if (unit.parse_status == ParseStatus::fallback && !options.allow_fallback) {
        throw SpliceFailure("refined code does not parse and line fallback is disabled");
    }

    const std::vector<Segment> segs = segment(unit);
    const LineIndex new_index(unit.text);

    std::vector<const ViewEntry*> old_trailing;
    for (const ViewEntry& e : entries) {
        if (old_index.offset(e.segment.span.start) >= old_end) old_trailing.push_back(&e);
    }

    std::vector<std::optional<CommentRecord>> comments(segs.size());
    std::optional<std::size_t> anchored;
    std::size_t trailing_seen = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const Segment& s = segs[i];
        const std::size_t b = new_index.offset(s.span.start);
        const std::size_t e = new_index.offset(s.span.end);
        if (e <= splice) {
            for (const ViewEntry& old_entry : entries) {
                if (old_entry.segment.span == s.span && old_entry.segment.text == s.text) {
                    comments[i] = old_entry.comment;
                    break;
                }
            }
        } else if (!anchored) {
            anchored = i;
            comments[i] = CommentRecord{ctx.edited_comment, Provenance::user_edited, "user"};
            if (b >= regen_end) throw SpliceFailure("completion produced no statement at the refinement point");
        } else if (b >= regen_end) {
            const std::size_t k = trailing_seen++;
            if (k < old_trailing.size() && old_trailing[k]->segment.text == s.text &&
                old_trailing[k]->segment.kind == s.kind) {
                comments[i] = old_trailing[k]->comment;
            }
        }
    }
    if (!anchored) throw SpliceFailure("completion produced no statement at the refinement point");

    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (!comments[i]) missing.push_back(i);
    }
    if (!missing.empty()) {
        std::vector<std::string> texts = request_comments(segs, missing, ctx.problem, commenter, options.comments);
        for (std::size_t k = 0; k < missing.size(); ++k) {
            comments[missing[k]] = CommentRecord{std::move(texts[k]), Provenance::generated, commenter.id()};
        }
    }

    std::vector<ViewEntry> new_entries;
    new_entries.reserve(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) new_entries.push_back({segs[i], std::move(*comments[i])});

    RefinementResult result;
    result.replaced_span = Span{seg.span.start, old_index.position(old_end)};
    result.regenerated_span = Span{new_index.position(splice), new_index.position(regen_end)};
    result.iteration = ctx.iteration;
    CommentedView new_view(unit, std::move(new_entries));
    result.new_unit = std::move(unit);
    return {std::move(result), std::move(new_view)};
}

RoundOutcome refine_round(const CommentedView& view, std::span<const SubmittedComment> submitted,
                          std::string_view problem, int iteration, RefinementBackend& refiner,
                          CommentBackend& commenter, const RefinementOptions& options) {
    if (iteration > options.max_rounds) {
        throw RoundsExhausted("all " + std::to_string(options.max_rounds) + " refinement rounds are used");
    }
    std::vector<CommentEdit> edits = diff_views(view, submitted, iteration);
    RefinementPoint point = locate_refinement_point(edits);
    RefinementContext ctx = build_context(view, point.edit, problem, point.pending);
    auto [result, new_view] = apply_refinement(view, ctx, refiner, commenter, options);
    return RoundOutcome{std::move(edits), std::move(point.edit), std::move(point.pending), std::move(ctx),
                        std::move(result), std::move(new_view)};
}

}  // namespace commentloop
