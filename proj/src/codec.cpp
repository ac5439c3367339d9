#include "commentloop/codec.hpp"

namespace commentloop {

using nlohmann::json;

json to_json(const Position& p) { return json{{"line", p.line}, {"col", p.col}}; }

json to_json(const Span& s) { return json{{"start", to_json(s.start)}, {"end", to_json(s.end)}}; }

json to_json(const Segment& s) {
    return json{{"id", s.id},      {"kind", to_string(s.kind)}, {"depth", s.depth},
                {"span", to_json(s.span)}, {"anchor_line", s.anchor_line}, {"text", s.text}};
}

json to_json(const SourceUnit& u) {
    return json{{"text", u.text}, {"origin", u.origin}, {"parse_status", to_string(u.parse_status)}};
}

json to_json(const ViewEntry& e) {
    return json{{"segment", to_json(e.segment)},
                {"comment", e.comment.text},
                {"provenance", to_string(e.comment.provenance)},
                {"backend", e.comment.backend_id}};
}

json entries_to_json(const CommentedView& v) {
    json out = json::array();
    for (const auto& e : v.entries()) out.push_back(to_json(e));
    return out;
}

json to_json(const CommentEdit& e) {
    return json{{"segment_id", e.segment_id}, {"new_text", e.new_text}, {"iteration", e.iteration}};
}

json to_json(const RefinementContext& c) {
    json pending = json::array();
    for (const auto& e : c.pending_edits) pending.push_back(to_json(e));
    return json{{"segment_id", c.segment_id},
                {"edited_comment", c.edited_comment},
                {"indent", c.indent},
                {"splice_offset", c.splice_offset},
                {"iteration", c.iteration},
                {"pending_edits", pending},
                {"prompt", c.prompt()}};
}

Position position_from_json(const json& j) { return Position{j.at("line").get<int>(), j.at("col").get<int>()}; }

Span span_from_json(const json& j) { return Span{position_from_json(j.at("start")), position_from_json(j.at("end"))}; }

Segment segment_from_json(const json& j) {
    Segment s;
    s.id = j.at("id").get<std::size_t>();
    s.kind = segment_kind_from(j.at("kind").get<std::string>());
    s.depth = j.at("depth").get<int>();
    s.span = span_from_json(j.at("span"));
    s.anchor_line = j.at("anchor_line").get<int>();
    s.text = j.at("text").get<std::string>();
    return s;
}

SourceUnit unit_from_json(const json& j) {
    return SourceUnit{j.at("text").get<std::string>(), j.value("origin", std::string()),
                      parse_status_from(j.at("parse_status").get<std::string>())};
}

CommentedView view_from_json(SourceUnit unit, const json& entries) {
    std::vector<ViewEntry> out;
    for (const auto& e : entries) {
        out.push_back(ViewEntry{segment_from_json(e.at("segment")),
                                CommentRecord{e.at("comment").get<std::string>(),
                                              provenance_from(e.at("provenance").get<std::string>()),
                                              e.value("backend", std::string())}});
    }
    return CommentedView(std::move(unit), std::move(out));
}

CommentEdit edit_from_json(const json& j) {
    return CommentEdit{j.at("segment_id").get<std::size_t>(), j.at("new_text").get<std::string>(),
                       j.value("iteration", 1)};
}

}  // namespace commentloop
