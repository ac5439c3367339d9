#pragma once

#include "json.hpp"

#include "commentloop/comments.hpp"
#include "commentloop/refinement.hpp"
#include "commentloop/segmenter.hpp"
#include "commentloop/source.hpp"

// JSON encodings shared by the CLI, the session store and the HTTP API.
namespace commentloop {

nlohmann::json to_json(const Position& p);
nlohmann::json to_json(const Span& s);
nlohmann::json to_json(const Segment& s);
nlohmann::json to_json(const SourceUnit& u);
nlohmann::json to_json(const ViewEntry& e);
/// Entries only; the unit is stored alongside.
nlohmann::json entries_to_json(const CommentedView& v);
nlohmann::json to_json(const CommentEdit& e);
nlohmann::json to_json(const RefinementContext& c);

Position position_from_json(const nlohmann::json& j);
Span span_from_json(const nlohmann::json& j);
Segment segment_from_json(const nlohmann::json& j);
SourceUnit unit_from_json(const nlohmann::json& j);
CommentedView view_from_json(SourceUnit unit, const nlohmann::json& entries);
CommentEdit edit_from_json(const nlohmann::json& j);

}  // namespace commentloop
