#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commentloop/comments.hpp"

namespace commentloop {

class UnknownSegment : public Error {
public:
    using Error::Error;
};

class NoEdit : public Error {
public:
    NoEdit() : Error("no comment was changed") {}
};

class InvalidEdit : public Error {
public:
    using Error::Error;
};

class RoundsExhausted : public Error {
public:
    using Error::Error;
};

class SpliceFailure : public Error {
public:
    using Error::Error;
};

struct SubmittedComment {
    std::size_t segment_id = 0;
    std::string text;
};

struct CommentEdit {
    std::size_t segment_id = 0;
    std::string new_text;
    int iteration = 1;

    friend bool operator==(const CommentEdit&, const CommentEdit&) = default;
};

/// What the refinement backend sees: problem, commented code strictly before the edited
/// segment, and the edited comment as the final line.
struct RefinementContext {
    std::string problem;
    std::string prefix;
    std::string edited_comment;
    std::vector<CommentEdit> pending_edits;

    std::size_t segment_id = 0;
    std::string indent;             // indentation of the edited segment's anchor line
    std::size_t splice_offset = 0;  // byte offset of the edited segment's start
    int iteration = 1;

    /// problem, blank line, prefix, then "<indent># <edited_comment>\n".
    std::string prompt() const;
};

struct RefinementResult {
    SourceUnit new_unit;
    Span replaced_span;     // old coordinates: edited segment start .. end of the replaced region
    Span regenerated_span;  // new coordinates of the spliced-in completion
    int iteration = 1;
};

class RefinementBackend {
public:
    virtual ~RefinementBackend() = default;
    /// Raw completion, untrimmed.
    virtual std::string complete(const RefinementContext& context) = 0;
    virtual std::string id() const = 0;
};

struct RefinementOptions {
    int max_rounds = 3;
    bool allow_fallback = true;
    CommentOptions comments;
};

/// Edits for every submitted comment whose trimmed text differs, ascending by segment id.
std::vector<CommentEdit> diff_views(const CommentedView& old, std::span<const SubmittedComment> submitted,
                                    int iteration = 1);

struct RefinementPoint {
    CommentEdit edit;
    std::vector<CommentEdit> pending;
};

/// The earliest edit wins; the rest are deferred.
RefinementPoint locate_refinement_point(std::span<const CommentEdit> edits);

RefinementContext build_context(const CommentedView& view, const CommentEdit& edit, std::string_view problem,
                                std::vector<CommentEdit> pending = {});

/// Trims a raw completion to the region it may replace. `lead` is the old text between the start of
/// the edited segment's line and the segment itself; it is not repeated. Output stops where
/// indentation returns to the enclosing def's level.
std::string trim_completion(std::string_view completion, std::string_view lead, std::optional<int> def_indent);

/// Visual width of the enclosing function's header line, if the offset lies inside a function body.
std::optional<int> enclosing_def_indent(const SourceUnit& unit, std::size_t offset);

std::pair<RefinementResult, CommentedView> apply_refinement(const CommentedView& view, const RefinementContext& context,
                                                            RefinementBackend& refiner, CommentBackend& commenter,
                                                            const RefinementOptions& options = {});

/// One full round: diff, locate, build the context, apply.
struct RoundOutcome {
    std::vector<CommentEdit> edits;
    CommentEdit applied;
    std::vector<CommentEdit> pending;
    RefinementContext context;
    RefinementResult result;
    CommentedView view;
};

RoundOutcome refine_round(const CommentedView& view, std::span<const SubmittedComment> submitted,
                          std::string_view problem, int iteration, RefinementBackend& refiner,
                          CommentBackend& commenter, const RefinementOptions& options = {});

}  // namespace commentloop
