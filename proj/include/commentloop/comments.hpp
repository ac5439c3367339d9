#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commentloop/segmenter.hpp"
#include "commentloop/source.hpp"

namespace commentloop {

enum class Provenance { generated, user_edited };

std::string_view to_string(Provenance p);
Provenance provenance_from(std::string_view s);

struct CommentRecord {
    std::string text;
    Provenance provenance = Provenance::generated;
    std::string backend_id;

    friend bool operator==(const CommentRecord&, const CommentRecord&) = default;
};

struct ViewEntry {
    Segment segment;
    CommentRecord comment;

    friend bool operator==(const ViewEntry&, const ViewEntry&) = default;
};

/// Code paired with one inline comment per segment. Immutable once built.
class CommentedView {
public:
    CommentedView() = default;
    /// Validates cardinality against segment(unit) and the single-line rule.
    CommentedView(SourceUnit unit, std::vector<ViewEntry> entries);

    const SourceUnit& unit() const { return unit_; }
    const std::vector<ViewEntry>& entries() const { return entries_; }
    const std::string& rendered() const { return rendered_; }

    friend bool operator==(const CommentedView& a, const CommentedView& b) {
        return a.unit_ == b.unit_ && a.entries_ == b.entries_;
    }

private:
    SourceUnit unit_;
    std::vector<ViewEntry> entries_;
    std::string rendered_;
};

struct CommentRequest {
    std::size_t segment_id = 0;
    std::string statement;
    std::string context;
};

/// Produces one comment for one statement. Implementations must tolerate concurrent calls.
class CommentBackend {
public:
    virtual ~CommentBackend() = default;
    virtual std::string comment(const CommentRequest& request) = 0;
    virtual std::string id() const = 0;
};

/// Raised when a backend call fails; carries the segment whose request failed, if any.
class BackendFailure : public Error {
public:
    explicit BackendFailure(const std::string& what, std::optional<std::size_t> segment_id = std::nullopt);
    std::optional<std::size_t> segment_id() const { return segment_id_; }

private:
    std::optional<std::size_t> segment_id_;
};

struct CommentOptions {
    std::size_t context_statements = 5;
    std::size_t max_input_units = 256;
    std::size_t max_output_units = 128;
    std::size_t workers = 4;
};

/// Whitespace-delimited units, the budget measure for backend input and output.
std::size_t count_units(std::string_view text);

/// Request for segment `index`: the statement plus the problem and up to N preceding statements,
/// trimmed from the oldest end to fit the input budget.
CommentRequest build_comment_request(std::span<const Segment> segments, std::size_t index, std::string_view problem,
                                     const CommentOptions& options = {});

/// Collapses to one line; past the output budget, cuts at the first sentence end (or at the budget).
std::string normalize_comment(std::string_view raw, std::size_t max_units = 128);

/// Comments for segments[which[k]]; requests fan out over options.workers threads, results keep order.
std::vector<std::string> request_comments(std::span<const Segment> segments, std::span<const std::size_t> which,
                                          std::string_view problem, CommentBackend& backend,
                                          const CommentOptions& options = {});

CommentedView generate_comments(const SourceUnit& unit, std::span<const Segment> segments, std::string_view problem,
                                 CommentBackend& backend, const CommentOptions& options = {});

/// Convenience: segments the unit first.
CommentedView generate_comments(const SourceUnit& unit, std::string_view problem, CommentBackend& backend,
                                const CommentOptions& options = {});

/// Comments go on their own line above the segment's anchor line, at that line's indentation, as "# text".
std::string render(const SourceUnit& unit, std::span<const ViewEntry> entries);
inline std::string render(const CommentedView& view) { return view.rendered(); }

/// Removes exactly the lines render() inserted.
SourceUnit strip_comments(std::string_view text, std::string origin = {});

/// Leading spaces/tabs of a line.
std::string_view indentation_of(std::string_view line);

}  // namespace commentloop
