#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "commentloop/source.hpp"

namespace commentloop {

enum class SegmentKind {
    simple,
    loop_header,
    branch_condition,
    else_body_member,
    with_header,
    body_member,
    fallback_line,
};

std::string_view to_string(SegmentKind k);
SegmentKind segment_kind_from(std::string_view s);

/// A statement or compound-statement header, the unit that receives one comment.
struct Segment {
    std::size_t id = 0;
    Span span;
    SegmentKind kind = SegmentKind::simple;
    int depth = 0;
    std::string text;
    /// First physical line of the logical line the segment starts on. Comments are placed above it.
    int anchor_line = 1;

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// The text does not parse; callers fall back to segment_lines.
class ParseFailure : public Error {
public:
    using Error::Error;
};

/// Walks the parse tree: headers before bodies, else-clauses after, try/with handled per rule,
/// imports, def/class headers, decorators and docstrings skipped.
std::vector<Segment> segment_source(const SourceUnit& unit);

/// One segment per non-blank, non-comment-only physical line.
std::vector<Segment> segment_lines(const SourceUnit& unit);

/// segment_source when the text parses, otherwise segment_lines.
std::vector<Segment> segment(const SourceUnit& unit);

}  // namespace commentloop
