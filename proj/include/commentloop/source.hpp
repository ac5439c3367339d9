#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace commentloop {

/// Base of every domain error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Source location. Lines are 1-based, columns are 0-based byte offsets.
struct Position {
    int line = 1;
    int col = 0;

    friend auto operator<=>(const Position&, const Position&) = default;
};

/// Half-open range [start, end).
struct Span {
    Position start;
    Position end;

    friend bool operator==(const Span&, const Span&) = default;
};

enum class ParseStatus { parsed, fallback };

std::string_view to_string(ParseStatus s);
ParseStatus parse_status_from(std::string_view s);

struct SourceUnit {
    std::string text;
    std::string origin;
    ParseStatus parse_status = ParseStatus::parsed;

    /// Builds a unit and classifies it by attempting a parse.
    static SourceUnit from_text(std::string text, std::string origin = {});

    friend bool operator==(const SourceUnit&, const SourceUnit&) = default;
};

/// Maps between (line, col) positions and byte offsets of one text.
class LineIndex {
public:
    explicit LineIndex(std::string_view text);

    std::size_t offset(Position p) const;
    Position position(std::size_t offset) const;

    int line_count() const { return static_cast<int>(starts_.size()); }
    std::size_t line_start(int line) const { return starts_.at(static_cast<std::size_t>(line - 1)); }
    /// Line content without its terminator.
    std::string_view line(int line) const;

private:
    std::string_view text_;
    std::vector<std::size_t> starts_;
};

std::string_view slice(std::string_view text, const Span& span);

}  // namespace commentloop
