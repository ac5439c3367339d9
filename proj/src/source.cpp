#include "commentloop/source.hpp"

#include <algorithm>

#include "commentloop/python/parser.hpp"

namespace commentloop {

std::string_view to_string(ParseStatus s) { return s == ParseStatus::parsed ? "parsed" : "fallback"; }

ParseStatus parse_status_from(std::string_view s) {
    if (s == "parsed") return ParseStatus::parsed;
    if (s == "fallback") return ParseStatus::fallback;
    throw Error("unknown parse status '" + std::string(s) + "'");
}

SourceUnit SourceUnit::from_text(std::string text, std::string origin) {
    const bool ok = python::parses(text);
    return SourceUnit{std::move(text), std::move(origin), ok ? ParseStatus::parsed : ParseStatus::fallback};
}

LineIndex::LineIndex(std::string_view text) : text_(text) {
    starts_.push_back(0);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') starts_.push_back(i + 1);
    }
}

std::size_t LineIndex::offset(Position p) const {
    if (p.line < 1 || p.line > line_count()) throw Error("position line out of range");
    return std::min(line_start(p.line) + static_cast<std::size_t>(p.col), text_.size());
}

Position LineIndex::position(std::size_t offset) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
    const auto line = static_cast<int>(it - starts_.begin());
    return Position{line, static_cast<int>(offset - starts_[static_cast<std::size_t>(line - 1)])};
}

std::string_view LineIndex::line(int line) const {
    const std::size_t begin = line_start(line);
    std::size_t end = line < line_count() ? line_start(line + 1) : text_.size();
    if (end > begin && text_[end - 1] == '\n') --end;
    if (end > begin && text_[end - 1] == '\r') --end;
    return text_.substr(begin, end - begin);
}

std::string_view slice(std::string_view text, const Span& span) {
    const LineIndex index(text);
    const std::size_t b = index.offset(span.start);
    const std::size_t e = index.offset(span.end);
    return text.substr(b, e - b);
}

}  // namespace commentloop
