#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "commentloop/source.hpp"

namespace commentloop::python {

enum class TokenType {
    name,
    number,
    string,
    op,
    newline,
    indent,
    dedent,
    endmarker,
};

struct Token {
    TokenType type;
    std::string_view text;
    Position start;
    Position end;
    std::size_t begin = 0;  // byte offsets into the source
    std::size_t finish = 0;
    int logical_line = 1;   // first physical line of the enclosing logical line
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, Position where);
    Position where() const { return where_; }

private:
    Position where_;
};

/// Tokenizes Python 3 source. Comments and non-logical newlines are dropped.
/// The returned tokens view into `source`, which must outlive them.
std::vector<Token> tokenize(std::string_view source);

/// Physical lines that hold nothing but a comment (first non-blank char is '#').
bool is_comment_line(std::string_view line);
bool is_blank_line(std::string_view line);

/// Start lines of each logical line, in order. Throws SyntaxError on bad input.
std::vector<int> logical_line_starts(std::string_view source);

/// Byte offsets of physical lines that begin a logical line, found by a forgiving scan that
/// tracks strings, brackets and backslash continuations but never throws. Usable on broken code.
std::vector<std::size_t> lenient_line_starts(std::string_view source);

/// Indentation width of a line's leading whitespace, tabs advancing to the next multiple of 8.
int indent_width(std::string_view line);

}  // namespace commentloop::python
