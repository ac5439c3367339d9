#include "commentloop/python/tokenizer.hpp"

#include <array>
#include <cctype>
#include <cstring>

namespace commentloop::python {

SyntaxError::SyntaxError(const std::string& what, Position where)
    : Error(what + " at line " + std::to_string(where.line) + ", column " + std::to_string(where.col)),
      where_(where) {}

namespace {

constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=",
};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view p) {
    if (p.empty() || p.size() > 2) return false;
    std::string lower;
    for (char c : p) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == "r" || lower == "u" || lower == "b" || lower == "f" || lower == "br" || lower == "rb" ||
           lower == "fr" || lower == "rf";
}

class Tokenizer {
public:
    explicit Tokenizer(std::string_view src) : src_(src), index_(src) {}

    std::vector<Token> run() {
        while (true) {
            if (at_line_start_ && parens_.empty()) {
                if (!begin_line()) continue;
            }
            skip_inline_space();
            if (pos_ >= src_.size()) {
                finish();
                return std::move(tokens_);
            }
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
                continue;
            }
            if (c == '\n' || c == '\r') {
                const std::size_t start = pos_;
                consume_newline();
                if (parens_.empty()) {
                    emit(TokenType::newline, start, pos_);
                    at_line_start_ = true;
                }
                continue;
            }
            if (c == '\\') {
                const std::size_t start = pos_;
                ++pos_;
                if (pos_ >= src_.size()) throw SyntaxError("unexpected EOF after line continuation", where(start));
                if (src_[pos_] != '\n' && src_[pos_] != '\r') {
                    throw SyntaxError("unexpected character after line continuation character", where(start));
                }
                consume_newline();
                if (pos_ >= src_.size()) throw SyntaxError("unexpected EOF after line continuation", where(start));
                continue;
            }
            lex_token();
        }
    }

private:
    Position where(std::size_t offset) const { return index_.position(offset); }

    void emit(TokenType type, std::size_t begin, std::size_t end) {
        if (!in_logical_line_ && type != TokenType::newline && type != TokenType::indent &&
            type != TokenType::dedent && type != TokenType::endmarker) {
            logical_line_ = where(begin).line;
            in_logical_line_ = true;
        }
        Token t{type, src_.substr(begin, end - begin), where(begin), where(end), begin, end, logical_line_};
        tokens_.push_back(t);
        if (type == TokenType::newline) in_logical_line_ = false;
    }

    void consume_newline() {
        if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
        ++pos_;
    }

    void skip_inline_space() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\f')) ++pos_;
    }

    // Measures indentation of a fresh line. Returns false for blank/comment lines (already consumed).
    bool begin_line() {
        int width = 0;
        const std::size_t line_begin = pos_;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ' ') {
                ++width;
            } else if (c == '\t') {
                width = (width / 8 + 1) * 8;
            } else if (c == '\f') {
                width = 0;
            } else {
                break;
            }
            ++pos_;
        }
        if (pos_ >= src_.size()) return true;
        const char c = src_[pos_];
        if (c == '#' || c == '\n' || c == '\r') {
            while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
            if (pos_ < src_.size()) consume_newline();
            return false;
        }
        at_line_start_ = false;
        if (width > indents_.back()) {
            indents_.push_back(width);
            emit(TokenType::indent, line_begin, pos_);
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                emit(TokenType::dedent, pos_, pos_);
            }
            if (width != indents_.back()) {
                throw SyntaxError("unindent does not match any outer indentation level", where(pos_));
            }
        }
        return true;
    }

    void finish() {
        if (!parens_.empty()) {
            throw SyntaxError("unexpected EOF in multi-line statement", where(open_positions_.back()));
        }
        if (!tokens_.empty() && tokens_.back().type != TokenType::newline &&
            tokens_.back().type != TokenType::dedent && tokens_.back().type != TokenType::indent) {
            emit(TokenType::newline, pos_, pos_);
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            emit(TokenType::dedent, pos_, pos_);
        }
        emit(TokenType::endmarker, pos_, pos_);
    }

    void lex_token() {
        const std::size_t start = pos_;
        const auto c = static_cast<unsigned char>(src_[pos_]);
        if (is_ident_start(c)) {
            while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') &&
                is_string_prefix(src_.substr(start, pos_ - start))) {
                lex_string(start);
                return;
            }
            emit(TokenType::name, start, pos_);
            return;
        }
        if (std::isdigit(c) || (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number(start);
            return;
        }
        if (c == '\'' || c == '"') {
            lex_string(start);
            return;
        }
        for (std::string_view op : kOperators) {
            if (src_.substr(pos_, op.size()) == op) {
                pos_ += op.size();
                track_bracket(op, start);
                emit(TokenType::op, start, pos_);
                return;
            }
        }
        throw SyntaxError("invalid character '" + std::string(1, static_cast<char>(c)) + "'", where(start));
    }

    void track_bracket(std::string_view op, std::size_t start) {
        if (op == "(" || op == "[" || op == "{") {
            parens_.push_back(op[0]);
            open_positions_.push_back(start);
            return;
        }
        if (op == ")" || op == "]" || op == "}") {
            const char open = op == ")" ? '(' : op == "]" ? '[' : '{';
            if (parens_.empty()) throw SyntaxError("unmatched '" + std::string(op) + "'", where(start));
            if (parens_.back() != open) {
                throw SyntaxError("closing parenthesis '" + std::string(op) + "' does not match", where(start));
            }
            parens_.pop_back();
            open_positions_.pop_back();
        }
    }

    void lex_number(std::size_t start) {
        auto digits = [&](auto pred) {
            while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
        };
        auto is_dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() && std::strchr("xXoObB", src_[pos_ + 1]) != nullptr) {
            pos_ += 2;
            digits([](unsigned char ch) { return std::isxdigit(ch) != 0; });
        } else {
            digits(is_dec);
            if (pos_ < src_.size() && src_[pos_] == '.') {
                ++pos_;
                digits(is_dec);
            }
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t look = pos_ + 1;
                if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
                if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                    pos_ = look;
                    digits(is_dec);
                }
            }
            if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
        }
        emit(TokenType::number, start, pos_);
    }

    void lex_string(std::size_t start) {
        const char quote = src_[pos_];
        const bool triple = src_.substr(pos_, 3) == std::string(3, quote);
        pos_ += triple ? 3 : 1;
        while (true) {
            if (pos_ >= src_.size()) {
                throw SyntaxError(triple ? "unterminated triple-quoted string literal" : "unterminated string literal",
                                  where(start));
            }
            const char c = src_[pos_];
            if (c == '\\') {
                pos_ += 2;
                if (pos_ <= src_.size() && src_[pos_ - 1] == '\r' && pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
                continue;
            }
            if (!triple && (c == '\n' || c == '\r')) throw SyntaxError("unterminated string literal", where(start));
            if (c == quote) {
                if (!triple) {
                    ++pos_;
                    break;
                }
                if (src_.substr(pos_, 3) == std::string(3, quote)) {
                    pos_ += 3;
                    break;
                }
            }
            ++pos_;
        }
        emit(TokenType::string, start, pos_);
    }

    std::string_view src_;
    LineIndex index_;
    std::size_t pos_ = 0;
    bool at_line_start_ = true;
    bool in_logical_line_ = false;
    int logical_line_ = 1;
    std::vector<int> indents_{0};
    std::vector<char> parens_;
    std::vector<std::size_t> open_positions_;
    std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Tokenizer(source).run(); }

bool is_blank_line(std::string_view line) {
    return line.find_first_not_of(" \t\f\r\n") == std::string_view::npos;
}

bool is_comment_line(std::string_view line) {
    const auto first = line.find_first_not_of(" \t\f");
    return first != std::string_view::npos && line[first] == '#';
}

std::vector<int> logical_line_starts(std::string_view source) {
    std::vector<int> starts;
    for (const Token& t : tokenize(source)) {
        if (t.type == TokenType::newline || t.type == TokenType::indent || t.type == TokenType::dedent ||
            t.type == TokenType::endmarker) {
            continue;
        }
        if (starts.empty() || starts.back() != t.logical_line) starts.push_back(t.logical_line);
    }
    return starts;
}

std::vector<std::size_t> lenient_line_starts(std::string_view source) {
    std::vector<std::size_t> starts;
    int depth = 0;
    char quote = 0;
    bool triple = false;
    bool continued = false;
    std::size_t i = 0;
    bool line_begin = true;
    while (i < source.size()) {
        if (line_begin) {
            if (quote == 0 && depth == 0 && !continued) starts.push_back(i);
            line_begin = false;
            continued = false;
        }
        const char c = source[i];
        if (c == '\n') {
            if (quote != 0 && !triple) quote = 0;  // unterminated single-line string ends here
            line_begin = true;
            ++i;
            continue;
        }
        if (quote != 0) {
            if (c == '\\') {
                if (i + 1 < source.size() && source[i + 1] == '\n') {
                    ++i;
                    continue;
                }
                i += 2;
                continue;
            }
            if (c == quote && (!triple || source.substr(i, 3) == std::string(3, quote))) {
                i += triple ? 3 : 1;
                quote = 0;
                continue;
            }
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < source.size() && source[i] != '\n') ++i;
            continue;
        }
        if (c == '\\' && i + 1 < source.size() && (source[i + 1] == '\n' || source[i + 1] == '\r')) {
            continued = true;
            i += source[i + 1] == '\r' && i + 2 < source.size() && source[i + 2] == '\n' ? 2 : 1;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            triple = source.substr(i, 3) == std::string(3, c);
            i += triple ? 3 : 1;
            continue;
        }
        if (c == '(' || c == '[' || c == '{') ++depth;
        if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
        ++i;
    }
    return starts;
}

int indent_width(std::string_view line) {
    int width = 0;
    for (char c : line) {
        if (c == ' ') {
            ++width;
        } else if (c == '\t') {
            width = (width / 8 + 1) * 8;
        } else {
            break;
        }
    }
    return width;
}

}  // namespace commentloop::python
