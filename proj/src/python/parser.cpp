#include "commentloop/python/parser.hpp"

#include <array>
#include <algorithm>

namespace commentloop::python {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",  "and",   "as",     "assert", "async",    "await", "break",
    "class", "continue", "def", "del",   "elif",   "else",   "except",   "finally", "for",
    "from",  "global", "if",    "import", "in",    "is",     "lambda",   "nonlocal", "not",
    "or",    "pass",   "raise", "return", "try",   "while",  "with",     "yield",
};

constexpr std::array<std::string_view, 13> kAugOps = {
    "+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<=", "**=",
};

bool is_keyword(std::string_view s) {
    return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

// A str literal (not bytes, not an f-string); only those can be docstrings.
bool plain_string(std::string_view token) {
    for (char c : token) {
        if (c == '\'' || c == '"') break;
        if (c == 'f' || c == 'F' || c == 'b' || c == 'B') return false;
    }
    return true;
}

struct ExprInfo {
    bool assignable = false;
    bool tuple = false;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Module module() {
        Module m;
        while (peek().type != TokenType::endmarker) statement(m.body);
        return m;
    }

private:
    // --- token helpers -------------------------------------------------

    const Token& peek(std::size_t k = 0) const {
        const std::size_t at = std::min(i_ + k, toks_.size() - 1);
        return toks_[at];
    }

    const Token& advance() {
        const Token& t = toks_[i_];
        if (t.type != TokenType::newline && t.type != TokenType::indent && t.type != TokenType::dedent &&
            t.type != TokenType::endmarker) {
            last_end_ = t.end;
        }
        if (i_ + 1 < toks_.size()) ++i_;
        return t;
    }

    bool at_op(std::string_view op, std::size_t k = 0) const {
        const Token& t = peek(k);
        return t.type == TokenType::op && t.text == op;
    }

    bool at_kw(std::string_view kw, std::size_t k = 0) const {
        const Token& t = peek(k);
        return t.type == TokenType::name && t.text == kw;
    }

    bool at_type(TokenType type) const { return peek().type == type; }

    [[noreturn]] void fail(const std::string& what) const {
        const Token& t = peek();
        std::string near = t.type == TokenType::newline     ? "end of line"
                           : t.type == TokenType::endmarker ? "end of input"
                           : t.type == TokenType::indent    ? "indent"
                           : t.type == TokenType::dedent    ? "dedent"
                                                            : "'" + std::string(t.text) + "'";
        throw SyntaxError(what + " near " + near, t.start);
    }

    void expect_op(std::string_view op) {
        if (!at_op(op)) fail("expected '" + std::string(op) + "'");
        advance();
    }

    void expect_kw(std::string_view kw) {
        if (!at_kw(kw)) fail("expected '" + std::string(kw) + "'");
        advance();
    }

    void expect_name() {
        const Token& t = peek();
        if (t.type != TokenType::name || is_keyword(t.text)) fail("expected identifier");
        advance();
    }

    void expect_type(TokenType type, const char* what) {
        if (peek().type != type) fail(std::string("expected ") + what);
        advance();
    }

    bool can_start_expression(std::size_t k = 0) const {
        const Token& t = peek(k);
        switch (t.type) {
            case TokenType::number:
            case TokenType::string:
                return true;
            case TokenType::name:
                if (!is_keyword(t.text)) return true;
                return t.text == "not" || t.text == "lambda" || t.text == "await" || t.text == "None" ||
                       t.text == "True" || t.text == "False";
            case TokenType::op:
                return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
                       t.text == "~" || t.text == "..." || t.text == "*";
            default:
                return false;
        }
    }

    // --- statements ----------------------------------------------------

    void statement(std::vector<Stmt>& out) {
        const Token& t = peek();
        if (t.type == TokenType::indent) fail("unexpected indent");
        if (t.type == TokenType::dedent) fail("unexpected dedent");
        if (at_op("@")) {
            decorated(out);
            return;
        }
        if (t.type == TokenType::name) {
            const std::string_view kw = t.text;
            if (kw == "if") return out.push_back(if_stmt());
            if (kw == "while") return out.push_back(while_stmt());
            if (kw == "for") return out.push_back(for_stmt());
            if (kw == "try") return out.push_back(try_stmt());
            if (kw == "with") return out.push_back(with_stmt());
            if (kw == "def") return out.push_back(def_stmt({}));
            if (kw == "class") return out.push_back(class_stmt({}));
            if (kw == "async") {
                if (at_kw("def", 1)) return out.push_back(def_stmt({}));
                if (at_kw("for", 1)) return out.push_back(for_stmt());
                if (at_kw("with", 1)) return out.push_back(with_stmt());
                fail("invalid syntax");
            }
            if (kw == "elif" || kw == "else" || kw == "except" || kw == "finally") fail("invalid syntax");
        }
        simple_line(out);
    }

    void simple_line(std::vector<Stmt>& out) {
        while (true) {
            out.push_back(small_stmt());
            if (at_op(";")) {
                advance();
                if (at_type(TokenType::newline)) break;
                continue;
            }
            break;
        }
        expect_type(TokenType::newline, "end of statement");
    }

    Stmt begin_stmt(StmtKind kind) const {
        Stmt s{kind, {peek().start, peek().start}, peek().logical_line, false, {}, {}};
        return s;
    }

    Stmt small_stmt() {
        const Token& t = peek();
        if (t.type == TokenType::name) {
            const std::string_view kw = t.text;
            if (kw == "pass" || kw == "break" || kw == "continue") {
                Stmt s = begin_stmt(kw == "pass" ? StmtKind::pass : kw == "break" ? StmtKind::break_ : StmtKind::continue_);
                advance();
                return close(s);
            }
            if (kw == "return") {
                Stmt s = begin_stmt(StmtKind::return_);
                advance();
                if (can_start_expression()) star_expressions();
                return close(s);
            }
            if (kw == "raise") {
                Stmt s = begin_stmt(StmtKind::raise);
                advance();
                if (can_start_expression()) {
                    expression();
                    if (at_kw("from")) {
                        advance();
                        expression();
                    }
                }
                return close(s);
            }
            if (kw == "global" || kw == "nonlocal") {
                Stmt s = begin_stmt(kw == "global" ? StmtKind::global : StmtKind::nonlocal);
                advance();
                expect_name();
                while (at_op(",")) {
                    advance();
                    expect_name();
                }
                return close(s);
            }
            if (kw == "del") {
                Stmt s = begin_stmt(StmtKind::del);
                advance();
                target_list(false);
                return close(s);
            }
            if (kw == "assert") {
                Stmt s = begin_stmt(StmtKind::assert_);
                advance();
                expression();
                if (at_op(",")) {
                    advance();
                    expression();
                }
                return close(s);
            }
            if (kw == "import") return import_stmt();
            if (kw == "from") return from_import();
        }
        return expr_or_assign();
    }

    Stmt close(Stmt s) const {
        s.span.end = last_end_;
        return s;
    }

    Stmt import_stmt() {
        Stmt s = begin_stmt(StmtKind::import);
        advance();
        do {
            if (at_op(",")) advance();
            dotted_name();
            if (at_kw("as")) {
                advance();
                expect_name();
            }
        } while (at_op(","));
        return close(s);
    }

    void dotted_name() {
        expect_name();
        while (at_op(".")) {
            advance();
            expect_name();
        }
    }

    Stmt from_import() {
        Stmt s = begin_stmt(StmtKind::import_from);
        advance();
        bool dots = false;
        while (at_op(".") || at_op("...")) {
            advance();
            dots = true;
        }
        if (!at_kw("import")) {
            dotted_name();
        } else if (!dots) {
            fail("expected module name");
        }
        expect_kw("import");
        if (at_op("*")) {
            advance();
            return close(s);
        }
        const bool paren = at_op("(");
        if (paren) advance();
        expect_name();
        if (at_kw("as")) {
            advance();
            expect_name();
        }
        while (at_op(",")) {
            advance();
            if (paren && at_op(")")) break;
            expect_name();
            if (at_kw("as")) {
                advance();
                expect_name();
            }
        }
        if (paren) expect_op(")");
        return close(s);
    }

    bool at_aug_op() const {
        const Token& t = peek();
        return t.type == TokenType::op && std::find(kAugOps.begin(), kAugOps.end(), t.text) != kAugOps.end();
    }

    ExprInfo assignment_rhs() {
        if (at_kw("yield")) return yield_expr();
        return star_expressions();
    }

    Stmt expr_or_assign() {
        Stmt s = begin_stmt(StmtKind::expr);
        const std::size_t first = i_;
        ExprInfo lhs = at_kw("yield") ? yield_expr() : star_expressions();
        if (at_op(":")) {
            if (!lhs.assignable || lhs.tuple) fail("only single target can be annotated");
            advance();
            expression();
            if (at_op("=")) {
                advance();
                assignment_rhs();
            }
            s.kind = StmtKind::ann_assign;
            return close(s);
        }
        if (at_aug_op()) {
            if (!lhs.assignable || lhs.tuple) fail("illegal expression for augmented assignment");
            advance();
            assignment_rhs();
            s.kind = StmtKind::aug_assign;
            return close(s);
        }
        if (at_op("=")) {
            while (at_op("=")) {
                if (!lhs.assignable) fail("cannot assign to expression");
                advance();
                lhs = assignment_rhs();
            }
            s.kind = StmtKind::assign;
            return close(s);
        }
        s.is_string_expr = true;
        for (std::size_t k = first; k < i_; ++k) {
            if (toks_[k].type != TokenType::string || !plain_string(toks_[k].text)) {
                s.is_string_expr = false;
                break;
            }
        }
        return close(s);
    }

    // Suite after a header ':'; either an indented block or simple statements on the same line.
    std::vector<Stmt> suite() {
        std::vector<Stmt> body;
        if (at_type(TokenType::newline)) {
            advance();
            if (!at_type(TokenType::indent)) fail("expected an indented block");
            advance();
            while (!at_type(TokenType::dedent) && !at_type(TokenType::endmarker)) statement(body);
            if (at_type(TokenType::dedent)) advance();
            return body;
        }
        simple_line(body);
        return body;
    }

    Span header_from(Position start) {
        expect_op(":");
        return Span{start, last_end_};
    }

    Stmt compound_begin(StmtKind kind) const { return begin_stmt(kind); }

    Stmt if_stmt() {
        Stmt s = compound_begin(StmtKind::if_);
        {
            const Position start = peek().start;
            advance();
            named_expression();
            Span h = header_from(start);
            s.clauses.push_back({ClauseKind::if_, h, suite()});
        }
        while (at_kw("elif")) {
            const Position start = peek().start;
            advance();
            named_expression();
            Span h = header_from(start);
            s.clauses.push_back({ClauseKind::elif, h, suite()});
        }
        else_clause(s);
        return close(s);
    }

    void else_clause(Stmt& s) {
        if (!at_kw("else")) return;
        const Position start = peek().start;
        advance();
        Span h = header_from(start);
        s.clauses.push_back({ClauseKind::else_, h, suite()});
    }

    Stmt while_stmt() {
        Stmt s = compound_begin(StmtKind::while_);
        const Position start = peek().start;
        advance();
        named_expression();
        Span h = header_from(start);
        s.clauses.push_back({ClauseKind::while_, h, suite()});
        else_clause(s);
        return close(s);
    }

    Stmt for_stmt() {
        Stmt s = compound_begin(StmtKind::for_);
        const Position start = peek().start;
        if (at_kw("async")) advance();
        expect_kw("for");
        target_list(true);
        expect_kw("in");
        star_expressions();
        Span h = header_from(start);
        s.clauses.push_back({ClauseKind::for_, h, suite()});
        else_clause(s);
        return close(s);
    }

    Stmt try_stmt() {
        Stmt s = compound_begin(StmtKind::try_);
        {
            const Position start = peek().start;
            advance();
            Span h = header_from(start);
            s.clauses.push_back({ClauseKind::try_, h, suite()});
        }
        bool handlers = false;
        while (at_kw("except")) {
            handlers = true;
            const Position start = peek().start;
            advance();
            if (!at_op(":")) {
                expression();
                if (at_kw("as")) {
                    advance();
                    expect_name();
                }
            }
            Span h = header_from(start);
            s.clauses.push_back({ClauseKind::except, h, suite()});
        }
        if (handlers) else_clause(s);
        bool fin = false;
        if (at_kw("finally")) {
            fin = true;
            const Position start = peek().start;
            advance();
            Span h = header_from(start);
            s.clauses.push_back({ClauseKind::finally, h, suite()});
        }
        if (!handlers && !fin) fail("expected 'except' or 'finally' block");
        return close(s);
    }

    void with_item() {
        expression();
        if (at_kw("as")) {
            advance();
            target();
        }
    }

    Stmt with_stmt() {
        Stmt s = compound_begin(StmtKind::with);
        const Position start = peek().start;
        if (at_kw("async")) advance();
        expect_kw("with");
        bool parsed = false;
        if (at_op("(")) {
            const std::size_t save = i_;
            const Position save_end = last_end_;
            try {
                advance();
                with_item();
                while (at_op(",")) {
                    advance();
                    if (at_op(")")) break;
                    with_item();
                }
                expect_op(")");
                if (!at_op(":")) fail("expected ':'");
                parsed = true;
            } catch (const SyntaxError&) {
                i_ = save;
                last_end_ = save_end;
            }
        }
        if (!parsed) {
            with_item();
            while (at_op(",")) {
                advance();
                with_item();
            }
        }
        Span h = header_from(start);
        s.clauses.push_back({ClauseKind::with, h, suite()});
        return close(s);
    }

    void decorated(std::vector<Stmt>& out) {
        std::vector<Span> decorators;
        while (at_op("@")) {
            const Position start = peek().start;
            advance();
            named_expression();
            decorators.push_back({start, last_end_});
            expect_type(TokenType::newline, "end of decorator");
        }
        if (at_kw("def") || (at_kw("async") && at_kw("def", 1))) {
            out.push_back(def_stmt(std::move(decorators)));
        } else if (at_kw("class")) {
            out.push_back(class_stmt(std::move(decorators)));
        } else {
            fail("expected function or class definition after decorator");
        }
    }

    Stmt def_stmt(std::vector<Span> decorators) {
        Stmt s = compound_begin(StmtKind::function_def);
        s.decorators = std::move(decorators);
        const Position start = peek().start;
        if (at_kw("async")) advance();
        expect_kw("def");
        expect_name();
        expect_op("(");
        parameters(")", true);
        expect_op(")");
        if (at_op("->")) {
            advance();
            expression();
        }
        Span h = header_from(start);
        s.clauses.push_back({ClauseKind::def, h, suite()});
        return close(s);
    }

    Stmt class_stmt(std::vector<Span> decorators) {
        Stmt s = compound_begin(StmtKind::class_def);
        s.decorators = std::move(decorators);
        const Position start = peek().start;
        advance();
        expect_name();
        if (at_op("(")) call_arguments();
        Span h = header_from(start);
        s.clauses.push_back({ClauseKind::class_, h, suite()});
        return close(s);
    }

    void parameters(std::string_view close_op, bool annotations) {
        while (!at_op(close_op)) {
            if (at_op("/")) {
                advance();
            } else if (at_op("*")) {
                advance();
                if (peek().type == TokenType::name && !is_keyword(peek().text)) {
                    advance();
                    if (annotations && at_op(":")) {
                        advance();
                        expression();
                    }
                }
            } else if (at_op("**")) {
                advance();
                expect_name();
                if (annotations && at_op(":")) {
                    advance();
                    expression();
                }
            } else {
                expect_name();
                if (annotations && at_op(":")) {
                    advance();
                    expression();
                }
                if (at_op("=")) {
                    advance();
                    expression();
                }
            }
            if (!at_op(",")) break;
            advance();
        }
    }

    // --- targets -------------------------------------------------------

    void target() {
        if (at_op("*")) {
            advance();
            target();
            return;
        }
        ExprInfo e = primary();
        if (!e.assignable) fail("cannot assign to expression");
    }

    void target_list(bool allow_star) {
        if (!allow_star && at_op("*")) fail("cannot delete starred");
        target();
        while (at_op(",")) {
            advance();
            if (!can_start_expression() || at_kw("in")) break;
            target();
        }
    }

    // --- expressions ---------------------------------------------------

    ExprInfo star_expressions() {
        ExprInfo first = star_expression();
        if (!at_op(",")) return first;
        ExprInfo tuple{first.assignable, true};
        while (at_op(",")) {
            advance();
            if (!can_start_expression()) break;
            ExprInfo e = star_expression();
            tuple.assignable = tuple.assignable && e.assignable;
        }
        return tuple;
    }

    ExprInfo star_expression() {
        if (at_op("*")) {
            advance();
            return bitwise_or();
        }
        return expression();
    }

    ExprInfo star_named_expression() {
        if (at_op("*")) {
            advance();
            return bitwise_or();
        }
        return named_expression();
    }

    ExprInfo named_expression() {
        if (peek().type == TokenType::name && !is_keyword(peek().text) && at_op(":=", 1)) {
            advance();
            advance();
            expression();
            return {};
        }
        return expression();
    }

    ExprInfo expression() {
        if (at_kw("lambda")) {
            lambdef();
            return {};
        }
        ExprInfo e = disjunction();
        if (at_kw("if")) {
            advance();
            disjunction();
            expect_kw("else");
            expression();
            return {};
        }
        return e;
    }

    void lambdef() {
        expect_kw("lambda");
        parameters(":", false);
        expect_op(":");
        expression();
    }

    ExprInfo yield_expr() {
        expect_kw("yield");
        if (at_kw("from")) {
            advance();
            expression();
        } else if (can_start_expression()) {
            star_expressions();
        }
        return {};
    }

    ExprInfo disjunction() {
        ExprInfo e = conjunction();
        while (at_kw("or")) {
            advance();
            conjunction();
            e = {};
        }
        return e;
    }

    ExprInfo conjunction() {
        ExprInfo e = inversion();
        while (at_kw("and")) {
            advance();
            inversion();
            e = {};
        }
        return e;
    }

    ExprInfo inversion() {
        if (at_kw("not")) {
            advance();
            inversion();
            return {};
        }
        return comparison();
    }

    bool comparison_operator() {
        const Token& t = peek();
        if (t.type == TokenType::op &&
            (t.text == "<" || t.text == ">" || t.text == "==" || t.text == ">=" || t.text == "<=" || t.text == "!=")) {
            advance();
            return true;
        }
        if (at_kw("in")) {
            advance();
            return true;
        }
        if (at_kw("not") && at_kw("in", 1)) {
            advance();
            advance();
            return true;
        }
        if (at_kw("is")) {
            advance();
            if (at_kw("not")) advance();
            return true;
        }
        return false;
    }

    ExprInfo comparison() {
        ExprInfo e = bitwise_or();
        while (comparison_operator()) {
            bitwise_or();
            e = {};
        }
        return e;
    }

    template <typename Next>
    ExprInfo binary(std::initializer_list<std::string_view> ops, Next next) {
        ExprInfo e = (this->*next)();
        while (true) {
            const Token& t = peek();
            if (t.type != TokenType::op || std::find(ops.begin(), ops.end(), t.text) == ops.end()) break;
            advance();
            (this->*next)();
            e = {};
        }
        return e;
    }

    ExprInfo bitwise_or() { return binary({"|"}, &Parser::bitwise_xor); }
    ExprInfo bitwise_xor() { return binary({"^"}, &Parser::bitwise_and); }
    ExprInfo bitwise_and() { return binary({"&"}, &Parser::shift_expr); }
    ExprInfo shift_expr() { return binary({"<<", ">>"}, &Parser::sum); }
    ExprInfo sum() { return binary({"+", "-"}, &Parser::term); }
    ExprInfo term() { return binary({"*", "/", "//", "%", "@"}, &Parser::factor); }

    ExprInfo factor() {
        if (at_op("+") || at_op("-") || at_op("~")) {
            advance();
            factor();
            return {};
        }
        return power();
    }

    ExprInfo power() {
        bool awaited = false;
        if (at_kw("await")) {
            advance();
            awaited = true;
        }
        ExprInfo e = primary();
        if (at_op("**")) {
            advance();
            factor();
            return {};
        }
        return awaited ? ExprInfo{} : e;
    }

    ExprInfo primary() {
        ExprInfo e = atom();
        while (true) {
            if (at_op(".")) {
                advance();
                expect_name();
                e = {true, false};
            } else if (at_op("(")) {
                call_arguments();
                e = {};
            } else if (at_op("[")) {
                advance();
                slices();
                expect_op("]");
                e = {true, false};
            } else {
                break;
            }
        }
        return e;
    }

    void call_arguments() {
        expect_op("(");
        bool first = true;
        while (!at_op(")")) {
            if (at_op("*") || at_op("**")) {
                advance();
                expression();
            } else if (peek().type == TokenType::name && !is_keyword(peek().text) && at_op("=", 1)) {
                advance();
                advance();
                expression();
            } else {
                named_expression();
                if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
                    if (!first) fail("generator expression must be parenthesized");
                    comprehension();
                }
            }
            first = false;
            if (!at_op(",")) break;
            advance();
        }
        expect_op(")");
    }

    void slices() {
        slice();
        while (at_op(",")) {
            advance();
            if (at_op("]")) break;
            slice();
        }
    }

    void slice() {
        if (!at_op(":")) {
            named_expression();
            if (!at_op(":")) return;
        }
        advance();  // ':'
        if (!at_op(":") && !at_op("]") && !at_op(",")) expression();
        if (at_op(":")) {
            advance();
            if (!at_op("]") && !at_op(",")) expression();
        }
    }

    void comprehension() {
        while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
            if (at_kw("async")) advance();
            advance();
            target_list(true);
            expect_kw("in");
            disjunction();
            while (at_kw("if")) {
                advance();
                disjunction();
            }
        }
    }

    bool at_comprehension() const { return at_kw("for") || (at_kw("async") && at_kw("for", 1)); }

    // Elements of a tuple/list display after the first one; returns whether all were assignable.
    bool display_tail(std::string_view close_op, bool assignable) {
        while (at_op(",")) {
            advance();
            if (at_op(close_op)) break;
            assignable = star_named_expression().assignable && assignable;
        }
        return assignable;
    }

    ExprInfo atom() {
        const Token& t = peek();
        switch (t.type) {
            case TokenType::name: {
                if (t.text == "None" || t.text == "True" || t.text == "False") {
                    advance();
                    return {};
                }
                if (is_keyword(t.text)) fail("invalid syntax");
                advance();
                return {true, false};
            }
            case TokenType::number:
                advance();
                return {};
            case TokenType::string:
                while (at_type(TokenType::string)) advance();
                return {};
            case TokenType::op:
                break;
            default:
                fail("invalid syntax");
        }
        if (at_op("...")) {
            advance();
            return {};
        }
        if (at_op("(")) {
            advance();
            if (at_op(")")) {
                advance();
                return {true, true};
            }
            if (at_kw("yield")) {
                yield_expr();
                expect_op(")");
                return {};
            }
            ExprInfo first = star_named_expression();
            if (at_comprehension()) {
                comprehension();
                expect_op(")");
                return {};
            }
            if (at_op(",")) {
                const bool ok = display_tail(")", first.assignable);
                expect_op(")");
                return {ok, true};
            }
            expect_op(")");
            return first;
        }
        if (at_op("[")) {
            advance();
            if (at_op("]")) {
                advance();
                return {true, false};
            }
            ExprInfo first = star_named_expression();
            if (at_comprehension()) {
                comprehension();
                expect_op("]");
                return {};
            }
            const bool ok = display_tail("]", first.assignable);
            expect_op("]");
            return {ok, false};
        }
        if (at_op("{")) {
            advance();
            dict_or_set();
            return {};
        }
        fail("invalid syntax");
    }

    void dict_item() {
        if (at_op("**")) {
            advance();
            bitwise_or();
            return;
        }
        expression();
        expect_op(":");
        expression();
    }

    void dict_or_set() {
        if (at_op("}")) {
            advance();
            return;
        }
        bool is_dict;
        if (at_op("**")) {
            is_dict = true;
            dict_item();
        } else {
            if (at_op("*")) {
                advance();
                bitwise_or();
                is_dict = false;
            } else {
                named_expression();
                is_dict = at_op(":");
                if (is_dict) {
                    advance();
                    expression();
                }
            }
        }
        if (at_comprehension()) {
            comprehension();
            expect_op("}");
            return;
        }
        while (at_op(",")) {
            advance();
            if (at_op("}")) break;
            if (is_dict) {
                dict_item();
            } else {
                star_named_expression();
            }
        }
        expect_op("}");
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    Position last_end_{};
};

}  // namespace

Module parse(std::string_view source) { return Parser(tokenize(source)).module(); }

bool parses(std::string_view source) {
    try {
        parse(source);
        return true;
    } catch (const SyntaxError&) {
        return false;
    }
}

}  // namespace commentloop::python
