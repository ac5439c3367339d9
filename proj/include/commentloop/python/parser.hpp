#pragma once

#include <string_view>
#include <vector>

#include "commentloop/python/tokenizer.hpp"
#include "commentloop/source.hpp"

namespace commentloop::python {

enum class StmtKind {
    // simple
    expr,
    assign,
    aug_assign,
    ann_assign,
    return_,
    pass,
    break_,
    continue_,
    raise,
    global,
    nonlocal,
    del,
    assert_,
    import,
    import_from,
    // compound
    if_,
    for_,
    while_,
    try_,
    with,
    function_def,
    class_def,
};

enum class ClauseKind { if_, elif, else_, for_, while_, try_, except, finally, with, def, class_ };

struct Stmt;

/// One keyword-introduced part of a compound statement: its header and its suite.
struct Clause {
    ClauseKind kind;
    Span header;  // keyword through the terminating ':' inclusive
    std::vector<Stmt> body;
};

struct Stmt {
    StmtKind kind;
    Span span;                 // whole statement; for compounds, through the end of the last suite
    int logical_line = 1;      // first physical line of the logical line the statement starts on
    bool is_string_expr = false;
    std::vector<Span> decorators;
    std::vector<Clause> clauses;  // empty for simple statements

    bool compound() const { return !clauses.empty(); }
};

struct Module {
    std::vector<Stmt> body;
};

/// Parses Python 3 source into a statement tree. Expressions are validated but not retained.
/// Throws SyntaxError (from tokenizer or parser) when the text is not valid Python.
Module parse(std::string_view source);

/// True when `source` parses.
bool parses(std::string_view source);

/// First statement of a module/def/class body is a docstring when it is a bare string expression.
inline bool is_docstring(const Stmt& s) { return s.kind == StmtKind::expr && s.is_string_expr; }

}  // namespace commentloop::python
