#pragma once

#include <memory>
#include <string>
#include <vector>

namespace flor::script {

enum class ExprKind { Int, Float, Str, Bool, None, Name, Unary, Binary, Call, Index, ListLit };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    ExprKind kind;
    int line = 0, col = 0;

    long long int_val = 0;
    double float_val = 0;
    bool bool_val = false;
    std::string text;  // Str literal / Name / Call callee
    std::string op;    // Unary/Binary operator
    ExprPtr lhs, rhs;  // Binary; Unary and Index use lhs (and rhs for Index)
    std::vector<ExprPtr> args;  // Call args / ListLit items
};

enum class StmtKind { Assign, ExprStmt, For, With, If, Pass };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Block {
    std::vector<StmtPtr> stmts;
    int indent = 0;  // column of the statements in this block
};

struct IfArm {
    ExprPtr cond;
    Block body;
};

struct Stmt {
    StmtKind kind;
    int line = 0, col = 0;
    int last_line = 0;  // inclusive; covers nested bodies

    std::string target;  // Assign / For
    ExprPtr value;       // Assign rhs / ExprStmt expr / For iterable / With expr
    Block body;          // For / With
    std::vector<IfArm> arms;  // If (first arm = if, rest = elif)
    Block else_body;
    bool has_else = false;
};

struct Module {
    Block body;
};

}  // namespace flor::script
