#include "flor/script/parser.hpp"

#include "flor/error.hpp"
#include "flor/script/lexer.hpp"

namespace flor::script {

namespace {

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Module parse_module() {
        Module mod;
        mod.body.indent = 1;
        while (!at(TokKind::End)) mod.body.stmts.push_back(statement());
        return mod;
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;

    const Token& cur() const { return toks_[pos_]; }
    bool at(TokKind k) const { return cur().kind == k; }
    bool at_op(const std::string& text) const { return at(TokKind::Op) && cur().text == text; }
    bool at_kw(const std::string& text) const {
        return at(TokKind::Keyword) && cur().text == text;
    }
    Token take() { return toks_[pos_++]; }

    [[noreturn]] void error(const std::string& msg) const {
        fail("line " + std::to_string(cur().line) + ": " + msg);
    }

    void expect_op(const std::string& text) {
        if (!at_op(text)) error("expected '" + text + "'");
        take();
    }
    void expect_newline() {
        if (!at(TokKind::Newline)) error("expected end of line");
        take();
    }

    StmtPtr statement() {
        if (at_kw("for")) return for_stmt();
        if (at_kw("with")) return with_stmt();
        if (at_kw("if")) return if_stmt();
        if (at_kw("pass")) {
            auto s = std::make_unique<Stmt>();
            s->kind = StmtKind::Pass;
            s->line = s->last_line = cur().line;
            s->col = cur().col;
            take();
            expect_newline();
            return s;
        }
        // assignment or expression statement
        if (at(TokKind::Name) && pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == TokKind::Op &&
            toks_[pos_ + 1].text == "=") {
            auto s = std::make_unique<Stmt>();
            s->kind = StmtKind::Assign;
            s->line = s->last_line = cur().line;
            s->col = cur().col;
            s->target = take().text;
            take();  // '='
            s->value = expression();
            expect_newline();
            return s;
        }
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::ExprStmt;
        s->line = s->last_line = cur().line;
        s->col = cur().col;
        s->value = expression();
        expect_newline();
        return s;
    }

    Block block() {
        if (!at(TokKind::Newline)) error("expected a newline before an indented block");
        take();
        if (!at(TokKind::Indent)) error("expected an indented block");
        Block b;
        b.indent = take().col;
        while (!at(TokKind::Dedent) && !at(TokKind::End)) b.stmts.push_back(statement());
        if (at(TokKind::Dedent)) take();
        if (b.stmts.empty()) error("empty block");
        return b;
    }

    static int block_last_line(const Block& b) {
        return b.stmts.empty() ? 0 : b.stmts.back()->last_line;
    }

    StmtPtr for_stmt() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::For;
        s->line = cur().line;
        s->col = cur().col;
        take();  // for
        if (!at(TokKind::Name)) error("expected a loop variable after 'for'");
        s->target = take().text;
        if (!at_kw("in")) error("expected 'in'");
        take();
        s->value = expression();
        expect_op(":");
        s->body = block();
        s->last_line = block_last_line(s->body);
        return s;
    }

    StmtPtr with_stmt() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::With;
        s->line = cur().line;
        s->col = cur().col;
        take();  // with
        s->value = expression();
        expect_op(":");
        s->body = block();
        s->last_line = block_last_line(s->body);
        return s;
    }

    StmtPtr if_stmt() {
        auto s = std::make_unique<Stmt>();
        s->kind = StmtKind::If;
        s->line = cur().line;
        s->col = cur().col;
        take();  // if
        IfArm arm;
        arm.cond = expression();
        expect_op(":");
        arm.body = block();
        s->last_line = block_last_line(arm.body);
        s->arms.push_back(std::move(arm));
        while (at_kw("elif")) {
            take();
            IfArm next;
            next.cond = expression();
            expect_op(":");
            next.body = block();
            s->last_line = block_last_line(next.body);
            s->arms.push_back(std::move(next));
        }
        if (at_kw("else")) {
            take();
            expect_op(":");
            s->else_body = block();
            s->has_else = true;
            s->last_line = block_last_line(s->else_body);
        }
        return s;
    }

    ExprPtr make_expr(ExprKind kind) {
        auto e = std::make_unique<Expr>();
        e->kind = kind;
        e->line = cur().line;
        e->col = cur().col;
        return e;
    }

    ExprPtr expression() { return or_expr(); }

    ExprPtr or_expr() {
        auto left = and_expr();
        while (at_kw("or")) {
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Binary;
            e->line = cur().line;
            e->col = cur().col;
            e->op = take().text;
            e->lhs = std::move(left);
            e->rhs = and_expr();
            left = std::move(e);
        }
        return left;
    }

    ExprPtr and_expr() {
        auto left = not_expr();
        while (at_kw("and")) {
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Binary;
            e->line = cur().line;
            e->col = cur().col;
            e->op = take().text;
            e->lhs = std::move(left);
            e->rhs = not_expr();
            left = std::move(e);
        }
        return left;
    }

    ExprPtr not_expr() {
        if (at_kw("not")) {
            auto e = make_expr(ExprKind::Unary);
            e->op = take().text;
            e->lhs = not_expr();
            return e;
        }
        return comparison();
    }

    ExprPtr comparison() {
        auto left = arith();
        static const char* cmps[] = {"==", "!=", "<", "<=", ">", ">="};
        if (at(TokKind::Op)) {
            for (const char* c : cmps) {
                if (cur().text == c) {
                    auto e = std::make_unique<Expr>();
                    e->kind = ExprKind::Binary;
                    e->line = cur().line;
                    e->col = cur().col;
                    e->op = take().text;
                    e->lhs = std::move(left);
                    e->rhs = arith();
                    return e;
                }
            }
        }
        return left;
    }

    ExprPtr arith() {
        auto left = term();
        while (at_op("+") || at_op("-")) {
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Binary;
            e->line = cur().line;
            e->col = cur().col;
            e->op = take().text;
            e->lhs = std::move(left);
            e->rhs = term();
            left = std::move(e);
        }
        return left;
    }

    ExprPtr term() {
        auto left = factor();
        while (at_op("*") || at_op("/") || at_op("%") || at_op("//")) {
            auto e = std::make_unique<Expr>();
            e->kind = ExprKind::Binary;
            e->line = cur().line;
            e->col = cur().col;
            e->op = take().text;
            e->lhs = std::move(left);
            e->rhs = factor();
            left = std::move(e);
        }
        return left;
    }

    ExprPtr factor() {
        if (at_op("-") || at_op("+")) {
            auto e = make_expr(ExprKind::Unary);
            e->op = take().text;
            e->lhs = factor();
            return e;
        }
        return postfix();
    }

    ExprPtr postfix() {
        auto base = atom();
        for (;;) {
            if (at_op("(")) {
                if (base->kind != ExprKind::Name)
                    error("only named functions can be called");
                auto e = std::make_unique<Expr>();
                e->kind = ExprKind::Call;
                e->line = base->line;
                e->col = base->col;
                e->text = base->text;
                take();  // '('
                if (!at_op(")")) {
                    e->args.push_back(expression());
                    while (at_op(",")) {
                        take();
                        e->args.push_back(expression());
                    }
                }
                expect_op(")");
                base = std::move(e);
                continue;
            }
            if (at_op("[")) {
                auto e = std::make_unique<Expr>();
                e->kind = ExprKind::Index;
                e->line = base->line;
                e->col = base->col;
                take();
                e->lhs = std::move(base);
                e->rhs = expression();
                expect_op("]");
                base = std::move(e);
                continue;
            }
            return base;
        }
    }

    ExprPtr atom() {
        switch (cur().kind) {
            case TokKind::Int: {
                auto e = make_expr(ExprKind::Int);
                e->int_val = take().int_val;
                return e;
            }
            case TokKind::Float: {
                auto e = make_expr(ExprKind::Float);
                e->float_val = take().float_val;
                return e;
            }
            case TokKind::Str: {
                auto e = make_expr(ExprKind::Str);
                e->text = take().text;
                return e;
            }
            case TokKind::Name: {
                auto e = make_expr(ExprKind::Name);
                e->text = take().text;
                return e;
            }
            case TokKind::Keyword: {
                if (cur().text == "true" || cur().text == "false") {
                    auto e = make_expr(ExprKind::Bool);
                    e->bool_val = take().text == "true";
                    return e;
                }
                if (cur().text == "none") {
                    auto e = make_expr(ExprKind::None);
                    take();
                    return e;
                }
                error("unexpected keyword '" + cur().text + "'");
            }
            case TokKind::Op: {
                if (cur().text == "(") {
                    take();
                    auto e = expression();
                    expect_op(")");
                    return e;
                }
                if (cur().text == "[") {
                    auto e = make_expr(ExprKind::ListLit);
                    take();
                    if (!at_op("]")) {
                        e->args.push_back(expression());
                        while (at_op(",")) {
                            take();
                            e->args.push_back(expression());
                        }
                    }
                    expect_op("]");
                    return e;
                }
                error("unexpected '" + cur().text + "'");
            }
            default: error("unexpected end of input");
        }
    }
};

}  // namespace

Module parse(const std::string& source) { return Parser(lex(source)).parse_module(); }

}  // namespace flor::script
