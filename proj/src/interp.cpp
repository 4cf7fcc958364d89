#include "flor/interp.hpp"

#include "flor/error.hpp"
#include "flor/script/parser.hpp"
#include "flor/util.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <thread>

namespace flor {

using script::Block;
using script::Expr;
using script::ExprKind;
using script::Module;
using script::Stmt;
using script::StmtKind;

void Interp::run_module(const Module& mod) { exec_block(mod.body); }

void Interp::exec_block(const Block& block) {
    for (const auto& stmt : block.stmts) exec_stmt(*stmt);
}

void Interp::exec_stmt(const Stmt& stmt) {
    try {
        switch (stmt.kind) {
            case StmtKind::Pass: return;
            case StmtKind::Assign: globals_[stmt.target] = eval(*stmt.value); return;
            case StmtKind::ExprStmt: eval(*stmt.value); return;
            case StmtKind::If: {
                for (const auto& arm : stmt.arms) {
                    if (eval(*arm.cond).truthy()) {
                        exec_block(arm.body);
                        return;
                    }
                }
                if (stmt.has_else) exec_block(stmt.else_body);
                return;
            }
            case StmtKind::With: {
                const Expr& call = *stmt.value;
                if (call.kind != ExprKind::Call || call.text != "checkpointing")
                    fail("with expects checkpointing(...)");
                std::vector<RunContext::CkptObject> objs;
                for (const auto& argp : call.args) {
                    if (argp->kind != ExprKind::Name)
                        fail("checkpointing takes variable names");
                    std::string var = argp->text;
                    if (!globals_.count(var))
                        fail("checkpointing references undefined variable '" + var + "'");
                    objs.push_back(RunContext::CkptObject{
                        var, [this, var]() { return globals_.at(var); },
                        [this, var](Value v) { globals_[var] = std::move(v); }});
                }
                run_.checkpointing_enter(std::move(objs));
                struct ScopeExit {
                    RunContext& run;
                    ~ScopeExit() { run.checkpointing_exit(); }
                } guard{run_};
                exec_block(stmt.body);
                return;
            }
            case StmtKind::For: {
                const Expr& iter = *stmt.value;
                if (iter.kind == ExprKind::Call && iter.text == "loop") {
                    if (iter.args.size() != 2) fail("loop(name, vals) takes two arguments");
                    Value name_v = eval(*iter.args[0]);
                    if (name_v.kind() != ValueKind::Str) fail("loop name must be text");
                    auto items = materialize_iterable(eval(*iter.args[1]));
                    auto driver = run_.loop(name_v.as_str(), std::move(items));
                    while (auto v = driver->next()) {
                        globals_[stmt.target] = *v;
                        exec_block(stmt.body);
                    }
                    if (auto fb = driver->final_binding()) globals_[stmt.target] = *fb;
                    return;
                }
                auto items = materialize_iterable(eval(iter));
                for (auto& v : items) {
                    globals_[stmt.target] = v;
                    exec_block(stmt.body);
                }
                return;
            }
        }
    } catch (const Error& e) {
        if (util::starts_with(e.what(), "line ")) throw;
        fail("line " + std::to_string(stmt.line) + ": " + e.what());
    }
}

std::vector<Value> Interp::materialize_iterable(const Value& v) {
    if (v.kind() == ValueKind::List) return v.as_list();
    fail("expected an iterable (list or range), got " + v.repr());
}

static Value num_binary(const std::string& op, const Value& a, const Value& b) {
    bool both_int = a.kind() == ValueKind::Int && b.kind() == ValueKind::Int;
    if (op == "+") {
        if (a.kind() == ValueKind::Str && b.kind() == ValueKind::Str)
            return Value::str(a.as_str() + b.as_str());
        if (both_int) return Value::integer(a.as_int() + b.as_int());
        return Value::real(a.as_double() + b.as_double());
    }
    if (op == "-")
        return both_int ? Value::integer(a.as_int() - b.as_int())
                        : Value::real(a.as_double() - b.as_double());
    if (op == "*")
        return both_int ? Value::integer(a.as_int() * b.as_int())
                        : Value::real(a.as_double() * b.as_double());
    if (op == "/") {
        double d = b.as_double();
        if (d == 0.0) fail("division by zero");
        return Value::real(a.as_double() / d);
    }
    if (op == "//") {
        long long d = b.as_int();
        if (d == 0) fail("division by zero");
        long long q = a.as_int() / d;
        if ((a.as_int() % d != 0) && ((a.as_int() < 0) != (d < 0))) --q;
        return Value::integer(q);
    }
    if (op == "%") {
        if (both_int) {
            long long d = b.as_int();
            if (d == 0) fail("division by zero");
            long long m = a.as_int() % d;
            if (m != 0 && ((m < 0) != (d < 0))) m += d;
            return Value::integer(m);
        }
        return Value::real(std::fmod(a.as_double(), b.as_double()));
    }
    // comparisons
    if (op == "==") return Value::boolean(a.equals(b));
    if (op == "!=") return Value::boolean(!a.equals(b));
    int cmp;
    if (a.is_number() && b.is_number()) {
        double x = a.as_double(), y = b.as_double();
        cmp = x < y ? -1 : (x > y ? 1 : 0);
    } else if (a.kind() == ValueKind::Str && b.kind() == ValueKind::Str) {
        cmp = a.as_str().compare(b.as_str());
        cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
    } else {
        fail("cannot order " + a.repr() + " and " + b.repr());
    }
    if (op == "<") return Value::boolean(cmp < 0);
    if (op == "<=") return Value::boolean(cmp <= 0);
    if (op == ">") return Value::boolean(cmp > 0);
    if (op == ">=") return Value::boolean(cmp >= 0);
    fail("unknown operator '" + op + "'");
}

Value Interp::eval(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Int: return Value::integer(e.int_val);
        case ExprKind::Float: return Value::real(e.float_val);
        case ExprKind::Str: return Value::str(e.text);
        case ExprKind::Bool: return Value::boolean(e.bool_val);
        case ExprKind::None: return Value();
        case ExprKind::Name: {
            auto it = globals_.find(e.text);
            if (it != globals_.end()) return it->second;
            static const std::set<std::string> builtins{
                "log",  "arg", "loop", "checkpointing", "range", "rng",   "next",
                "work", "abs", "min",  "max",           "sqrt",  "floor", "round",
                "len",  "str", "int",  "float",         "print"};
            if (builtins.count(e.text)) return Value::builtin(e.text);
            fail("undefined variable '" + e.text + "'");
        }
        case ExprKind::Unary: {
            if (e.op == "not") return Value::boolean(!eval(*e.lhs).truthy());
            Value v = eval(*e.lhs);
            if (e.op == "-")
                return v.kind() == ValueKind::Int ? Value::integer(-v.as_int())
                                                  : Value::real(-v.as_double());
            return v;  // unary +
        }
        case ExprKind::Binary: {
            if (e.op == "and") {
                Value l = eval(*e.lhs);
                if (!l.truthy()) return Value::boolean(false);
                return Value::boolean(eval(*e.rhs).truthy());
            }
            if (e.op == "or") {
                Value l = eval(*e.lhs);
                if (l.truthy()) return Value::boolean(true);
                return Value::boolean(eval(*e.rhs).truthy());
            }
            return num_binary(e.op, eval(*e.lhs), eval(*e.rhs));
        }
        case ExprKind::Index: {
            Value base = eval(*e.lhs);
            long long i = eval(*e.rhs).as_int();
            const auto& items = base.as_list();
            if (i < 0 || i >= static_cast<long long>(items.size()))
                fail("index " + std::to_string(i) + " out of range");
            return items[static_cast<size_t>(i)];
        }
        case ExprKind::ListLit: {
            std::vector<Value> items;
            for (const auto& a : e.args) items.push_back(eval(*a));
            return Value::list(std::move(items));
        }
        case ExprKind::Call: return eval_call(e);
    }
    fail("bad expression");
}

Value Interp::eval_call(const Expr& e) {
    const std::string& fn = e.text;
    auto argc = [&](size_t n) {
        if (e.args.size() != n)
            fail(fn + "() takes " + std::to_string(n) + " argument(s), got " +
                 std::to_string(e.args.size()));
    };

    if (fn == "log") {
        argc(2);
        Value name = eval(*e.args[0]);
        if (name.kind() != ValueKind::Str) fail("log name must be text");
        return run_.log(name.as_str(), eval(*e.args[1]));
    }
    if (fn == "arg") {
        argc(2);
        Value name = eval(*e.args[0]);
        if (name.kind() != ValueKind::Str) fail("arg name must be text");
        return run_.arg(name.as_str(), eval(*e.args[1]));
    }
    if (fn == "loop") fail("loop() is only valid as the iterable of a for statement");
    if (fn == "checkpointing") fail("checkpointing() is only valid in a with statement");
    if (fn == "range") {
        if (e.args.size() == 1) {
            long long n = eval(*e.args[0]).as_int();
            std::vector<Value> items;
            for (long long i = 0; i < n; ++i) items.push_back(Value::integer(i));
            return Value::list(std::move(items));
        }
        argc(2);
        long long lo = eval(*e.args[0]).as_int();
        long long hi = eval(*e.args[1]).as_int();
        std::vector<Value> items;
        for (long long i = lo; i < hi; ++i) items.push_back(Value::integer(i));
        return Value::list(std::move(items));
    }
    if (fn == "rng") {
        argc(1);
        return Value::rng(static_cast<std::uint64_t>(eval(*e.args[0]).as_int()));
    }
    if (fn == "next") {
        argc(1);
        if (e.args[0]->kind != ExprKind::Name) fail("next expects an rng variable");
        auto it = globals_.find(e.args[0]->text);
        if (it == globals_.end()) fail("undefined variable '" + e.args[0]->text + "'");
        return Value::real(it->second.as_rng().next_double());
    }
    if (fn == "work") {
        argc(1);
        double secs = eval(*e.args[0]).as_double();
        if (secs > 0) std::this_thread::sleep_for(std::chrono::duration<double>(secs));
        return Value();
    }
    if (fn == "abs") {
        argc(1);
        Value v = eval(*e.args[0]);
        return v.kind() == ValueKind::Int ? Value::integer(std::llabs(v.as_int()))
                                          : Value::real(std::fabs(v.as_double()));
    }
    if (fn == "min" || fn == "max") {
        argc(2);
        Value a = eval(*e.args[0]), b = eval(*e.args[1]);
        bool pick_a = fn == "min" ? a.as_double() <= b.as_double() : a.as_double() >= b.as_double();
        return pick_a ? a : b;
    }
    if (fn == "sqrt") {
        argc(1);
        return Value::real(std::sqrt(eval(*e.args[0]).as_double()));
    }
    if (fn == "floor") {
        argc(1);
        return Value::integer(static_cast<long long>(std::floor(eval(*e.args[0]).as_double())));
    }
    if (fn == "round") {
        argc(1);
        return Value::real(std::round(eval(*e.args[0]).as_double()));
    }
    if (fn == "len") {
        argc(1);
        Value v = eval(*e.args[0]);
        if (v.kind() == ValueKind::Str) return Value::integer(static_cast<long long>(v.as_str().size()));
        return Value::integer(static_cast<long long>(v.as_list().size()));
    }
    if (fn == "str") {
        argc(1);
        return Value::str(eval(*e.args[0]).repr());
    }
    if (fn == "int") {
        argc(1);
        Value v = eval(*e.args[0]);
        if (v.kind() == ValueKind::Str) {
            auto parsed = util::parse_int(v.as_str());
            if (!parsed) fail("cannot parse '" + v.as_str() + "' as int");
            return Value::integer(*parsed);
        }
        return Value::integer(v.as_int());
    }
    if (fn == "float") {
        argc(1);
        Value v = eval(*e.args[0]);
        if (v.kind() == ValueKind::Str) {
            auto parsed = util::parse_double(v.as_str());
            if (!parsed) fail("cannot parse '" + v.as_str() + "' as float");
            return Value::real(*parsed);
        }
        return Value::real(v.as_double());
    }
    if (fn == "print") {
        std::string out;
        for (size_t i = 0; i < e.args.size(); ++i) {
            if (i) out += " ";
            out += eval(*e.args[i]).repr();
        }
        std::cout << out << "\n";
        return Value();
    }
    fail("unknown function '" + fn + "'");
}

void run_script(RunContext& run, const std::string& source) {
    Module mod = script::parse(source);
    Interp interp(run);
    try {
        interp.run_module(mod);
    } catch (const PrefixExit&) {
        // prefix scan: executed up to the first outermost-loop entry
    }
}

}  // namespace flor
