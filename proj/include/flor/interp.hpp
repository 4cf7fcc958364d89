#pragma once

#include "flor/instrument.hpp"
#include "flor/script/ast.hpp"

#include <map>
#include <string>

namespace flor {

// Executes a parsed script against a RunContext. One flat global scope;
// for-targets assign into it, matching the script language semantics.
class Interp {
public:
    explicit Interp(RunContext& run) : run_(run) {}

    void run_module(const script::Module& mod);

    std::map<std::string, Value>& globals() { return globals_; }

private:
    RunContext& run_;
    std::map<std::string, Value> globals_;

    void exec_block(const script::Block& block);
    void exec_stmt(const script::Stmt& stmt);
    Value eval(const script::Expr& e);
    Value eval_call(const script::Expr& e);
    std::vector<Value> materialize_iterable(const Value& v);
};

// Parse + execute; a prefix-scan exit is a clean early return.
void run_script(RunContext& run, const std::string& source);

}  // namespace flor
