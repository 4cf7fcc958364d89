#pragma once

#include "flor/script/ast.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flor {

// Parent/owner index over a parsed module; blocks and statements are
// identified by their AST node addresses.
struct BlockIndex {
    struct BlockInfo {
        const script::Block* parent = nullptr;  // enclosing block (null for module)
        const script::Stmt* owner = nullptr;    // compound statement owning this block
        std::string role;                       // body | arm<i> | else | module
    };
    const script::Block* root = nullptr;
    std::map<const script::Block*, BlockInfo> blocks;
    std::map<const script::Stmt*, std::pair<const script::Block*, int>> stmt_pos;

    static BlockIndex build(const script::Module& mod);
    // Named loops enclosing a block, outermost first (for-statements whose
    // iterable is loop("name", ...)).
    std::vector<std::string> enclosing_loops(const script::Block* block) const;
    std::string path_of(const script::Block* block) const;  // human-readable block id
};

// Library API call sites with a literal name argument; the fixed
// correspondence points for alignment.
struct Anchor {
    std::string callee;   // loop | log | arg
    std::string name;     // the literal first argument
    const script::Stmt* stmt = nullptr;
};
std::vector<Anchor> collect_anchors(const script::Module& mod);

// Statement fingerprints: exact keeps identifiers, shape blanks them
// (variable renames still match shape).
std::string stmt_signature(const script::Stmt& s, bool shape);

struct AnchorMap {
    std::map<const script::Stmt*, const script::Stmt*> y2x;
    std::map<const script::Stmt*, std::string> match_kind;  // anchor|exact|renamed|moved
    std::map<const script::Block*, const script::Block*> block_y2x;

    // Nearest mapped block walking up from a Y block; null when none.
    const script::Block* resolve_block(const script::Block* yblock, const BlockIndex& ix_y) const;
};

AnchorMap align(const script::Module& modX, const script::Module& modY);

struct ExtractedUnit {
    std::string var;
    const script::Block* block = nullptr;  // Y block holding the unit
    int start_index = 0;                   // first statement index in that block
    std::vector<const script::Stmt*> stmts;
    std::vector<std::string> lines;  // dedented source lines
    std::vector<std::string> reads;  // free names the unit needs from X
};

// The minimal statement(s) whose execution produces each var: the log-call
// statement plus immediately preceding assignments it reads.
std::vector<ExtractedUnit> extract_new_statements(const script::Module& modY,
                                                  const std::string& srcY,
                                                  const std::vector<std::string>& vars);

struct UnitOutcome {
    std::string var;
    bool applied = false;
    std::string reason;         // already present | unalignable ... | missing names ...
    std::string landing_block;  // block path in X when applied
};

struct PropagationResult {
    std::string source;  // srcX' (equals srcX when nothing applied)
    bool changed = false;
    std::vector<UnitOutcome> units;
    std::vector<std::string> notes;

    bool var_producible(const std::string& var) const;
};

// Back-ports the statements producing `vars` from Y into X. Never raises for
// alignment issues; per-unit outcomes say what happened. Parsing failures of
// the inputs do raise.
PropagationResult propagate_source(const std::string& srcX, const std::string& srcY,
                                   const std::vector<std::string>& vars);

}  // namespace flor
