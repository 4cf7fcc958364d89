#include "flor/propagate.hpp"

#include "flor/error.hpp"
#include "flor/script/parser.hpp"
#include "flor/util.hpp"

#include <algorithm>
#include <set>

namespace flor {

using script::Block;
using script::Expr;
using script::ExprKind;
using script::Module;
using script::Stmt;
using script::StmtKind;

// --- indexing ---------------------------------------------------------------

namespace {

void index_block(BlockIndex& ix, const Block& b, const Block* parent, const Stmt* owner,
                 const std::string& role) {
    ix.blocks[&b] = {parent, owner, role};
    for (size_t i = 0; i < b.stmts.size(); ++i) {
        const Stmt& s = *b.stmts[i];
        ix.stmt_pos[&s] = {&b, static_cast<int>(i)};
        switch (s.kind) {
            case StmtKind::For:
            case StmtKind::With: index_block(ix, s.body, &b, &s, "body"); break;
            case StmtKind::If: {
                for (size_t a = 0; a < s.arms.size(); ++a)
                    index_block(ix, s.arms[a].body, &b, &s, "arm" + std::to_string(a));
                if (s.has_else) index_block(ix, s.else_body, &b, &s, "else");
                break;
            }
            default: break;
        }
    }
}

bool is_named_loop(const Stmt& s, std::string* name_out = nullptr) {
    if (s.kind != StmtKind::For || !s.value) return false;
    const Expr& it = *s.value;
    if (it.kind != ExprKind::Call || it.text != "loop" || it.args.empty()) return false;
    if (it.args[0]->kind != ExprKind::Str) return false;
    if (name_out) *name_out = it.args[0]->text;
    return true;
}

}  // namespace

BlockIndex BlockIndex::build(const Module& mod) {
    BlockIndex ix;
    ix.root = &mod.body;
    index_block(ix, mod.body, nullptr, nullptr, "module");
    return ix;
}

std::vector<std::string> BlockIndex::enclosing_loops(const Block* block) const {
    std::vector<std::string> names;
    const Block* cur = block;
    while (cur) {
        auto it = blocks.find(cur);
        if (it == blocks.end()) break;
        if (it->second.owner) {
            std::string name;
            if (is_named_loop(*it->second.owner, &name)) names.push_back(name);
        }
        cur = it->second.parent;
    }
    std::reverse(names.begin(), names.end());
    return names;
}

std::string BlockIndex::path_of(const Block* block) const {
    std::vector<std::string> parts;
    const Block* cur = block;
    while (cur) {
        auto it = blocks.find(cur);
        if (it == blocks.end()) break;
        if (!it->second.owner) {
            parts.push_back("module");
        } else {
            const Stmt& owner = *it->second.owner;
            std::string label;
            std::string loop_name;
            if (is_named_loop(owner, &loop_name))
                label = "for[" + loop_name + "]";
            else if (owner.kind == StmtKind::For)
                label = "for";
            else if (owner.kind == StmtKind::With)
                label = "with";
            else
                label = "if." + it->second.role;
            parts.push_back(label);
        }
        cur = it->second.parent;
    }
    std::reverse(parts.begin(), parts.end());
    return util::join(parts, ">");
}

// --- anchors & signatures ----------------------------------------------------

namespace {

void scan_expr_anchors(const Expr& e, const Stmt* stmt, std::vector<Anchor>& out) {
    if (e.kind == ExprKind::Call) {
        if ((e.text == "log" || e.text == "arg" || e.text == "loop") && !e.args.empty() &&
            e.args[0]->kind == ExprKind::Str)
            out.push_back({e.text, e.args[0]->text, stmt});
        for (const auto& a : e.args) scan_expr_anchors(*a, stmt, out);
        return;
    }
    if (e.lhs) scan_expr_anchors(*e.lhs, stmt, out);
    if (e.rhs) scan_expr_anchors(*e.rhs, stmt, out);
    for (const auto& a : e.args) scan_expr_anchors(*a, stmt, out);
}

void scan_stmt_anchors(const Stmt& s, std::vector<Anchor>& out) {
    if (s.value) scan_expr_anchors(*s.value, &s, out);
    for (const auto& arm : s.arms) {
        scan_expr_anchors(*arm.cond, &s, out);
        for (const auto& inner : arm.body.stmts) scan_stmt_anchors(*inner, out);
    }
    if (s.has_else)
        for (const auto& inner : s.else_body.stmts) scan_stmt_anchors(*inner, out);
    if (s.kind == StmtKind::For || s.kind == StmtKind::With)
        for (const auto& inner : s.body.stmts) scan_stmt_anchors(*inner, out);
}

void expr_sig(const Expr& e, bool shape, std::string& out) {
    switch (e.kind) {
        case ExprKind::Int: out += "i" + std::to_string(e.int_val); break;
        case ExprKind::Float: out += "f" + util::format_double(e.float_val); break;
        case ExprKind::Str: out += "s(" + e.text + ")"; break;
        case ExprKind::Bool: out += e.bool_val ? "true" : "false"; break;
        case ExprKind::None: out += "none"; break;
        case ExprKind::Name: out += shape ? "_" : "n(" + e.text + ")"; break;
        case ExprKind::Unary:
            out += "u" + e.op + "(";
            expr_sig(*e.lhs, shape, out);
            out += ")";
            break;
        case ExprKind::Binary:
            out += "b" + e.op + "(";
            expr_sig(*e.lhs, shape, out);
            out += ",";
            expr_sig(*e.rhs, shape, out);
            out += ")";
            break;
        case ExprKind::Index:
            out += "x(";
            expr_sig(*e.lhs, shape, out);
            out += ",";
            expr_sig(*e.rhs, shape, out);
            out += ")";
            break;
        case ExprKind::Call: {
            out += "c(" + e.text;  // callee identity survives shaping
            for (const auto& a : e.args) {
                out += ",";
                expr_sig(*a, shape, out);
            }
            out += ")";
            break;
        }
        case ExprKind::ListLit: {
            out += "l(";
            for (const auto& a : e.args) {
                expr_sig(*a, shape, out);
                out += ",";
            }
            out += ")";
            break;
        }
    }
}

void stmt_sig_rec(const Stmt& s, bool shape, std::string& out) {
    switch (s.kind) {
        case StmtKind::Pass: out += "pass;"; break;
        case StmtKind::Assign:
            out += "assign(" + (shape ? std::string("_") : s.target) + "=";
            expr_sig(*s.value, shape, out);
            out += ");";
            break;
        case StmtKind::ExprStmt:
            out += "expr(";
            expr_sig(*s.value, shape, out);
            out += ");";
            break;
        case StmtKind::For:
            out += "for(" + (shape ? std::string("_") : s.target) + ":";
            expr_sig(*s.value, shape, out);
            out += "){";
            for (const auto& inner : s.body.stmts) stmt_sig_rec(*inner, shape, out);
            out += "}";
            break;
        case StmtKind::With:
            out += "with(";
            expr_sig(*s.value, shape, out);
            out += "){";
            for (const auto& inner : s.body.stmts) stmt_sig_rec(*inner, shape, out);
            out += "}";
            break;
        case StmtKind::If:
            out += "if";
            for (const auto& arm : s.arms) {
                out += "(";
                expr_sig(*arm.cond, shape, out);
                out += "){";
                for (const auto& inner : arm.body.stmts) stmt_sig_rec(*inner, shape, out);
                out += "}";
            }
            if (s.has_else) {
                out += "else{";
                for (const auto& inner : s.else_body.stmts) stmt_sig_rec(*inner, shape, out);
                out += "}";
            }
            break;
    }
}

}  // namespace

std::vector<Anchor> collect_anchors(const Module& mod) {
    std::vector<Anchor> out;
    for (const auto& s : mod.body.stmts) scan_stmt_anchors(*s, out);
    return out;
}

std::string stmt_signature(const Stmt& s, bool shape) {
    std::string out;
    stmt_sig_rec(s, shape, out);
    return out;
}

// --- alignment ----------------------------------------------------------------

const Block* AnchorMap::resolve_block(const Block* yblock, const BlockIndex& ix_y) const {
    const Block* cur = yblock;
    while (cur) {
        auto hit = block_y2x.find(cur);
        if (hit != block_y2x.end()) return hit->second;
        auto it = ix_y.blocks.find(cur);
        if (it == ix_y.blocks.end()) return nullptr;
        cur = it->second.parent;
    }
    return nullptr;
}

namespace {

// Pair the blocks of two matched compound statements.
void pair_owner_blocks(const Stmt* sx, const Stmt* sy, AnchorMap& map) {
    if (sx->kind != sy->kind) return;
    if (sy->kind == StmtKind::For || sy->kind == StmtKind::With) {
        map.block_y2x[&sy->body] = &sx->body;
        return;
    }
    if (sy->kind == StmtKind::If) {
        for (size_t i = 0; i < sy->arms.size() && i < sx->arms.size(); ++i)
            map.block_y2x[&sy->arms[i].body] = &sx->arms[i].body;
        if (sy->has_else && sx->has_else) map.block_y2x[&sy->else_body] = &sx->else_body;
    }
}

}  // namespace

AnchorMap align(const Module& modX, const Module& modY) {
    AnchorMap map;
    BlockIndex ix_x = BlockIndex::build(modX);
    BlockIndex ix_y = BlockIndex::build(modY);
    map.block_y2x[&modY.body] = &modX.body;

    auto ax = collect_anchors(modX);
    auto ay = collect_anchors(modY);
    std::set<const Stmt*> x_taken, y_taken;

    // top-down anchor pinning: same (callee, name) paired in document order
    std::map<std::string, std::vector<const Stmt*>> x_by_key;
    for (const auto& a : ax) x_by_key[a.callee + "\x1f" + a.name].push_back(a.stmt);
    std::map<std::string, size_t> cursor;
    for (const auto& a : ay) {
        if (y_taken.count(a.stmt)) continue;
        auto key = a.callee + "\x1f" + a.name;
        auto it = x_by_key.find(key);
        if (it == x_by_key.end()) continue;
        size_t& cur = cursor[key];
        while (cur < it->second.size() && x_taken.count(it->second[cur])) ++cur;
        if (cur >= it->second.size()) continue;
        const Stmt* sx = it->second[cur++];
        map.y2x[a.stmt] = sx;
        map.match_kind[a.stmt] = "anchor";
        x_taken.insert(sx);
        y_taken.insert(a.stmt);
        pair_owner_blocks(sx, a.stmt, map);
    }

    // greedy per-block matching by structural hash (exact, then shape),
    // iterated until matched compounds stop exposing new block pairs
    bool grew = true;
    while (grew) {
        grew = false;
        auto pairs = map.block_y2x;  // snapshot; the loop may add entries
        for (const auto& [yb, xb] : pairs) {
            for (int pass = 0; pass < 2; ++pass) {
                bool shape = pass == 1;
                std::multimap<std::string, const Stmt*> x_free;
                for (const auto& sp : xb->stmts)
                    if (!x_taken.count(sp.get()))
                        x_free.emplace(stmt_signature(*sp, shape), sp.get());
                for (const auto& sp : yb->stmts) {
                    const Stmt* sy = sp.get();
                    if (y_taken.count(sy)) continue;
                    auto sig = stmt_signature(*sy, shape);
                    auto hit = x_free.find(sig);
                    while (hit != x_free.end() && hit->first == sig && x_taken.count(hit->second))
                        ++hit;
                    if (hit == x_free.end() || hit->first != sig) continue;
                    const Stmt* sx = hit->second;
                    map.y2x[sy] = sx;
                    map.match_kind[sy] = shape ? "renamed" : "exact";
                    x_taken.insert(sx);
                    y_taken.insert(sy);
                    if (!map.block_y2x.count(&sy->body) &&
                        (sy->kind == StmtKind::For || sy->kind == StmtKind::With ||
                         sy->kind == StmtKind::If)) {
                        pair_owner_blocks(sx, sy, map);
                        grew = true;
                    }
                }
            }
        }
    }

    // move detection: exact-hash pairs across non-corresponding blocks
    std::multimap<std::string, const Stmt*> x_rest;
    for (const auto& [stmt, pos] : ix_x.stmt_pos)
        if (!x_taken.count(stmt)) x_rest.emplace(stmt_signature(*stmt, false), stmt);
    for (const auto& [stmt, pos] : ix_y.stmt_pos) {
        if (y_taken.count(stmt)) continue;
        auto sig = stmt_signature(*stmt, false);
        auto hit = x_rest.find(sig);
        while (hit != x_rest.end() && hit->first == sig && x_taken.count(hit->second)) ++hit;
        if (hit == x_rest.end() || hit->first != sig) continue;
        map.y2x[stmt] = hit->second;
        map.match_kind[stmt] = "moved";
        x_taken.insert(hit->second);
        y_taken.insert(stmt);
    }
    return map;
}

// --- extraction ----------------------------------------------------------------

namespace {

void collect_reads(const Expr& e, std::set<std::string>& out) {
    if (e.kind == ExprKind::Name) {
        out.insert(e.text);
        return;
    }
    if (e.lhs) collect_reads(*e.lhs, out);
    if (e.rhs) collect_reads(*e.rhs, out);
    for (const auto& a : e.args) collect_reads(*a, out);
}

void stmt_reads_writes(const Stmt& s, std::set<std::string>& reads, std::set<std::string>& writes) {
    switch (s.kind) {
        case StmtKind::Pass: return;
        case StmtKind::Assign:
            collect_reads(*s.value, reads);
            writes.insert(s.target);
            return;
        case StmtKind::ExprStmt: collect_reads(*s.value, reads); return;
        case StmtKind::For:
            collect_reads(*s.value, reads);
            writes.insert(s.target);
            for (const auto& inner : s.body.stmts) stmt_reads_writes(*inner, reads, writes);
            return;
        case StmtKind::With:
            collect_reads(*s.value, reads);
            for (const auto& inner : s.body.stmts) stmt_reads_writes(*inner, reads, writes);
            return;
        case StmtKind::If:
            for (const auto& arm : s.arms) {
                collect_reads(*arm.cond, reads);
                for (const auto& inner : arm.body.stmts) stmt_reads_writes(*inner, reads, writes);
            }
            if (s.has_else)
                for (const auto& inner : s.else_body.stmts) stmt_reads_writes(*inner, reads, writes);
            return;
    }
}

bool stmt_contains_log_of(const Stmt& s, const std::string& var) {
    std::vector<Anchor> anchors;
    scan_stmt_anchors(s, anchors);
    for (const auto& a : anchors)
        if (a.callee == "log" && a.name == var) return true;
    return false;
}

// Statements at block level whose subtree logs `var`.
void find_log_stmts(const Block& b, const std::string& var,
                    std::vector<std::pair<const Block*, int>>& out) {
    for (size_t i = 0; i < b.stmts.size(); ++i) {
        const Stmt& s = *b.stmts[i];
        bool here = false;
        {
            std::vector<Anchor> anchors;
            if (s.value) scan_expr_anchors(*s.value, &s, anchors);
            for (const auto& arm : s.arms) scan_expr_anchors(*arm.cond, &s, anchors);
            for (const auto& a : anchors)
                if (a.callee == "log" && a.name == var) here = true;
        }
        if (here) {
            out.emplace_back(&b, static_cast<int>(i));
            continue;
        }
        // recurse: a log call in a nested body belongs to the nested block,
        // unless the statement is an `if` whose guard must travel with it
        if (s.kind == StmtKind::If && stmt_contains_log_of(s, var)) {
            out.emplace_back(&b, static_cast<int>(i));
            continue;
        }
        if (s.kind == StmtKind::For || s.kind == StmtKind::With)
            find_log_stmts(s.body, var, out);
    }
}

std::set<std::string> builtin_names() {
    return {"log",  "arg",  "loop", "checkpointing", "range", "rng",   "next",
            "work", "abs",  "min",  "max",           "sqrt",  "floor", "round",
            "len",  "str",  "int",  "float",         "print"};
}

}  // namespace

std::vector<ExtractedUnit> extract_new_statements(const Module& modY, const std::string& srcY,
                                                  const std::vector<std::string>& vars) {
    auto src_lines = util::split(srcY, '\n');
    auto line_at = [&](int ln) -> std::string {
        return (ln >= 1 && ln <= static_cast<int>(src_lines.size()))
                   ? src_lines[static_cast<size_t>(ln - 1)]
                   : std::string();
    };
    std::vector<ExtractedUnit> units;
    for (const auto& var : vars) {
        std::vector<std::pair<const Block*, int>> sites;
        find_log_stmts(modY.body, var, sites);
        if (sites.empty()) fail("variable '" + var + "' is not logged in the current source");
        for (const auto& [block, idx] : sites) {
            ExtractedUnit unit;
            unit.var = var;
            unit.block = block;
            int start = idx;
            std::set<std::string> reads, writes;
            stmt_reads_writes(*block->stmts[static_cast<size_t>(idx)], reads, writes);
            // pull in immediately preceding assignments the unit reads
            while (start > 0) {
                const Stmt& prev = *block->stmts[static_cast<size_t>(start - 1)];
                if (prev.kind != StmtKind::Assign) break;
                std::set<std::string> needed = reads;
                for (const auto& w : writes) needed.erase(w);
                if (!needed.count(prev.target)) break;
                stmt_reads_writes(prev, reads, writes);
                --start;
            }
            unit.start_index = start;
            for (int i = start; i <= idx; ++i)
                unit.stmts.push_back(block->stmts[static_cast<size_t>(i)].get());
            for (const Stmt* s : unit.stmts)
                for (int ln = s->line; ln <= s->last_line; ++ln)
                    unit.lines.push_back(line_at(ln));
            // dedent by the unit's block indentation
            size_t strip = static_cast<size_t>(block->indent - 1);
            for (auto& l : unit.lines)
                if (l.size() >= strip)
                    l = l.substr(strip);
            auto builtins = builtin_names();
            for (const auto& r : reads)
                if (!writes.count(r) && !builtins.count(r)) unit.reads.push_back(r);
            units.push_back(std::move(unit));
        }
    }
    return units;
}

// --- application ----------------------------------------------------------------

bool PropagationResult::var_producible(const std::string& var) const {
    for (const auto& u : units)
        if (u.var == var && (u.applied || u.reason == "already present")) return true;
    return false;
}

namespace {

// Names bound in X before `before_line` (flat scope: assignments, loop
// targets and args anywhere earlier in the document).
void bindings_before(const Block& b, int before_line, std::set<std::string>& out) {
    for (const auto& sp : b.stmts) {
        const Stmt& s = *sp;
        if (s.line >= before_line) continue;
        if (s.kind == StmtKind::Assign || s.kind == StmtKind::For) out.insert(s.target);
        if (s.kind == StmtKind::For || s.kind == StmtKind::With)
            bindings_before(s.body, before_line, out);
        if (s.kind == StmtKind::If) {
            for (const auto& arm : s.arms) bindings_before(arm.body, before_line, out);
            if (s.has_else) bindings_before(s.else_body, before_line, out);
        }
    }
}

struct Insertion {
    int line = 0;  // 1-based; insert before this source line
    std::vector<std::string> text;
};

}  // namespace

PropagationResult propagate_source(const std::string& srcX, const std::string& srcY,
                                   const std::vector<std::string>& vars) {
    PropagationResult result;
    result.source = srcX;

    Module modY = script::parse(srcY);
    auto units = extract_new_statements(modY, srcY, vars);

    {
        std::map<std::string, int> site_count;
        for (const auto& u : units) ++site_count[u.var];
        for (const auto& [var, n] : site_count)
            if (n > 1)
                result.notes.push_back("'" + var + "' is logged at " + std::to_string(n) +
                                       " call sites; all are propagated (loop context "
                                       "disambiguates the values)");
    }

    std::map<std::string, long long> unit_ordinal;  // per var, across its call sites
    for (const auto& unit : units) {
        UnitOutcome outcome;
        outcome.var = unit.var;
        long long ordinal = unit_ordinal[unit.var]++;

        // re-parse the working copy so line numbers stay accurate
        Module modX = script::parse(result.source);
        BlockIndex ix_x = BlockIndex::build(modX);
        BlockIndex ix_y = BlockIndex::build(modY);

        // presence check keeps application idempotent: the j-th call site of
        // a var is present when X already logs it at more than j sites
        long long x_sites = 0;
        for (const auto& a : collect_anchors(modX))
            if (a.callee == "log" && a.name == unit.var) ++x_sites;
        if (x_sites > ordinal) {
            outcome.reason = "already present";
            result.units.push_back(std::move(outcome));
            continue;
        }

        AnchorMap map = align(modX, modY);

        // every named loop enclosing the unit must exist in X, or the
        // per-iteration semantics cannot be preserved
        auto needed_loops = ix_y.enclosing_loops(unit.block);
        std::set<std::string> x_loops;
        for (const auto& a : collect_anchors(modX))
            if (a.callee == "loop") x_loops.insert(a.name);
        bool unalignable = false;
        for (const auto& ln : needed_loops) {
            if (!x_loops.count(ln)) {
                outcome.reason = "unalignable: version lacks loop '" + ln + "'";
                unalignable = true;
            }
        }
        if (unalignable) {
            result.units.push_back(std::move(outcome));
            continue;
        }

        const Block* target = map.block_y2x.count(unit.block)
                                  ? map.block_y2x.at(unit.block)
                                  : map.resolve_block(unit.block, ix_y);
        if (!target) {
            outcome.reason = "unalignable: no corresponding block";
            result.units.push_back(std::move(outcome));
            continue;
        }

        // insertion index: after the nearest preceding matched sibling, else
        // the unit's own offset clamped to the block end
        int insert_idx = std::min<int>(unit.start_index, static_cast<int>(target->stmts.size()));
        for (int i = unit.start_index - 1; i >= 0; --i) {
            const Stmt* sib = unit.block->stmts[static_cast<size_t>(i)].get();
            auto hit = map.y2x.find(sib);
            if (hit == map.y2x.end()) continue;
            auto pos = ix_x.stmt_pos.find(hit->second);
            if (pos == ix_x.stmt_pos.end() || pos->second.first != target) continue;
            insert_idx = pos->second.second + 1;
            break;
        }

        int insert_line;
        if (target->stmts.empty())
            insert_line = 1;
        else if (insert_idx < static_cast<int>(target->stmts.size()))
            insert_line = target->stmts[static_cast<size_t>(insert_idx)]->line;
        else
            insert_line = target->stmts.back()->last_line + 1;

        // the unit must only read names X binds before the insertion point
        std::set<std::string> bound;
        bindings_before(modX.body, insert_line, bound);
        std::vector<std::string> missing;
        for (const auto& r : unit.reads)
            if (!bound.count(r)) missing.push_back(r);
        if (!missing.empty()) {
            outcome.reason = "references names absent in this version: " + util::join(missing, ", ");
            result.units.push_back(std::move(outcome));
            continue;
        }

        std::string indent(static_cast<size_t>(target->indent - 1), ' ');
        auto lines = util::split(result.source, '\n');
        std::vector<std::string> text;
        for (const auto& l : unit.lines) text.push_back(l.empty() ? l : indent + l);
        lines.insert(lines.begin() + (insert_line - 1), text.begin(), text.end());
        std::string next_source = util::join(lines, "\n");

        try {
            script::parse(next_source);
        } catch (const Error& e) {
            outcome.reason = std::string("insertion would not parse: ") + e.what();
            result.units.push_back(std::move(outcome));
            continue;
        }
        result.source = std::move(next_source);
        result.changed = true;
        outcome.applied = true;
        outcome.landing_block = ix_x.path_of(target);
        result.units.push_back(std::move(outcome));
    }
    return result;
}

}  // namespace flor
