#include "flor/planner.hpp"

#include "flor/error.hpp"
#include "flor/propagate.hpp"
#include "flor/script/parser.hpp"
#include "flor/util.hpp"
#include "flor/views.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <queue>
#include <set>

namespace flor {

using script::Block;
using script::Module;
using script::Stmt;
using script::StmtKind;

RunProfile load_profile(Logstore& store, const RunKey& run) {
    RunProfile p;
    auto loops = store.loops_for_run(run);
    std::map<long long, LoopRow> by_id;
    for (const auto& l : loops) by_id[l.ctx_id] = l;

    // outer loop = the first top-level loop the run entered
    for (const auto& l : loops) {
        if (l.parent_ctx_id) continue;
        if (p.outer_loop.empty()) {
            p.outer_loop = l.loop_name;
            p.outer_entries = l.loop_entries;
        }
    }

    auto top_iteration = [&](long long ctx) -> long long {
        const LoopRow* cur = &by_id.at(ctx);
        while (cur->parent_ctx_id) cur = &by_id.at(*cur->parent_ctx_id);
        return cur->loop_iteration;
    };

    double save_sum = 0, load_sum = 0;
    long long save_n = 0, load_n = 0;
    std::map<long long, double> nested_sum;
    for (const auto& row : store.logs_for_run(run)) {
        if (row.value_type != kVtProfile) continue;
        auto secs = util::parse_double(row.value);
        if (!secs) continue;
        if (row.value_name == kDeltaPrefix) {
            p.t_prefix = *secs;
        } else if (row.value_name == kDeltaSuffix) {
            p.t_suffix = *secs;
        } else if (row.value_name == kDeltaCkptSave) {
            save_sum += *secs;
            ++save_n;
        } else if (row.value_name == kDeltaCkptLoad) {
            load_sum += *secs;
            ++load_n;
        } else if (util::starts_with(row.value_name, kDeltaNs) && row.ctx_id) {
            auto it = by_id.find(*row.ctx_id);
            if (it == by_id.end()) continue;
            if (!it->second.parent_ctx_id && it->second.loop_name == p.outer_loop) {
                p.outer_iter[it->second.loop_iteration] = *secs;
            } else {
                nested_sum[top_iteration(*row.ctx_id)] += *secs;
            }
        }
    }
    if (save_n) p.ckpt_save_mean = save_sum / static_cast<double>(save_n);
    if (load_n) p.ckpt_load_mean = load_sum / static_cast<double>(load_n);
    for (const auto& [k, total] : p.outer_iter) {
        double nested = nested_sum.count(k) ? nested_sum[k] : 0.0;
        p.validation[k] = std::max(0.0, total - nested);
    }
    return p;
}

namespace {

// the first named loop with no enclosing named loop
const Stmt* find_outer_loop(const BlockIndex& ix) {
    const Stmt* best = nullptr;
    for (const auto& [stmt, pos] : ix.stmt_pos) {
        std::string name;
        if (stmt->kind != StmtKind::For || !stmt->value) continue;
        if (stmt->value->kind != script::ExprKind::Call || stmt->value->text != "loop") continue;
        if (!ix.enclosing_loops(pos.first).empty()) continue;  // nested named loop
        if (!best || stmt->line < best->line) best = stmt;
    }
    return best;
}

bool stmt_is_descendant(const BlockIndex& ix, const Stmt* stmt, const Stmt* ancestor) {
    const Block* cur = ix.stmt_pos.at(stmt).first;
    while (cur) {
        auto it = ix.blocks.find(cur);
        if (it == ix.blocks.end()) return false;
        if (it->second.owner == ancestor) return true;
        cur = it->second.parent;
    }
    return false;
}

}  // namespace

std::map<std::string, ScanLevel> classify_levels(const std::string& source,
                                                 const std::vector<std::string>& vars) {
    Module mod = script::parse(source);
    BlockIndex ix = BlockIndex::build(mod);
    auto anchors = collect_anchors(mod);
    const Stmt* outer = find_outer_loop(ix);

    std::map<std::string, ScanLevel> out;
    for (const auto& var : vars) {
        bool found = false;
        ScanLevel level = ScanLevel::Prefix;
        for (const auto& a : anchors) {
            if (a.callee != "log" || a.name != var) continue;
            found = true;
            ScanLevel this_level;
            if (!outer) {
                this_level = ScanLevel::Prefix;
            } else if (stmt_is_descendant(ix, a.stmt, outer) || a.stmt == outer) {
                auto encl = ix.enclosing_loops(ix.stmt_pos.at(a.stmt).first);
                // first enclosing named loop is the outer one itself
                this_level = encl.size() >= 2 ? ScanLevel::Range : ScanLevel::Validation;
            } else {
                this_level = a.stmt->line < outer->line ? ScanLevel::Prefix : ScanLevel::Suffix;
            }
            if (static_cast<int>(this_level) > static_cast<int>(level)) level = this_level;
        }
        if (!found) fail("variable '" + var + "' is not logged in this version");
        out[var] = level;
    }
    return out;
}

ScanSpec classify_scan(const std::string& source, const std::vector<std::string>& vars) {
    auto levels = classify_levels(source, vars);
    ScanLevel max_level = ScanLevel::Prefix;
    for (const auto& [var, level] : levels)
        if (static_cast<int>(level) > static_cast<int>(max_level)) max_level = level;
    ScanSpec spec;
    spec.level = max_level;
    if (max_level == ScanLevel::Range) {
        spec.lo = 0;
        spec.hi = -1;  // full span unless the query narrows it
    }
    return spec;
}

double calibration_factor(const Project& project) {
    namespace fs = std::filesystem;
    auto path = project.calib_path();
    if (fs::exists(path)) {
        try {
            auto doc = nlohmann::json::parse(util::read_file(path));
            return doc.at("factor").get<double>();
        } catch (...) {
            // fall through and re-measure
        }
    }
    fs::create_directories(project.tmp_dir());
    auto probe = project.tmp_dir() / "calib.bin";
    std::string blob(4 << 20, '\x5a');
    double w0 = util::now_seconds();
    util::write_file(probe, blob);
    double wt = std::max(1e-9, util::now_seconds() - w0);
    double r0 = util::now_seconds();
    auto back = util::read_file(probe);
    double rt = std::max(1e-9, util::now_seconds() - r0);
    std::error_code ec;
    fs::remove(probe, ec);
    double factor = std::clamp(rt / wt, 0.05, 20.0);
    nlohmann::json doc{{"factor", factor}, {"write_s", wt}, {"read_s", rt}};
    util::write_file(path, doc.dump(1));
    return factor;
}

double estimate_seconds(const RunProfile& profile, const ScanSpec& scan,
                        const std::vector<long long>& ckpt_iters, double calib_factor) {
    if (profile.t_prefix < 0)
        fail("missing profile for this run; re-record it to enable estimates");
    double load_est = profile.ckpt_load_mean >= 0
                          ? profile.ckpt_load_mean
                          : (profile.ckpt_save_mean >= 0 ? profile.ckpt_save_mean * calib_factor
                                                         : 0.0);
    auto iter_cost = [&](long long k) {
        auto it = profile.outer_iter.find(k);
        return it == profile.outer_iter.end() ? 0.0 : it->second;
    };
    std::set<long long> ckpts(ckpt_iters.begin(), ckpt_iters.end());
    double suffix = std::max(0.0, profile.t_suffix);

    switch (scan.level) {
        case ScanLevel::Prefix: return profile.t_prefix;
        case ScanLevel::Suffix: return profile.t_prefix + load_est + suffix;
        case ScanLevel::Validation: {
            double total = profile.t_prefix + suffix;
            for (long long k = 0; k < profile.outer_entries; ++k) {
                if (ckpts.count(k)) {
                    auto it = profile.validation.find(k);
                    total += load_est + (it == profile.validation.end() ? 0.0 : it->second);
                } else {
                    total += iter_cost(k);  // no checkpoint: that epoch re-executes
                }
            }
            return total;
        }
        case ScanLevel::Range: {
            long long hi = scan.hi < 0 ? profile.outer_entries : scan.hi;
            std::optional<long long> nearest;
            for (long long c : ckpt_iters)
                if (c < scan.lo && (!nearest || c > *nearest)) nearest = c;
            long long resume = nearest ? *nearest + 1 : 0;
            double total = profile.t_prefix + (nearest ? load_est : 0.0) + suffix;
            for (long long k = resume; k < hi; ++k) total += iter_cost(k);
            return total;
        }
    }
    fail("bad scan level");
}

double ReplayPlan::total_serial() const {
    double total = 0;
    for (const auto& t : tasks) total += t.estimate;
    return total;
}

double ReplayPlan::total_parallel(int n) const {
    if (n < 1) n = 1;
    std::vector<double> sorted;
    for (const auto& t : tasks) sorted.push_back(t.estimate);
    std::sort(sorted.rbegin(), sorted.rend());
    std::priority_queue<double, std::vector<double>, std::greater<>> workers;
    for (int i = 0; i < n; ++i) workers.push(0.0);
    for (double est : sorted) {
        double load = workers.top();
        workers.pop();
        workers.push(load + est);
    }
    double makespan = 0;
    while (!workers.empty()) {
        makespan = workers.top();
        workers.pop();
    }
    return makespan;
}

ReplayPlan plan_replay(const Project& project, Logstore& store, ShadowRepo& repo, CkptStore& ckpts,
                       const ReplayQuery& query) {
    if (query.vars.empty()) fail("replay requires at least one variable name");
    ReplayPlan plan;
    plan.vars = query.vars;

    const std::vector<std::string> dims{"projid", "tstamp", "filename"};
    auto pred_cols = predicate_columns(query.where_clause);
    auto loop_names = store.known_loop_names();
    auto value_names = store.known_value_names();

    std::vector<std::string> view_names;  // names to materialize for filtering
    std::string outer_col;                // loop column constrained by the predicate
    for (const auto& c : pred_cols) {
        if (std::find(dims.begin(), dims.end(), c) != dims.end()) continue;
        if (std::find(query.vars.begin(), query.vars.end(), c) != query.vars.end())
            fail("column '" + c + "' has no materialized values yet; materialize it first");
        if (loop_names.count(c)) {
            view_names.push_back(delta_name(c));
            outer_col = c;
            continue;
        }
        if (!value_names.count(c))
            fail("column '" + c + "' has no materialized values; materialize it first");
        view_names.push_back(c);
    }

    // evaluate the predicate over the pivoted view (or a plain run listing)
    struct Match {
        RunKey run;
        std::optional<long long> hull_lo, hull_hi;
    };
    std::vector<Match> matches;
    if (view_names.empty()) {
        Table t;
        t.cols = dims;
        for (const auto& run : store.runs())
            t.rows.push_back({run.projid, run.tstamp, run.filename});
        Table kept = filter_view(t, query.where_clause);
        for (const auto& row : kept.rows)
            matches.push_back({RunKey{*row[0], *row[1], *row[2]}, {}, {}});
    } else {
        Table view = dataframe(store, view_names);
        Table kept = filter_view(view, query.where_clause);
        int oc = outer_col.empty() ? -1 : kept.col_index(outer_col);
        std::map<RunKey, Match> by_run;
        for (const auto& row : kept.rows) {
            RunKey run{*row[0], *row[1], *row[2]};
            auto& m = by_run[run];
            m.run = run;
            if (oc >= 0 && row[static_cast<size_t>(oc)]) {
                long long v = *util::parse_int(*row[static_cast<size_t>(oc)]);
                if (!m.hull_lo || v < *m.hull_lo) m.hull_lo = v;
                if (!m.hull_hi || v > *m.hull_hi) m.hull_hi = v;
            }
        }
        for (auto& [run, m] : by_run) matches.push_back(m);
        std::sort(matches.begin(), matches.end(),
                  [](const Match& a, const Match& b) { return a.run.tstamp < b.run.tstamp; });
    }

    std::map<std::string, std::string> src_cache;  // filename -> worktree source
    for (const auto& m : matches) {
        bool all_there = true;
        for (const auto& var : query.vars)
            if (!store.has_value(m.run, var)) all_there = false;
        if (all_there) {
            plan.notices.push_back(m.run.tstamp + ": all variables already materialized; skipped");
            continue;
        }
        std::string vid;
        try {
            vid = repo.lookup(m.run.tstamp);
        } catch (const Error& e) {
            plan.notices.push_back(m.run.tstamp + ": " + e.what());
            continue;
        }
        auto cache_it = src_cache.find(m.run.filename);
        if (cache_it == src_cache.end()) {
            auto p = project.root / m.run.filename;
            if (!std::filesystem::exists(p))
                fail("script " + m.run.filename + " not found in the working tree");
            cache_it = src_cache.emplace(m.run.filename, util::read_file(p)).first;
        }
        const std::string& srcY = cache_it->second;
        std::string srcX = repo.show_file(vid, m.run.filename);

        PropagationResult prop = propagate_source(srcX, srcY, query.vars);
        PlanTask task;
        task.vid = vid;
        task.projid = m.run.projid;
        task.tstamp = m.run.tstamp;
        task.filename = m.run.filename;
        task.source = prop.source;
        task.notes = prop.notes;
        for (const auto& u : prop.units)
            if (!u.applied && u.reason != "already present")
                task.notes.push_back(u.var + ": " + u.reason);
        for (const auto& var : query.vars)
            if (prop.var_producible(var)) task.producible_vars.push_back(var);
        if (task.producible_vars.empty()) {
            plan.notices.push_back(m.run.tstamp + " (" + vid.substr(0, 8) +
                                   "): excluded, no queried variable can be generated" +
                                   (task.notes.empty() ? "" : " [" + util::join(task.notes, "; ") + "]"));
            continue;
        }

        task.scan = classify_scan(task.source, task.producible_vars);
        if (task.scan.level == ScanLevel::Range && m.hull_lo && m.hull_hi) {
            // narrow only when every var is nested-level; shallower vars need
            // the post-loop state of the true final iteration
            auto levels = classify_levels(task.source, task.producible_vars);
            bool all_nested = true;
            for (const auto& [var, level] : levels)
                if (level != ScanLevel::Range) all_nested = false;
            if (all_nested) {
                task.scan.lo = *m.hull_lo;
                task.scan.hi = *m.hull_hi + 1;
            }
        }

        RunProfile profile = load_profile(store, m.run);
        if (task.scan.level == ScanLevel::Range && task.scan.hi < 0)
            task.scan.hi = profile.outer_entries;
        std::vector<long long> ckpt_iters;
        for (const auto& [iter, entries] : ckpts.by_iteration(m.run.projid, m.run.tstamp))
            ckpt_iters.push_back(iter);
        task.estimate =
            estimate_seconds(profile, task.scan, ckpt_iters, calibration_factor(project));
        plan.tasks.push_back(std::move(task));
    }
    return plan;
}

std::string render_plan(const ReplayPlan& plan, int workers) {
    std::string out;
    char buf[160];
    for (const auto& t : plan.tasks) {
        std::snprintf(buf, sizeof(buf), "%-8s  %s  %-12s  %8.2fs\n", t.vid.substr(0, 8).c_str(),
                      t.tstamp.c_str(), t.scan.str().c_str(), t.estimate);
        out += buf;
        for (const auto& n : t.notes) out += "          note: " + n + "\n";
    }
    for (const auto& n : plan.notices) out += "  -- " + n + "\n";
    std::snprintf(buf, sizeof(buf), "total serial %.2fs / parallel(%d) %.2fs\n",
                  plan.total_serial(), workers, plan.total_parallel(workers));
    out += buf;
    return out;
}

}  // namespace flor
