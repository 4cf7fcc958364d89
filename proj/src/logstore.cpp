#include "flor/logstore.hpp"

#include "flor/error.hpp"
#include "flor/logfile.hpp"
#include "flor/util.hpp"

#include <algorithm>

namespace flor {

Logstore::Logstore(const std::filesystem::path& db_file) : db_(db_file) { ensure_schema(); }

void Logstore::ensure_schema() {
    db_.exec(
        "CREATE TABLE IF NOT EXISTS logs ("
        " projid TEXT NOT NULL, tstamp TEXT NOT NULL, filename TEXT NOT NULL,"
        " ctx_id INTEGER, value_name TEXT NOT NULL, value TEXT NOT NULL,"
        " value_type INTEGER NOT NULL)");
    db_.exec(
        "CREATE TABLE IF NOT EXISTS loops ("
        " ctx_id INTEGER PRIMARY KEY, parent_ctx_id INTEGER,"
        " loop_name TEXT NOT NULL, loop_entries INTEGER NOT NULL,"
        " loop_iteration INTEGER NOT NULL,"
        " projid TEXT NOT NULL, tstamp TEXT NOT NULL, filename TEXT NOT NULL)");
    db_.exec("CREATE INDEX IF NOT EXISTS idx_logs_name ON logs(value_name)");
    db_.exec("CREATE INDEX IF NOT EXISTS idx_logs_run ON logs(projid, tstamp)");
    db_.exec("CREATE INDEX IF NOT EXISTS idx_loops_run ON loops(projid, tstamp)");
}

bool Logstore::has_run(const std::string& projid, const std::string& tstamp) {
    auto rows = db_.query("SELECT 1 FROM logs WHERE projid = ? AND tstamp = ? LIMIT 1",
                          {projid, tstamp});
    return !rows.empty();
}

std::optional<std::string> Logstore::max_tstamp() {
    auto rows = db_.query("SELECT MAX(tstamp) FROM logs");
    if (rows.empty() || rows[0].is_null(0)) return std::nullopt;
    return rows[0].as_text(0);
}

namespace {

void validate_chain(const std::vector<CtxFrame>& ctx, size_t rec_idx) {
    for (const auto& f : ctx) {
        if (f.loop_name.empty())
            fail("malformed record " + std::to_string(rec_idx) + ": empty loop_name");
        if (f.loop_iteration < 0 || (f.loop_entries > 0 && f.loop_iteration >= f.loop_entries))
            fail("malformed record " + std::to_string(rec_idx) + ": loop_iteration " +
                 std::to_string(f.loop_iteration) + " out of range for loop_entries " +
                 std::to_string(f.loop_entries));
    }
}

}  // namespace

UnpackCounts Logstore::unpack(const RunLog& run) {
    UnpackCounts counts;
    if (has_run(run.header.projid, run.header.tstamp)) {
        counts.skipped = true;
        return counts;
    }
    for (size_t i = 0; i < run.records.size(); ++i) validate_chain(run.records[i].ctx, i);

    DbTxn txn(db_);
    long long next_ctx = 1;
    {
        auto rows = db_.query("SELECT MAX(ctx_id) FROM loops");
        if (!rows.empty() && !rows[0].is_null(0)) next_ctx = rows[0].as_int(0) + 1;
    }
    std::map<std::string, long long> chain_to_ctx;  // run-local structural key -> global id
    for (const auto& rec : run.records) {
        std::optional<long long> parent;
        std::string key;
        for (const auto& frame : rec.ctx) {
            key += frame.loop_name + "\x1f" + std::to_string(frame.loop_iteration) + "\x1e";
            auto it = chain_to_ctx.find(key);
            if (it == chain_to_ctx.end()) {
                long long id = next_ctx++;
                db_.exec(
                    "INSERT INTO loops (ctx_id, parent_ctx_id, loop_name, loop_entries,"
                    " loop_iteration, projid, tstamp, filename) VALUES (?,?,?,?,?,?,?,?)",
                    {id, parent ? DbParam{*parent} : DbParam{nullptr}, frame.loop_name,
                     frame.loop_entries, frame.loop_iteration, run.header.projid,
                     run.header.tstamp, run.header.filename});
                chain_to_ctx.emplace(key, id);
                parent = id;
                ++counts.loops;
            } else {
                parent = it->second;
            }
        }
        db_.exec(
            "INSERT INTO logs (projid, tstamp, filename, ctx_id, value_name, value, value_type)"
            " VALUES (?,?,?,?,?,?,?)",
            {run.header.projid, run.header.tstamp, run.header.filename,
             parent ? DbParam{*parent} : DbParam{nullptr}, rec.value_name, rec.value,
             static_cast<long long>(rec.value_type)});
        ++counts.logs;
    }
    txn.commit();
    return counts;
}

UnpackCounts Logstore::unpack_file(const std::filesystem::path& logfile) {
    return unpack(read_logfile(logfile));
}

BackfillResult Logstore::backfill(const RunLog& replay, const std::set<std::string>& targets,
                                  bool keep_toplevel) {
    if (!replay.header.replay) fail("backfill requires a replay logfile");
    if (replay.header.replay_of.empty()) fail("replay logfile lacks the original run tstamp");
    RunKey orig{replay.header.projid, replay.header.replay_of, replay.header.filename};
    if (!has_run(orig.projid, orig.tstamp))
        fail("original run " + orig.tstamp + " is not in the store");
    // attribute to the run key as recorded, whatever path the replay ran from
    {
        auto rows = db_.query("SELECT DISTINCT filename FROM logs WHERE projid = ? AND tstamp = ?",
                              {orig.projid, orig.tstamp});
        if (!rows.empty()) orig.filename = rows[0].as_text(0);
    }

    // Structural chain -> the original run's ctx ids.
    std::map<std::string, long long> chain_to_ctx;
    {
        auto rows = loops_for_run(orig);
        std::map<long long, const LoopRow*> by_id;
        for (const auto& r : rows) by_id[r.ctx_id] = &r;
        for (const auto& r : rows) {
            std::vector<CtxFrame> chain;
            const LoopRow* cur = &r;
            while (cur) {
                chain.insert(chain.begin(), CtxFrame{cur->ctx_id, cur->loop_name,
                                                     cur->loop_entries, cur->loop_iteration});
                cur = cur->parent_ctx_id ? by_id[*cur->parent_ctx_id] : nullptr;
            }
            chain_to_ctx[chain_key(chain)] = r.ctx_id;
        }
    }

    BackfillResult result;
    struct Group {
        std::optional<long long> ctx;
        std::vector<std::pair<std::string, int>> values;  // value, value_type
    };
    std::map<std::pair<std::string, std::string>, Group> groups;  // (name, chain) -> values
    std::vector<std::pair<std::string, std::string>> group_order;

    for (const auto& rec : replay.records) {
        bool is_load_timing = rec.value_name == kDeltaCkptLoad;
        if (!targets.count(rec.value_name) && !is_load_timing) continue;
        if (!keep_toplevel && rec.ctx.empty()) continue;
        std::optional<long long> ctx;
        if (!rec.ctx.empty()) {
            auto it = chain_to_ctx.find(chain_key(rec.ctx));
            if (it == chain_to_ctx.end())
                fail("replay record '" + rec.value_name +
                     "' references a loop context the original run never executed");
            ctx = it->second;
        }
        auto key = std::make_pair(rec.value_name, chain_key(rec.ctx));
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) {
            it->second.ctx = ctx;
            group_order.push_back(key);
        }
        it->second.values.emplace_back(rec.value, rec.value_type);
    }

    DbTxn txn(db_);
    for (const auto& key : group_order) {
        const auto& [name, chain] = key;
        const Group& group = groups[key];
        std::vector<std::string> existing;
        {
            std::vector<DbParam> params{orig.projid, orig.tstamp, name};
            std::string sql =
                "SELECT value FROM logs WHERE projid = ? AND tstamp = ? AND value_name = ? AND ";
            if (group.ctx) {
                sql += "ctx_id = ?";
                params.emplace_back(*group.ctx);
            } else {
                sql += "ctx_id IS NULL";
            }
            for (const auto& row : db_.query(sql, params)) existing.push_back(row.as_text(0));
        }
        if (!existing.empty()) {
            std::vector<std::string> incoming;
            for (const auto& [v, vt] : group.values) incoming.push_back(v);
            auto sorted_eq = [](std::vector<std::string> a, std::vector<std::string> b) {
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                return a == b;
            };
            if (is_reserved_name(name) || sorted_eq(existing, incoming)) continue;
            fail("backfill conflict for '" + name + "': original run has value '" + existing[0] +
                 "' but replay produced '" + incoming[0] +
                 "' at the same coordinates (nondeterministic script?)");
        }
        for (const auto& [v, vt] : group.values) {
            db_.exec(
                "INSERT INTO logs (projid, tstamp, filename, ctx_id, value_name, value,"
                " value_type) VALUES (?,?,?,?,?,?,?)",
                {orig.projid, orig.tstamp, orig.filename,
                 group.ctx ? DbParam{*group.ctx} : DbParam{nullptr}, name, v,
                 static_cast<long long>(vt)});
            ++result.inserted;
        }
    }
    txn.commit();
    return result;
}

std::vector<RunKey> Logstore::runs() {
    std::vector<RunKey> out;
    for (const auto& row : db_.query(
             "SELECT DISTINCT projid, tstamp, filename FROM logs ORDER BY tstamp"))
        out.push_back({row.as_text(0), row.as_text(1), row.as_text(2)});
    return out;
}

static LogRow to_log_row(const DbRow& row) {
    LogRow out;
    out.run = {row.as_text(0), row.as_text(1), row.as_text(2)};
    out.ctx_id = row.opt_int(3);
    out.value_name = row.as_text(4);
    out.value = row.as_text(5);
    out.value_type = static_cast<int>(row.as_int(6));
    return out;
}

std::vector<LogRow> Logstore::logs_for_name(const std::string& value_name) {
    std::vector<LogRow> out;
    for (const auto& row : db_.query(
             "SELECT projid, tstamp, filename, ctx_id, value_name, value, value_type"
             " FROM logs WHERE value_name = ? ORDER BY rowid",
             {value_name}))
        out.push_back(to_log_row(row));
    return out;
}

std::vector<LogRow> Logstore::logs_for_run(const RunKey& run) {
    std::vector<LogRow> out;
    for (const auto& row : db_.query(
             "SELECT projid, tstamp, filename, ctx_id, value_name, value, value_type"
             " FROM logs WHERE projid = ? AND tstamp = ? ORDER BY rowid",
             {run.projid, run.tstamp}))
        out.push_back(to_log_row(row));
    return out;
}

static LoopRow to_loop_row(const DbRow& row) {
    LoopRow out;
    out.ctx_id = row.as_int(0);
    out.parent_ctx_id = row.opt_int(1);
    out.loop_name = row.as_text(2);
    out.loop_entries = row.as_int(3);
    out.loop_iteration = row.as_int(4);
    out.run = {row.as_text(5), row.as_text(6), row.as_text(7)};
    return out;
}

std::map<long long, LoopRow> Logstore::loops_by_ctx() {
    std::map<long long, LoopRow> out;
    for (const auto& row : db_.query(
             "SELECT ctx_id, parent_ctx_id, loop_name, loop_entries, loop_iteration,"
             " projid, tstamp, filename FROM loops")) {
        auto lr = to_loop_row(row);
        out.emplace(lr.ctx_id, std::move(lr));
    }
    return out;
}

std::vector<LoopRow> Logstore::loops_for_run(const RunKey& run) {
    std::vector<LoopRow> out;
    for (const auto& row : db_.query(
             "SELECT ctx_id, parent_ctx_id, loop_name, loop_entries, loop_iteration,"
             " projid, tstamp, filename FROM loops WHERE projid = ? AND tstamp = ?"
             " ORDER BY ctx_id",
             {run.projid, run.tstamp}))
        out.push_back(to_loop_row(row));
    return out;
}

std::map<std::string, std::string> Logstore::hyperparams_for_run(const RunKey& run) {
    std::map<std::string, std::string> out;
    for (const auto& row : db_.query(
             "SELECT value_name, value FROM logs WHERE projid = ? AND tstamp = ?"
             " AND value_type = ? ORDER BY rowid",
             {run.projid, run.tstamp, static_cast<long long>(kVtHyperparam)}))
        out.emplace(row.as_text(0), row.as_text(1));
    return out;
}

bool Logstore::has_value(const RunKey& run, const std::string& value_name) {
    return !db_.query(
                "SELECT 1 FROM logs WHERE projid = ? AND tstamp = ? AND value_name = ? LIMIT 1",
                {run.projid, run.tstamp, value_name})
                .empty();
}

std::set<std::string> Logstore::known_value_names() {
    std::set<std::string> out;
    for (const auto& row : db_.query("SELECT DISTINCT value_name FROM logs"))
        out.insert(row.as_text(0));
    return out;
}

std::set<std::string> Logstore::known_loop_names() {
    std::set<std::string> out;
    for (const auto& row : db_.query("SELECT DISTINCT loop_name FROM loops"))
        out.insert(row.as_text(0));
    return out;
}

long long Logstore::count_logs(const RunKey& run) {
    auto rows = db_.query("SELECT COUNT(*) FROM logs WHERE projid = ? AND tstamp = ?",
                          {run.projid, run.tstamp});
    return rows[0].as_int(0);
}

long long Logstore::count_loops(const RunKey& run) {
    auto rows = db_.query("SELECT COUNT(*) FROM loops WHERE projid = ? AND tstamp = ?",
                          {run.projid, run.tstamp});
    return rows[0].as_int(0);
}

}  // namespace flor
