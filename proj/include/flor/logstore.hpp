#pragma once

#include "flor/db.hpp"
#include "flor/record.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace flor {

struct RunKey {
    std::string projid;
    std::string tstamp;
    std::string filename;

    bool operator==(const RunKey&) const = default;
    auto operator<=>(const RunKey&) const = default;
};

struct LoopRow {
    long long ctx_id = 0;
    std::optional<long long> parent_ctx_id;
    std::string loop_name;
    long long loop_entries = 0;
    long long loop_iteration = 0;
    RunKey run;
};

struct LogRow {
    RunKey run;
    std::optional<long long> ctx_id;
    std::string value_name;
    std::string value;
    int value_type = kVtMetric;
};

struct UnpackCounts {
    long long logs = 0;
    long long loops = 0;
    bool skipped = false;  // duplicate run, no-op
};

struct BackfillResult {
    long long inserted = 0;
    std::vector<std::string> notes;
};

// Normalized relational store over the run logfiles: `logs` and `loops`.
class Logstore {
public:
    explicit Logstore(const std::filesystem::path& db_file);

    bool has_run(const std::string& projid, const std::string& tstamp);
    std::optional<std::string> max_tstamp();

    // Transactional: all rows or none. Duplicate run -> no-op with skipped flag.
    UnpackCounts unpack(const RunLog& run);
    UnpackCounts unpack_file(const std::filesystem::path& logfile);

    // Inserts only records whose value_name is in targets, attributed to the
    // original run. Existing cells are never modified; equal re-emissions are
    // skipped, unequal ones raise (nondeterminism), except in the reserved
    // profile namespace where the first measurement wins.
    // keep_toplevel=false drops records with an empty ctx chain (partitioned
    // range replay, non-final partition).
    BackfillResult backfill(const RunLog& replay, const std::set<std::string>& targets,
                            bool keep_toplevel = true);

    std::vector<RunKey> runs();  // ordered by tstamp
    std::vector<LogRow> logs_for_name(const std::string& value_name);
    std::vector<LogRow> logs_for_run(const RunKey& run);
    std::map<long long, LoopRow> loops_by_ctx();
    std::vector<LoopRow> loops_for_run(const RunKey& run);
    std::map<std::string, std::string> hyperparams_for_run(const RunKey& run);
    bool has_value(const RunKey& run, const std::string& value_name);
    std::set<std::string> known_value_names();
    std::set<std::string> known_loop_names();
    long long count_logs(const RunKey& run);
    long long count_loops(const RunKey& run);

    Db& db() { return db_; }

private:
    Db db_;
    void ensure_schema();
};

}  // namespace flor
