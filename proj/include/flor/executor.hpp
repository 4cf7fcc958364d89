#pragma once

#include "flor/ckptstore.hpp"
#include "flor/logstore.hpp"
#include "flor/partition.hpp"
#include "flor/planner.hpp"
#include "flor/project.hpp"
#include "flor/record.hpp"
#include "flor/vcs.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flor {

// Path of the replay interpreter binary: FLOR_BIN, else this executable.
std::string flor_binary();

struct ReplayInvocation {
    std::string vid;
    std::string projid;    // original run's projid (empty: use the project's)
    std::string tstamp;    // original run
    std::string filename;
    std::string source;    // propagated source to execute
    ScanSpec scan;
    std::map<std::string, std::string> kwargs;  // original logged args
};

struct ScanRun {
    RunLog log;
    double seconds = 0;
};

// Restore the version into a disposable workspace, write the propagated
// source, launch `flor run <script> --kwargs ... --replay_flor SCANSPEC`
// and collect the replay logfile.
ScanRun run_scan(const Project& project, ShadowRepo& repo, const ReplayInvocation& inv,
                 const std::string& flor_bin = {});

struct TaskReport {
    std::string vid;
    std::string tstamp;
    std::string scan;
    std::string status = "pending";  // done | failed
    double actual = 0;
    double estimate = 0;
    long long inserted = 0;
    std::string error;
};

struct ExecReport {
    std::vector<TaskReport> tasks;
    std::vector<std::string> notes;

    bool all_done() const;
    std::string render() const;  // vid[:8] scan status actual_s est_s err%
};

struct ExecOptions {
    int workers = 1;
    std::string flor_bin;  // optional override
};

// Runs a confirmed plan: version-level tasks across a bounded process pool;
// a Range task splits into checkpoint-aligned partitions when idle capacity
// allows. Failures are isolated per task; backfill is serialized.
ExecReport execute_plan(const Project& project, Logstore& store, ShadowRepo& repo,
                        CkptStore& ckpts, const ReplayPlan& plan, const ExecOptions& opts);

}  // namespace flor
