#pragma once

#include "flor/ckptstore.hpp"
#include "flor/instrument.hpp"
#include "flor/logstore.hpp"
#include "flor/project.hpp"
#include "flor/vcs.hpp"

#include <map>
#include <string>
#include <vector>

namespace flor {

struct ReplayQuery {
    std::vector<std::string> vars;
    std::string where_clause;
};

// Segment timings recorded by the original run, queried from the store.
struct RunProfile {
    double t_prefix = -1;
    double t_suffix = -1;
    std::string outer_loop;
    long long outer_entries = 0;
    std::map<long long, double> outer_iter;   // outer iteration -> seconds
    std::map<long long, double> validation;   // outer iteration -> seconds outside nested loops
    double ckpt_save_mean = -1;
    double ckpt_load_mean = -1;  // measured by prior replays, if any
};

RunProfile load_profile(Logstore& store, const RunKey& run);

// Static analysis of the script: the minimal scan level whose executed
// region covers every target log call. Multiple vars take the deepest.
ScanSpec classify_scan(const std::string& source, const std::vector<std::string>& vars);
std::map<std::string, ScanLevel> classify_levels(const std::string& source,
                                                 const std::vector<std::string>& vars);

// One-shot IO micro-benchmark scaling checkpoint-load estimates; cached
// under .flor/. Returns read-vs-write factor.
double calibration_factor(const Project& project);

double estimate_seconds(const RunProfile& profile, const ScanSpec& scan,
                        const std::vector<long long>& ckpt_iters, double calib_factor);

struct PlanTask {
    std::string vid;
    std::string projid;  // as recorded; survives project-directory renames
    std::string tstamp;
    std::string filename;
    ScanSpec scan;
    double estimate = 0;
    std::string source;  // propagated source to execute
    std::vector<std::string> producible_vars;
    std::vector<std::string> notes;
};

struct ReplayPlan {
    std::vector<std::string> vars;
    std::vector<PlanTask> tasks;
    std::vector<std::string> notices;  // skipped/excluded versions
    bool confirmed = false;

    double total_serial() const;
    double total_parallel(int n) const;
};

ReplayPlan plan_replay(const Project& project, Logstore& store, ShadowRepo& repo,
                       CkptStore& ckpts, const ReplayQuery& query);

// One line per task: vid[:8]  tstamp  scan  est_s, then totals.
std::string render_plan(const ReplayPlan& plan, int workers);

}  // namespace flor
