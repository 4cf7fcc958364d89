#include "flor/executor.hpp"

#include "flor/error.hpp"
#include "flor/logfile.hpp"
#include "flor/subprocess.hpp"
#include "flor/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include <unistd.h>

namespace flor {

namespace fs = std::filesystem;

std::string flor_binary() {
    if (const char* env = std::getenv("FLOR_BIN"); env && *env) return env;
    char buf[4096];
    ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) fail("cannot resolve the flor binary; set FLOR_BIN");
    buf[n] = '\0';
    // only the flor binary itself may self-resolve; anything else respawning
    // itself as a replay worker would recurse
    std::string path(buf);
    auto slash = path.rfind('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    if (base != "flor") fail("set FLOR_BIN to the flor binary (running inside " + base + ")");
    return path;
}

ScanRun run_scan(const Project& project, ShadowRepo& repo, const ReplayInvocation& inv,
                 const std::string& flor_bin) {
    fs::path ws = repo.restore(inv.vid, project.ws_dir());
    struct Cleanup {
        fs::path ws;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(ws, ec);
        }
    } cleanup{ws};

    util::write_file(ws / inv.filename, inv.source);
    fs::path out = ws / "flor_replay.json";

    std::vector<std::string> argv{flor_bin.empty() ? flor_binary() : flor_bin, "run",
                                  inv.filename, "--replay_flor", inv.scan.str()};
    if (!inv.kwargs.empty()) {
        argv.push_back("--kwargs");
        for (const auto& [k, v] : inv.kwargs) argv.push_back(k + "=" + v);
    }
    std::map<std::string, std::string> env{
        {"FLOR_PROJECT", project.root.string()},
        {"FLOR_REPLAY_TSTAMP", inv.tstamp},
        {"FLOR_REPLAY_OUT", out.string()},
    };
    if (!inv.projid.empty()) env["FLOR_REPLAY_PROJID"] = inv.projid;
    auto res = util::run_process(argv, ws, env);
    if (res.exit_code != 0) {
        std::string err = util::trim(res.err);
        if (err.size() > 500) err = "..." + err.substr(err.size() - 500);
        fail("replay subprocess exited with " + std::to_string(res.exit_code) +
             (err.empty() ? "" : ": " + err));
    }
    ScanRun run;
    run.log = read_logfile(out);
    run.seconds = res.seconds;
    return run;
}

bool ExecReport::all_done() const {
    for (const auto& t : tasks)
        if (t.status != "done") return false;
    return true;
}

std::string ExecReport::render() const {
    std::string out;
    char buf[200];
    for (const auto& t : tasks) {
        double err_pct = t.actual > 0 ? std::fabs(t.actual - t.estimate) / t.actual * 100.0 : 0.0;
        std::snprintf(buf, sizeof(buf), "%-8s %-12s %-6s %8.2fs %8.2fs %6.1f%%\n",
                      t.vid.substr(0, 8).c_str(), t.scan.c_str(), t.status.c_str(), t.actual,
                      t.estimate, err_pct);
        out += buf;
        if (!t.error.empty()) out += "         " + t.error + "\n";
    }
    for (const auto& n : notes) out += "  -- " + n + "\n";
    return out;
}

ExecReport execute_plan(const Project& project, Logstore& store, ShadowRepo& repo,
                        CkptStore& ckpts, const ReplayPlan& plan, const ExecOptions& opts) {
    if (!plan.confirmed) fail("plan is not confirmed");
    ExecReport report;
    report.notes = plan.notices;
    report.tasks.resize(plan.tasks.size());

    std::string flor_bin = opts.flor_bin.empty() ? flor_binary() : opts.flor_bin;
    int workers = std::max(1, opts.workers);
    // spare capacity lets a single Range task fan out into partitions
    int parts_per_task =
        std::max(1, workers / std::max(1, static_cast<int>(plan.tasks.size())));

    std::mutex queue_mutex, backfill_mutex;
    size_t next_task = 0;

    auto run_one = [&](size_t idx) {
        const PlanTask& task = plan.tasks[idx];
        TaskReport& tr = report.tasks[idx];
        tr.vid = task.vid;
        tr.tstamp = task.tstamp;
        tr.scan = task.scan.str();
        tr.estimate = task.estimate;
        double t0 = util::now_seconds();
        try {
            std::string projid = task.projid.empty() ? project.projid() : task.projid;
            RunKey run{projid, task.tstamp, task.filename};
            auto kwargs = store.hyperparams_for_run(run);
            std::set<std::string> targets(task.producible_vars.begin(),
                                          task.producible_vars.end());

            long long hi_resolved = task.scan.hi;
            std::vector<SubRange> subs;
            if (task.scan.level == ScanLevel::Range && parts_per_task > 1) {
                RunProfile profile = load_profile(store, run);
                if (hi_resolved < 0) hi_resolved = profile.outer_entries;
                std::vector<long long> ckpt_iters;
                for (const auto& [iter, e] : ckpts.by_iteration(run.projid, run.tstamp))
                    ckpt_iters.push_back(iter);
                subs = partition_range(task.scan.lo, hi_resolved, parts_per_task, ckpt_iters,
                                       profile.outer_iter);
            }

            if (subs.size() > 1) {
                // workers re-derive the same segmentation from (lo, hi, n);
                // n must be the requested count, not the clamped one
                int n = static_cast<int>(subs.size());
                std::vector<ScanRun> runs(subs.size());
                std::vector<std::string> errors(subs.size());
                std::vector<std::thread> threads;
                for (int i = 0; i < n; ++i) {
                    threads.emplace_back([&, i] {
                        try {
                            ReplayInvocation inv{task.vid, projid, task.tstamp,
                                                 task.filename, task.source, task.scan,
                                                 kwargs};
                            inv.scan.lo = task.scan.lo;
                            inv.scan.hi = hi_resolved;
                            inv.scan.part = {i, parts_per_task};
                            runs[static_cast<size_t>(i)] = run_scan(project, repo, inv, flor_bin);
                        } catch (const std::exception& e) {
                            errors[static_cast<size_t>(i)] = e.what();
                        }
                    });
                }
                for (auto& t : threads) t.join();
                for (const auto& e : errors)
                    if (!e.empty()) fail(e);
                std::lock_guard<std::mutex> lock(backfill_mutex);
                for (int i = 0; i < n; ++i) {
                    bool is_final = subs[static_cast<size_t>(i)].hi == hi_resolved;
                    auto res = store.backfill(runs[static_cast<size_t>(i)].log, targets,
                                              /*keep_toplevel=*/is_final);
                    tr.inserted += res.inserted;
                }
            } else {
                ReplayInvocation inv{task.vid, projid, task.tstamp, task.filename,
                                     task.source, task.scan, kwargs};
                auto run_result = run_scan(project, repo, inv, flor_bin);
                std::lock_guard<std::mutex> lock(backfill_mutex);
                auto res = store.backfill(run_result.log, targets, /*keep_toplevel=*/true);
                tr.inserted = res.inserted;
            }
            tr.status = "done";
        } catch (const std::exception& e) {
            tr.status = "failed";
            tr.error = e.what();
        }
        tr.actual = util::now_seconds() - t0;
    };

    auto worker_loop = [&] {
        for (;;) {
            size_t idx;
            {
                std::lock_guard<std::mutex> lock(queue_mutex);
                if (next_task >= plan.tasks.size()) return;
                idx = next_task++;
            }
            run_one(idx);
        }
    };

    int pool = std::min<int>(workers, static_cast<int>(plan.tasks.size()));
    if (pool <= 1) {
        worker_loop();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < pool; ++i) threads.emplace_back(worker_loop);
        for (auto& t : threads) t.join();
    }
    return report;
}

}  // namespace flor
