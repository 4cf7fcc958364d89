// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.

#include "flor/ckptstore.hpp"
#include "flor/error.hpp"
#include "flor/executor.hpp"
#include "flor/instrument.hpp"
#include "flor/interp.hpp"
#include "flor/logfile.hpp"
#include "flor/logstore.hpp"
#include "flor/planner.hpp"
#include "flor/propagate.hpp"
#include "flor/subprocess.hpp"
#include "flor/util.hpp"
#include "flor/views.hpp"

#include "../corpus.hpp"
#include "../helpers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace flor;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define ACHECK(cond, msg)                                                       \
    do {                                                                        \
        if (!(cond)) {                                                          \
            std::ostringstream oss_;                                            \
            oss_ << msg;                                                        \
            throw CheckFailure(oss_.str());                                     \
        }                                                                       \
    } while (0)

std::string flor_bin() {
    const char* env = std::getenv("FLOR_BIN");
    if (!env || !*env) throw CheckFailure("FLOR_BIN must point at the flor binary");
    return env;
}

int run_flor(const std::vector<std::string>& args, const fs::path& cwd, std::string* out = nullptr) {
    std::vector<std::string> argv{flor_bin()};
    argv.insert(argv.end(), args.begin(), args.end());
    auto res = util::run_process(argv, cwd);
    if (out) *out = res.out;
    if (res.exit_code != 0 && out) *out += "\n[stderr] " + res.err;
    return res.exit_code;
}

std::string insert_after(const std::string& src, const std::string& needle,
                         const std::string& new_line) {
    auto lines = util::split(src, '\n');
    std::vector<std::string> out;
    for (const auto& l : lines) {
        out.push_back(l);
        if (l.find(needle) != std::string::npos) out.push_back(new_line);
    }
    return util::join(out, "\n");
}

// in-process plan + execute against a project
ExecReport replay_inproc(const Project& project, const std::vector<std::string>& vars,
                         const std::string& where, int workers) {
    Logstore store(project.db_path());
    ShadowRepo repo(project.root);
    auto ckpts = CkptStore::local(project.obj_dir());
    ReplayPlan plan = plan_replay(project, store, repo, ckpts, {vars, where});
    plan.confirmed = true;
    ExecOptions opts;
    opts.workers = workers;
    return execute_plan(project, store, repo, ckpts, plan, opts);
}

std::multiset<std::string> log_facts(const RunLog& log, const std::string& name) {
    std::multiset<std::string> out;
    for (const auto& r : log.records) {
        if (r.value_name != name) continue;
        std::string chain;
        for (const auto& f : r.ctx)
            chain += f.loop_name + ":" + std::to_string(f.loop_iteration) + "/";
        out.insert(name + "|" + chain + "|" + r.value);
    }
    return out;
}

// --- criterion 1 -------------------------------------------------------------

void criterion1() {
    double t0 = util::now_seconds();
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::base_fixture());
    std::string out;
    int rc = run_flor({"run", "train.flr", "--kwargs", "seed=81", "lr=0.001"}, tp.project.root,
                      &out);
    ACHECK(rc == 0, "record run failed: " << out);

    Logstore store(tp.project.db_path());
    auto run = testutil::only_run(store);
    auto loss_rows = store.logs_for_name("loss");
    ACHECK(loss_rows.size() == 250, "expected 250 loss rows, got " << loss_rows.size());

    long long epoch_rows = 0, step_rows = 0;
    for (const auto& l : store.loops_for_run(run)) {
        if (l.loop_name == "epoch") ++epoch_rows;
        if (l.loop_name == "step") ++step_rows;
    }
    ACHECK(epoch_rows == 5, "expected 5 epoch loops rows, got " << epoch_rows);
    ACHECK(step_rows == 250, "expected 250 step loops rows, got " << step_rows);

    Table view = dataframe(store, {"loss"});
    ACHECK(view.rows.size() == 250, "dataframe(loss) has " << view.rows.size() << " rows");
    std::vector<std::string> want{"projid", "tstamp", "filename", "epoch", "step", "loss"};
    ACHECK(view.cols == want, "dataframe(loss) columns are " << util::join(view.cols, ","));

    double elapsed = util::now_seconds() - t0;
    ACHECK(elapsed < 10.0, "record integrity took " << elapsed << "s (budget 10s)");
}

// --- criterion 2 -------------------------------------------------------------

void criterion2() {
    double t0 = util::now_seconds();
    struct Position {
        const char* var;
        const char* needle;
        std::string line;
    };
    const std::vector<Position> positions{
        {"b_pre", "prep_note", "log(\"b_pre\", lr * 2.0)"},
        {"b_suf", "f1_score", "log(\"b_suf\", model * 3.0)"},
        {"b_val", "val_acc", "        log(\"b_val\", abs(model))"},
        {"b_step", "log(\"loss\"", "            log(\"b_step\", model + 1.0)"},
    };
    const std::map<std::string, std::string> kwargs{{"seed", "81"}, {"lr", "0.001"}};

    for (const auto& pos : positions) {
        // record with statement set A only
        testutil::TempProject tp;
        tp.write_script("train.flr", testutil::base_fixture());
        auto tstamp = testutil::record_run(tp.project, "train.flr", testutil::base_fixture(),
                                           kwargs);
        // hindsight: add statement b and replay-backfill it
        std::string src_y = insert_after(testutil::base_fixture(), pos.needle, pos.line);
        tp.write_script("train.flr", src_y);
        auto report = replay_inproc(tp.project, {pos.var}, "", 1);
        ACHECK(report.all_done(), pos.var << ": replay failed: " << report.render());

        // oracle: a fresh record with the statement present from the start
        testutil::TempProject oracle;
        oracle.write_script("train.flr", src_y);
        auto oracle_tstamp = testutil::record_run(oracle.project, "train.flr", src_y, kwargs);

        Logstore store(tp.project.db_path());
        Logstore oracle_store(oracle.project.db_path());
        auto got = testutil::facts_for(store, {tp.project.projid(), tstamp, "train.flr"}, pos.var);
        auto want = testutil::facts_for(
            oracle_store, {oracle.project.projid(), oracle_tstamp, "train.flr"}, pos.var);
        ACHECK(!want.empty(), pos.var << ": oracle produced no facts");
        ACHECK(got == want, pos.var << ": backfilled facts differ from the oracle re-record ("
                                    << got.size() << " vs " << want.size() << " facts)");
    }
    double elapsed = util::now_seconds() - t0;
    ACHECK(elapsed < 60.0, "hindsight equivalence took " << elapsed << "s (budget 60s)");
}

// --- criterion 3 -------------------------------------------------------------

std::string c3_baseline() {
    auto src = testutil::base_fixture();
    // validation block with a local temp, so renames have something to rename
    src = insert_after(src, "work(0.05)", "        acc = 1.0 - abs(model)");
    auto lines = util::split(src, '\n');
    std::vector<std::string> out;
    for (auto& l : lines) {
        if (l.find("log(\"val_acc\"") != std::string::npos)
            out.push_back("        log(\"val_acc\", acc)");
        else
            out.push_back(l);
    }
    return util::join(out, "\n");
}

void criterion3() {
    std::string v1 = c3_baseline();
    std::string v2 = testutil::corpus_detail::rename_ident(v1, "acc", "accuracy");
    std::string v3 = insert_after(insert_after(v2, "model = 0.0", "offset = 0.0"), "model = 0.0",
                                  "norm = 1.0");
    const std::string new_stmt = "f1x = 1.0 / (2.0 + abs(model))\nlog(\"f1_extra\", f1x)\n";

    testutil::TempProject tp;
    std::vector<std::string> sources{v1, v2, v3};
    std::vector<std::string> tstamps;
    for (size_t i = 0; i < sources.size(); ++i) {
        tp.write_script("train.flr", sources[i]);
        tstamps.push_back(testutil::record_run(tp.project, "train.flr", sources[i],
                                               {{"seed", std::to_string(101 + i)}}));
    }
    tp.write_script("train.flr", v3 + new_stmt);

    std::string out;
    int rc = run_flor({"replay", "f1_extra", "", "--yes"}, tp.project.root, &out);
    ACHECK(rc == 0, "replay CLI failed: " << out);

    Logstore store(tp.project.db_path());
    for (size_t i = 0; i < sources.size(); ++i) {
        testutil::TempProject oracle;
        std::string src = sources[i] + new_stmt;
        oracle.write_script("train.flr", src);
        auto ot = testutil::record_run(oracle.project, "train.flr", src,
                                       {{"seed", std::to_string(101 + i)}});
        Logstore ostore(oracle.project.db_path());
        auto got =
            testutil::facts_for(store, {tp.project.projid(), tstamps[i], "train.flr"}, "f1_extra");
        auto want =
            testutil::facts_for(ostore, {oracle.project.projid(), ot, "train.flr"}, "f1_extra");
        ACHECK(!want.empty(), "oracle v" << i + 1 << " has no f1_extra");
        ACHECK(got == want, "backfilled f1_extra differs from oracle for version " << i + 1);
    }

    // propagation corpus: rename/insert/refactor mutations, oracle-marked blocks
    std::string base = testutil::base_fixture();
    std::string src_y = insert_after(base + "f1x = 1.0 / (2.0 + abs(model))\nlog(\"f1_extra\", f1x)\n",
                                     "val_acc", "        log(\"v_new\", abs(model) * 2.0)");
    auto corpus = testutil::make_mutation_corpus(base, 60, 20260808);
    int total = 0, correct = 0;
    for (const auto& c : corpus) {
        auto res = propagate_source(c.srcX, src_y, {"f1_extra", "v_new"});
        for (const auto& u : res.units) {
            ++total;
            if (!u.applied) continue;  // reported, not silent
            std::string expected = u.var == "f1_extra" ? "module" : "module>with>for[epoch]";
            ACHECK(u.landing_block == expected, "silent misplacement (" << c.description << "): "
                                                    << u.var << " -> " << u.landing_block);
            ++correct;
        }
    }
    double accuracy = static_cast<double>(correct) / static_cast<double>(total);
    ACHECK(accuracy >= 0.95,
           "corpus block accuracy " << accuracy << " over " << total << " placements");
}

// --- criterion 4 -------------------------------------------------------------

void criterion4() {
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::marked_fixture());
    auto tstamp = testutil::record_run(tp.project, "train.flr", testutil::marked_fixture(),
                                       {{"seed", "81"}});
    Logstore store(tp.project.db_path());
    ShadowRepo repo(tp.project.root);

    auto scan_counts = [&](const std::string& scanspec) {
        ReplayInvocation inv;
        inv.vid = repo.lookup(tstamp);
        inv.tstamp = tstamp;
        inv.filename = "train.flr";
        inv.source = testutil::marked_fixture();
        inv.scan = ScanSpec::parse(scanspec);
        inv.kwargs = store.hyperparams_for_run({tp.project.projid(), tstamp, "train.flr"});
        return run_scan(tp.project, repo, inv).log;
    };

    auto suffix = scan_counts("suffix");
    ACHECK(testutil::count_records(suffix, "nested_mark") == 0,
           "suffix scan executed the nested body");
    ACHECK(testutil::count_records(suffix, "post_mark") == 1,
           "suffix scan must run post-loop statements exactly once");

    auto validation = scan_counts("validation");
    ACHECK(testutil::count_records(validation, "val_mark") == 5,
           "validation scan executed the validation body "
               << testutil::count_records(validation, "val_mark") << " times (want 5)");
    ACHECK(testutil::count_records(validation, "nested_mark") == 0,
           "validation scan executed the nested body");

    auto range = scan_counts("range:3:5");
    ACHECK(testutil::count_records(range, "nested_mark") == 100,
           "range [3,5) executed the nested body "
               << testutil::count_records(range, "nested_mark") << " times (want 2 x 50)");
}

// --- criterion 5 -------------------------------------------------------------

std::string busy_fixture() {
    return R"(lr = arg("lr", 0.01)
seed = arg("seed", 7)
r = rng(seed)
model = 0.0
work(1.0)
with checkpointing(model, r):
    for e in loop("epoch", range(5)):
        for s in loop("step", range(10)):
            model = model - lr * (next(r) - 0.5)
            work(0.06)
        work(0.5)
        log("val_acc", 1.0 - abs(model))
work(1.0)
log("f1_score", 1.0 / (1.0 + abs(model)))
)";
}

void criterion5() {
    double t0 = util::now_seconds();
    testutil::TempProject tp;
    tp.write_script("train.flr", busy_fixture());
    std::vector<std::string> tstamps;
    for (int i = 0; i < 5; ++i)
        tstamps.push_back(testutil::record_run(tp.project, "train.flr", busy_fixture(),
                                               {{"seed", std::to_string(300 + i)}}));
    Logstore store(tp.project.db_path());
    ShadowRepo repo(tp.project.root);
    auto ckpts = CkptStore::local(tp.project.obj_dir());
    double calib = calibration_factor(tp.project);

    std::vector<double> errors;
    for (const auto& tstamp : tstamps) {
        RunKey run{tp.project.projid(), tstamp, "train.flr"};
        RunProfile profile = load_profile(store, run);
        std::vector<long long> ckpt_iters;
        for (const auto& [iter, e] : ckpts.by_iteration(run.projid, run.tstamp))
            ckpt_iters.push_back(iter);
        for (const char* scanspec : {"prefix", "suffix", "validation"}) {
            ScanSpec spec = ScanSpec::parse(scanspec);
            double est = estimate_seconds(profile, spec, ckpt_iters, calib);
            ReplayInvocation inv;
            inv.vid = repo.lookup(tstamp);
            inv.tstamp = tstamp;
            inv.filename = "train.flr";
            inv.source = busy_fixture();
            inv.scan = spec;
            inv.kwargs = store.hyperparams_for_run(run);
            double actual = run_scan(tp.project, repo, inv).seconds;
            double err = std::fabs(est - actual) / actual;
            errors.push_back(err);
            std::printf("    %-10s %s est %6.2fs actual %6.2fs err %5.1f%%\n", scanspec,
                        tstamp.c_str(), est, actual, err * 100);
        }
    }
    std::sort(errors.begin(), errors.end());
    double median = errors[errors.size() / 2];
    double max_err = errors.back();
    ACHECK(median <= 0.10, "median relative error " << median << " exceeds 10%");
    ACHECK(max_err <= 0.20, "max relative error " << max_err << " exceeds 20%");
    double elapsed = util::now_seconds() - t0;
    ACHECK(elapsed < 300.0, "cost-estimate criterion took " << elapsed << "s (budget 5min)");
}

// --- criterion 6 -------------------------------------------------------------

void criterion6() {
    std::string src = R"(lr = arg("lr", 0.01)
seed = arg("seed", 7)
r = rng(seed)
model = 0.0
with checkpointing(model, r):
    for e in loop("epoch", range(10)):
        for s in loop("step", range(10)):
            g = next(r) - 0.5
            model = model - lr * g
            log("loss", model)
        work(0.05)
        log("val_acc", 1.0 - abs(model))
log("f1_score", 1.0 / (1.0 + abs(model)))
)";
    testutil::TempProject tp;
    tp.write_script("train.flr", src);
    auto tstamp = testutil::record_run(tp.project, "train.flr", src, {{"seed", "81"}});

    std::string src_y = insert_after(src, "log(\"loss\"", "            log(\"b_step\", model + g)");

    auto run_with_workers = [&](int workers) {
        auto clone_root = util::make_temp_dir("florclone");
        fs::remove_all(clone_root);
        util::copy_tree(tp.project.root, clone_root);
        Project clone{clone_root};
        util::write_file(clone_root / "train.flr", src_y);
        auto report = replay_inproc(clone, {"b_step"}, "", workers);
        ACHECK(report.all_done(), workers << "-way replay failed: " << report.render());
        Logstore store(clone.db_path());
        auto run = testutil::only_run(store);  // key as recorded, not the clone's basename
        ACHECK(run.tstamp == tstamp, "clone lost the recorded run");
        auto facts = testutil::facts_for(store, run, "b_step");
        fs::remove_all(clone_root);
        return facts;
    };

    auto serial = run_with_workers(1);
    auto two = run_with_workers(2);
    auto four = run_with_workers(4);
    ACHECK(serial.size() == 100, "serial range replay produced " << serial.size() << " facts");
    ACHECK(serial == two, "2-way partitioned facts differ from serial");
    ACHECK(serial == four, "4-way partitioned facts differ from serial");
}

// --- criterion 7 -------------------------------------------------------------

long long brute_force_best_gap(const std::vector<long long>& iters, long long keep) {
    long long n = static_cast<long long>(iters.size());
    long long best = -1;
    std::vector<bool> mask(static_cast<size_t>(n), false);
    std::fill(mask.end() - static_cast<size_t>(keep), mask.end(), true);
    std::sort(mask.begin(), mask.end());
    do {
        if (!mask.back()) continue;
        long long prev = -1, gap = 0;
        for (long long i = 0; i < n; ++i) {
            if (!mask[static_cast<size_t>(i)]) continue;
            gap = std::max(gap, iters[static_cast<size_t>(i)] - prev);
            prev = iters[static_cast<size_t>(i)];
        }
        if (best < 0 || gap < best) best = gap;
    } while (std::next_permutation(mask.begin(), mask.end()));
    return best;
}

void criterion7() {
    std::string src = R"(lr = arg("lr", 0.01)
seed = arg("seed", 7)
r = rng(seed)
model = 0.0
log("prefix_mark", 1)
with checkpointing(model, r):
    for e in loop("epoch", range(10)):
        for s in loop("step", range(20)):
            model = model - lr * (next(r) - 0.5)
            log("nested_mark", s)
        work(0.05)
        log("val_mark", e)
log("post_mark", abs(model))
)";
    testutil::TempProject tp;
    tp.write_script("train.flr", src);
    auto tstamp = testutil::record_run(tp.project, "train.flr", src, {{"seed", "81"}});
    Logstore store(tp.project.db_path());
    ShadowRepo repo(tp.project.root);
    auto ckpts = CkptStore::local(tp.project.obj_dir());

    auto scan_log = [&](const std::string& scanspec) {
        ReplayInvocation inv;
        inv.vid = repo.lookup(tstamp);
        inv.tstamp = tstamp;
        inv.filename = "train.flr";
        inv.source = src;
        inv.scan = ScanSpec::parse(scanspec);
        inv.kwargs = store.hyperparams_for_run({tp.project.projid(), tstamp, "train.flr"});
        return run_scan(tp.project, repo, inv).log;
    };

    auto before = scan_log("suffix");
    auto suffix_value_before = log_facts(before, "post_mark");

    // evict down to two checkpoints: mid-run + final
    std::vector<long long> had;
    for (const auto& [iter, e] : ckpts.by_iteration(tp.project.projid(), tstamp))
        had.push_back(iter);
    ACHECK(had.size() == 10, "expected a checkpoint per epoch, got " << had.size());
    auto retained = ckpts.evict(tp.project.projid(), tstamp, RetentionPolicy{2, false});
    ACHECK((retained == std::vector<long long>{4, 9}),
           "retained " << retained.size() << " checkpoints, want {4, 9}");
    long long oracle_gap = brute_force_best_gap(had, 2);
    long long got_gap = std::max(retained[0] + 1, retained[1] - retained[0]);
    ACHECK(got_gap == oracle_gap, "retained set is not gap-minimal");

    // suffix scan still succeeds with identical values
    auto after = scan_log("suffix");
    ACHECK(log_facts(after, "post_mark") == suffix_value_before,
           "suffix scan changed values after eviction");
    ACHECK(testutil::count_records(after, "nested_mark") == 0,
           "suffix scan re-executed the loop despite the final checkpoint");

    // a range scan over the second half re-executes at most ceil(E/2) epochs
    auto second_half = scan_log("range:5:10");
    ACHECK(testutil::count_records(second_half, "nested_mark") == 5 * 20,
           "range [5,10) executed " << testutil::count_records(second_half, "nested_mark")
                                    << " nested iterations (want 100 = 5 epochs from ckpt 4)");

    // brute-force optimality on random checkpoint sets (<= 20 checkpoints)
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 25; ++trial) {
        std::set<long long> s;
        long long n = 4 + static_cast<long long>(gen() % 17);
        while (static_cast<long long>(s.size()) < n) s.insert(static_cast<long long>(gen() % 50));
        std::vector<long long> iters(s.begin(), s.end());
        long long keep = 2 + static_cast<long long>(gen() % 3);
        if (keep > n) keep = n;
        auto r = retain_evenly(iters, keep);
        long long prev = -1, gap = 0;
        for (long long x : r) {
            gap = std::max(gap, x - prev);
            prev = x;
        }
        ACHECK(gap == brute_force_best_gap(iters, keep),
               "eviction not gap-minimal on a random set");
    }
}

// --- criterion 8 -------------------------------------------------------------

void criterion8() {
    double t0 = util::now_seconds();
    std::string src = R"(seed = arg("seed", 7)
r = rng(seed)
model = 0.0
work(0.15)
log("prep_stat", model)
with checkpointing(model, r):
    for e in loop("epoch", range(2)):
        for s in loop("step", range(2)):
            model = model + next(r)
log("f1_score", model)
)";
    testutil::TempProject tp;
    tp.write_script("train.flr", src);
    std::vector<std::string> tstamps;
    for (int i = 0; i < 32; ++i)
        tstamps.push_back(testutil::record_run(tp.project, "train.flr", src,
                                               {{"seed", std::to_string(i)}}));

    // the added statements are prefix-position: before the loop
    std::string src_y;
    {
        auto lines = util::split(src, '\n');
        std::vector<std::string> out;
        for (const auto& l : lines) {
            out.push_back(l);
            if (l.find("prep_stat") != std::string::npos)
                for (int n : {4, 8, 16, 32})
                    out.push_back("log(\"b" + std::to_string(n) + "\", model + " +
                                  std::to_string(n) + ".0)");
        }
        src_y = util::join(out, "\n");
    }
    tp.write_script("train.flr", src_y);

    std::vector<double> xs, ys;
    for (int n : {4, 8, 16, 32}) {
        std::string var = "b" + std::to_string(n);
        std::string where = "tstamp <= '" + tstamps[static_cast<size_t>(n - 1)] + "'";
        Logstore store(tp.project.db_path());
        ShadowRepo repo(tp.project.root);
        auto ckpts = CkptStore::local(tp.project.obj_dir());
        ReplayPlan plan = plan_replay(tp.project, store, repo, ckpts, {{var}, where});
        ACHECK(static_cast<int>(plan.tasks.size()) == n,
               "expected " << n << " tasks, got " << plan.tasks.size());
        for (const auto& task : plan.tasks)
            ACHECK(task.scan.level == ScanLevel::Prefix, "expected prefix tasks");
        plan.confirmed = true;
        double s0 = util::now_seconds();
        ExecOptions opts;
        opts.workers = 1;
        auto report = execute_plan(tp.project, store, repo, ckpts, plan, opts);
        double wall = util::now_seconds() - s0;
        ACHECK(report.all_done(), "replay over " << n << " versions failed: " << report.render());
        xs.push_back(static_cast<double>(n));
        ys.push_back(wall);
        std::printf("    N=%-3d total %.2fs\n", n, wall);
    }

    // least-squares fit: R^2 of wall time vs version count
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / 4.0;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / 4.0;
    double sxy = 0, sxx = 0, sst = 0;
    for (int i = 0; i < 4; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sst += (ys[i] - my) * (ys[i] - my);
    }
    double slope = sxy / sxx;
    double intercept = my - slope * mx;
    double ssr = 0;
    for (int i = 0; i < 4; ++i) {
        double resid = ys[i] - (slope * xs[i] + intercept);
        ssr += resid * resid;
    }
    double r2 = 1.0 - ssr / sst;
    std::printf("    linear fit: %.3fs/version + %.3fs, R^2 = %.4f\n", slope, intercept, r2);
    ACHECK(r2 >= 0.98, "replay-prefix scaling R^2 = " << r2 << " (want >= 0.98)");
    double elapsed = util::now_seconds() - t0;
    ACHECK(elapsed < 180.0, "linear-scaling criterion took " << elapsed << "s (budget 3min)");
}

// --- criterion 9 -------------------------------------------------------------

void criterion9() {
    testutil::TempProject tp;
    Logstore store(tp.project.db_path());

    auto add_run = [&](const std::string& tstamp, bool with_top_and_epoch) {
        RunLog run;
        run.header = {"p", tstamp, "t.flr", false, "ok", "", ""};
        long long ctx = 0;
        if (with_top_and_epoch) run.records.push_back({"t", "7", kVtMetric, {}});
        int base = with_top_and_epoch ? 0 : 4;
        for (long long e = 0; e < 2; ++e) {
            CtxFrame ef{++ctx, "epoch", 2, e};
            if (with_top_and_epoch)
                run.records.push_back(
                    {"v", e == 0 ? "0.9" : "0.8", kVtMetric, {ef}});
            for (long long s = 0; s < 2; ++s) {
                CtxFrame sf{++ctx, "step", 2, s};
                run.records.push_back({"s", util::format_int(base + e * 2 + s + 1), kVtMetric,
                                       {ef, sf}});
            }
        }
        store.unpack(run);
    };
    add_run("2023-01-01T00:00:00", true);
    add_run("2023-01-02T00:00:00", false);

    Table view = dataframe(store, {"t", "v", "s"});
    std::vector<std::string> want_cols{"projid", "tstamp", "filename", "epoch", "step",
                                       "t",      "v",      "s"};
    ACHECK(view.cols == want_cols, "columns are " << util::join(view.cols, ","));
    ACHECK(view.rows.size() == 8, "expected the 8-row oracle table, got " << view.rows.size());

    using Cell = std::optional<std::string>;
    const Cell N = std::nullopt;
    std::vector<std::vector<Cell>> want{
        {"p", "2023-01-01T00:00:00", "t.flr", "0", "0", "7", "0.9", "1"},
        {"p", "2023-01-01T00:00:00", "t.flr", "0", "1", "7", "0.9", "2"},
        {"p", "2023-01-01T00:00:00", "t.flr", "1", "0", "7", "0.8", "3"},
        {"p", "2023-01-01T00:00:00", "t.flr", "1", "1", "7", "0.8", "4"},
        {"p", "2023-01-02T00:00:00", "t.flr", "0", "0", N, N, "5"},
        {"p", "2023-01-02T00:00:00", "t.flr", "0", "1", N, N, "6"},
        {"p", "2023-01-02T00:00:00", "t.flr", "1", "0", N, N, "7"},
        {"p", "2023-01-02T00:00:00", "t.flr", "1", "1", N, N, "8"},
    };
    for (size_t i = 0; i < 8; ++i)
        for (size_t j = 0; j < want_cols.size(); ++j) {
            const auto& got = view.rows[i][j];
            const auto& exp = want[i][j];
            ACHECK(got == exp, "cell (" << i << "," << view.cols[j] << ") is "
                                        << (got ? *got : "<null>") << ", want "
                                        << (exp ? *exp : "<null>"));
        }
}

struct Criterion {
    int num;
    const char* name;
    std::function<void()> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "record integrity (250 logs, 5+250 loops, pivoted columns, <10s)", criterion1},
        {2, "hindsight equivalence at the four scan positions", criterion2},
        {3, "multiversion propagation with oracle re-records and mutation corpus", criterion3},
        {4, "scan semantics by execution counters", criterion4},
        {5, "cost-estimate accuracy on busy-work fixtures", criterion5},
        {6, "partitioned range replay equals serial replay", criterion6},
        {7, "eviction safety: keep=2, suffix + half-range replay, gap-minimal", criterion7},
        {8, "linear scaling of replay-prefix across versions", criterion8},
        {9, "pivot faithfulness against the hand-computed 8-row table", criterion9},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        double t0 = util::now_seconds();
        try {
            c.fn();
            std::printf("[PASS] criterion %d: %s (%.1fs)\n", c.num, c.name,
                        util::now_seconds() - t0);
        } catch (const std::exception& e) {
            std::printf("[FAIL] criterion %d: %s -- %s\n", c.num, c.name, e.what());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
