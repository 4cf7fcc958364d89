#pragma once

#include "flor/instrument.hpp"
#include "flor/interp.hpp"
#include "flor/logstore.hpp"
#include "flor/project.hpp"
#include "flor/util.hpp"

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;

struct TempProject {
    flor::Project project;

    TempProject() : project(flor::Project::init(flor::util::make_temp_dir("flortest"))) {}
    ~TempProject() {
        std::error_code ec;
        fs::remove_all(project.root, ec);
    }
    TempProject(const TempProject&) = delete;
    TempProject& operator=(const TempProject&) = delete;

    void write_script(const std::string& name, const std::string& source) {
        flor::util::write_file(project.root / name, source);
    }
};

// Record a script in-process; returns the run's tstamp.
inline std::string record_run(const flor::Project& project, const std::string& filename,
                              const std::string& source,
                              const std::map<std::string, std::string>& kwargs = {}) {
    flor::ExecMode mode;
    mode.kwargs = kwargs;
    flor::RunContext run(project, filename, mode);
    try {
        flor::run_script(run, source);
    } catch (...) {
        run.finalize(false);
        throw;
    }
    run.finalize(true);
    return run.header().tstamp;
}

// Normalized (value_name, structural chain, value) facts for one variable.
inline std::multiset<std::string> facts_for(flor::Logstore& store, const flor::RunKey& run,
                                            const std::string& name) {
    std::multiset<std::string> out;
    auto loops = store.loops_by_ctx();
    for (const auto& row : store.logs_for_run(run)) {
        if (row.value_name != name) continue;
        std::string chain;
        std::optional<long long> ctx = row.ctx_id;
        std::vector<std::string> parts;
        while (ctx) {
            const auto& l = loops.at(*ctx);
            parts.push_back(l.loop_name + ":" + std::to_string(l.loop_iteration));
            ctx = l.parent_ctx_id;
        }
        for (auto it = parts.rbegin(); it != parts.rend(); ++it) chain += *it + "/";
        out.insert(name + "|" + chain + "|" + row.value);
    }
    return out;
}

inline flor::RunKey only_run(flor::Logstore& store) {
    auto runs = store.runs();
    if (runs.size() != 1) throw std::runtime_error("expected exactly one run");
    return runs[0];
}

// The standard 5x50 training fixture. The per-epoch work segment keeps
// iterations well above the checkpoint-cost threshold, so the adaptive
// policy serializes at every epoch boundary.
inline std::string base_fixture() {
    return R"(lr = arg("lr", 0.01)
seed = arg("seed", 7)
epochs = arg("epochs", 5)
steps = arg("steps", 50)
r = rng(seed)
model = 0.0
log("prep_note", "ready")
with checkpointing(model, r):
    for e in loop("epoch", range(epochs)):
        for s in loop("step", range(steps)):
            g = next(r) - 0.5
            model = model - lr * g
            log("loss", model)
        work(0.05)
        log("val_acc", 1.0 - abs(model))
log("f1_score", 1.0 / (1.0 + abs(model)))
)";
}

// Same fixture with counter marks at every scan position.
inline std::string marked_fixture() {
    return R"(lr = arg("lr", 0.01)
seed = arg("seed", 7)
epochs = arg("epochs", 5)
steps = arg("steps", 50)
r = rng(seed)
model = 0.0
log("prefix_mark", 1)
with checkpointing(model, r):
    for e in loop("epoch", range(epochs)):
        for s in loop("step", range(steps)):
            g = next(r) - 0.5
            model = model - lr * g
            log("nested_mark", s)
        work(0.05)
        log("val_mark", e)
log("post_mark", 1)
)";
}

inline long long count_records(const flor::RunLog& log, const std::string& name) {
    long long n = 0;
    for (const auto& rec : log.records)
        if (rec.value_name == name) ++n;
    return n;
}

}  // namespace testutil
