#include "flor/cli.hpp"

#include "flor/error.hpp"
#include "flor/executor.hpp"
#include "flor/instrument.hpp"
#include "flor/interp.hpp"
#include "flor/planner.hpp"
#include "flor/project.hpp"
#include "flor/util.hpp"
#include "flor/views.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace flor::cli {

namespace fs = std::filesystem;

namespace {

std::optional<Project> find_project() { return Project::discover(fs::current_path()); }

int fail_usage(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return 2;
}

void print_table(const Table& t) {
    std::vector<size_t> width(t.cols.size());
    for (size_t i = 0; i < t.cols.size(); ++i) width[i] = t.cols[i].size();
    for (const auto& row : t.rows)
        for (size_t i = 0; i < row.size(); ++i)
            if (row[i] && row[i]->size() > width[i]) width[i] = row[i]->size();
    auto pad = [](const std::string& s, size_t w) {
        return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
    };
    std::string header;
    for (size_t i = 0; i < t.cols.size(); ++i) header += pad(t.cols[i], width[i]) + "  ";
    std::cout << header << "\n";
    for (const auto& row : t.rows) {
        std::string line;
        for (size_t i = 0; i < row.size(); ++i) line += pad(row[i] ? *row[i] : "", width[i]) + "  ";
        std::cout << line << "\n";
    }
}

}  // namespace

int cmd_run(const std::string& script, const std::vector<std::string>& kwargs,
            const std::string& replay_flor) {
    ExecMode mode;
    for (const auto& tok : kwargs) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0)
            return fail_usage("bad --kwargs token '" + tok + "' (expected name=value)");
        mode.kwargs[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    if (!replay_flor.empty()) {
        mode.replay = true;
        try {
            mode.scan = ScanSpec::parse(replay_flor);
        } catch (const Error& e) {
            return fail_usage(e.what());
        }
        if (const char* orig = std::getenv("FLOR_REPLAY_TSTAMP"); orig && *orig)
            mode.replay_of = orig;
        if (const char* projid = std::getenv("FLOR_REPLAY_PROJID"); projid && *projid)
            mode.projid_override = projid;
    }

    fs::path script_path(script);
    if (!fs::exists(script_path)) return fail_usage("script not found: " + script);

    auto project = find_project();
    if (!project) {
        if (mode.replay)
            return fail_usage("not inside a project (no .flor/ found); replay needs history");
        project = Project::init(fs::current_path());
    }

    std::string source;
    try {
        source = util::read_file(script_path);
    } catch (const Error& e) {
        return fail_usage(e.what());
    }

    // the recorded script name is project-root-relative so restored
    // versions resolve the same path; replay workspaces already receive the
    // recorded relative path and run from the workspace root
    std::string filename;
    if (mode.replay) {
        filename = script_path.lexically_normal().string();
    } else {
        filename = script_path.filename().string();
        std::error_code ec;
        auto rel = fs::relative(fs::weakly_canonical(script_path), project->root, ec);
        if (!ec && !rel.empty() && rel.native().rfind("..", 0) != 0) filename = rel.string();
    }

    try {
        RunContext run(*project, filename, mode);
        if (mode.replay) {
            fs::path out = fs::current_path() / "flor_replay.json";
            if (const char* env = std::getenv("FLOR_REPLAY_OUT"); env && *env) out = env;
            run.set_replay_out(out);
        }
        try {
            run_script(run, source);
        } catch (const Error& e) {
            run.finalize(false);  // partial history is still flushed and committed
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
        run.finalize(true);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_replay(const std::vector<std::string>& vars, const std::string& where_clause, int workers,
               bool yes) {
    auto project = find_project();
    if (!project)
        return fail_usage("not inside a project (no .flor/ found); record a run first or set "
                          "FLOR_PROJECT");
    try {
        Logstore store(project->db_path());
        ShadowRepo repo(project->root);
        auto ckpts = CkptStore::local(project->obj_dir());
        ReplayQuery query{vars, where_clause};
        ReplayPlan plan = plan_replay(*project, store, repo, ckpts, query);
        if (plan.tasks.empty()) {
            for (const auto& n : plan.notices) std::cout << "  -- " << n << "\n";
            std::cout << "nothing to backfill\n";
            return 1;
        }
        std::cout << render_plan(plan, workers);
        if (!yes) {
            std::cout << "proceed? [y/N] " << std::flush;
            std::string line;
            std::getline(std::cin, line);
            line = util::trim(line);
            if (line != "y" && line != "Y" && line != "yes") {
                std::cout << "declined; nothing executed\n";
                return 1;
            }
        }
        plan.confirmed = true;
        ExecOptions opts;
        opts.workers = workers;
        ExecReport report = execute_plan(*project, store, repo, ckpts, plan, opts);
        std::cout << report.render();
        return report.all_done() ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_dataframe(const std::vector<std::string>& names, const std::string& where_clause,
                  const std::string& csv_out) {
    auto project = find_project();
    if (!project) return fail_usage("not inside a project (no .flor/ found)");
    try {
        Logstore store(project->db_path());
        Table view = dataframe(store, names);
        view = filter_view(view, where_clause);
        if (!csv_out.empty()) {
            util::write_file(csv_out, to_csv(view));
            std::cout << view.rows.size() << " rows -> " << csv_out << "\n";
        } else {
            print_table(view);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_versions() {
    auto project = find_project();
    if (!project) return fail_usage("not inside a project (no .flor/ found)");
    try {
        ShadowRepo repo(project->root);
        for (const auto& rec : repo.versions()) {
            std::printf("%-8s  %s  %-19s  %s\n", rec.vid.substr(0, 8).c_str(),
                        rec.ts_start.c_str(), rec.ts_end.empty() ? "(open)" : rec.ts_end.c_str(),
                        rec.branch.c_str());
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_stat(const std::string& ref) {
    auto project = find_project();
    if (!project) return fail_usage("not inside a project (no .flor/ found)");
    try {
        Logstore store(project->db_path());
        ShadowRepo repo(project->root);
        auto ckpts = CkptStore::local(project->obj_dir());

        // accept a vid prefix or a tstamp prefix
        std::string tstamp;
        std::string vid;
        if (auto resolved = repo.resolve_prefix(ref)) {
            vid = *resolved;
            for (const auto& rec : repo.versions())
                if (rec.vid == vid) tstamp = rec.ts_start;
        } else {
            std::vector<RunKey> hits;
            for (const auto& run : store.runs())
                if (util::starts_with(run.tstamp, ref)) hits.push_back(run);
            if (hits.empty()) return fail_usage("no run matches '" + ref + "'");
            if (hits.size() > 1) {
                std::string msg = "ambiguous reference '" + ref + "'; candidates:";
                for (const auto& h : hits) msg += "\n  " + h.tstamp;
                return fail_usage(msg);
            }
            tstamp = hits[0].tstamp;
            try {
                vid = repo.lookup(tstamp);
            } catch (const Error&) {
            }
        }
        RunKey run;
        for (const auto& r : store.runs())
            if (r.tstamp == tstamp) run = r;
        if (run.tstamp.empty()) return fail_usage("run " + tstamp + " is not in the store");

        RunProfile p = load_profile(store, run);
        std::printf("run %s  (%s)\n", tstamp.c_str(), vid.empty() ? "-" : vid.substr(0, 8).c_str());
        std::printf("  t_prefix      %.4fs\n", p.t_prefix);
        if (!p.outer_loop.empty()) {
            double sum = 0;
            for (const auto& [k, s] : p.outer_iter) sum += s;
            std::printf("  t_iteration   %s x%lld, mean %.4fs\n", p.outer_loop.c_str(),
                        static_cast<long long>(p.outer_iter.size()),
                        p.outer_iter.empty() ? 0.0 : sum / static_cast<double>(p.outer_iter.size()));
        }
        if (p.ckpt_save_mean >= 0) std::printf("  t_ckpt_save   %.4fs mean\n", p.ckpt_save_mean);
        if (p.ckpt_load_mean >= 0)
            std::printf("  t_ckpt_load   %.4fs mean (measured in replay)\n", p.ckpt_load_mean);
        std::printf("  t_suffix      %.4fs\n", p.t_suffix);

        std::vector<long long> ckpt_iters;
        for (const auto& [iter, e] : ckpts.by_iteration(run.projid, run.tstamp))
            ckpt_iters.push_back(iter);
        double calib = calibration_factor(*project);
        ScanSpec spec;
        for (ScanLevel level : {ScanLevel::Prefix, ScanLevel::Suffix, ScanLevel::Validation,
                                ScanLevel::Range}) {
            spec.level = level;
            spec.lo = 0;
            spec.hi = -1;
            std::printf("  est %-11s %.4fs\n", scan_level_name(level),
                        estimate_seconds(p, spec, ckpt_iters, calib));
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace flor::cli
