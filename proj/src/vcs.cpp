#include "flor/vcs.hpp"

#include "flor/error.hpp"
#include "flor/subprocess.hpp"
#include "flor/util.hpp"
#include "flor/views.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace flor {

namespace fs = std::filesystem;
using util::run_checked;
using util::run_process;

static const std::string kShadowPrefix = "flor.shadow.";

ShadowRepo::ShadowRepo(fs::path root) : root_(std::move(root)) {}

std::map<std::string, std::string> ShadowRepo::git_env(const fs::path& index_file) const {
    std::map<std::string, std::string> env{
        {"GIT_AUTHOR_NAME", "flor"},      {"GIT_AUTHOR_EMAIL", "flor@localhost"},
        {"GIT_COMMITTER_NAME", "flor"},   {"GIT_COMMITTER_EMAIL", "flor@localhost"},
        {"GIT_TERMINAL_PROMPT", "0"},
    };
    if (!index_file.empty()) env["GIT_INDEX_FILE"] = index_file.string();
    return env;
}

void ShadowRepo::ensure_repo() {
    if (!fs::exists(root_ / ".git")) {
        run_checked({"git", "-c", "init.defaultBranch=main", "init", "-q"}, root_, git_env());
    }
    auto exclude = root_ / ".git" / "info" / "exclude";
    std::string line = "/.flor/";
    std::string existing;
    if (fs::exists(exclude)) existing = util::read_file(exclude);
    if (existing.find(line) == std::string::npos)
        util::append_file(exclude, "\n" + line + "\n");
}

std::string ShadowRepo::user_branch() {
    auto res = run_process({"git", "symbolic-ref", "--short", "-q", "HEAD"}, root_, git_env());
    if (res.exit_code != 0) return "detached";
    return util::trim(res.out);
}

std::string ShadowRepo::shadow_branch() { return kShadowPrefix + user_branch(); }

std::string ShadowRepo::autocommit(const std::string& projid, const std::string& tstamp,
                                   const fs::path& logfile_rel) {
    ensure_repo();
    auto tmp_dir = root_ / ".flor" / "tmp";
    fs::create_directories(tmp_dir);
    static std::mt19937_64 gen(std::random_device{}());
    auto index = tmp_dir / ("index-" + std::to_string(gen() % 1000000));
    auto env = git_env(index);

    run_checked({"git", "read-tree", "--empty"}, root_, env);
    run_checked({"git", "add", "-A", "."}, root_, env);
    if (!logfile_rel.empty())
        run_checked({"git", "add", "-f", "--", logfile_rel.string()}, root_, env);
    std::string tree = run_checked({"git", "write-tree"}, root_, env);

    std::string branch = shadow_branch();
    auto parent_res = run_process(
        {"git", "rev-parse", "--verify", "-q", "refs/heads/" + branch}, root_, env);
    std::vector<std::string> commit_args{"git", "commit-tree", tree, "-m", projid + "::" + tstamp};
    if (parent_res.exit_code == 0) {
        commit_args.push_back("-p");
        commit_args.push_back(util::trim(parent_res.out));
    }
    std::string vid = run_checked(commit_args, root_, env);
    run_checked({"git", "update-ref", "refs/heads/" + branch, vid}, root_, env);

    std::error_code ec;
    fs::remove(index, ec);
    return vid;
}

fs::path ShadowRepo::restore(const std::string& vid, const fs::path& ws_parent) {
    fs::create_directories(ws_parent);
    static std::mt19937_64 gen(std::random_device{}() + 1);
    fs::path ws;
    for (;;) {
        ws = ws_parent / (vid.substr(0, 8) + "-" + std::to_string(gen() % 1000000));
        if (!fs::exists(ws)) break;
    }
    fs::create_directories(ws);

    auto index = root_ / ".flor" / "tmp" / ("index-r" + std::to_string(gen() % 1000000));
    fs::create_directories(index.parent_path());
    auto env = git_env(index);
    run_checked({"git", "read-tree", vid}, root_, env);
    run_checked({"git", "checkout-index", "-a", "-f", "--prefix=" + ws.string() + "/"}, root_,
                env);
    std::error_code ec;
    fs::remove(index, ec);
    fs::remove_all(ws / ".flor", ec);  // workspaces resolve the real project via FLOR_PROJECT
    return ws;
}

std::vector<VersionRecord> ShadowRepo::versions() {
    std::vector<VersionRecord> out;
    if (!fs::exists(root_ / ".git")) return out;
    auto refs_out = run_process(
        {"git", "for-each-ref", "--format=%(refname:short)", "refs/heads/"}, root_, git_env());
    if (refs_out.exit_code != 0) return out;
    for (const auto& ref : util::split(util::trim(refs_out.out), '\n')) {
        if (!util::starts_with(ref, kShadowPrefix)) continue;
        auto log_out = run_process({"git", "log", "--reverse", "--format=%H%x09%s", ref}, root_,
                                   git_env());
        if (log_out.exit_code != 0) continue;
        std::string prev_vid;
        for (const auto& line : util::split(util::trim(log_out.out), '\n')) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            std::string vid = line.substr(0, tab);
            std::string msg = line.substr(tab + 1);
            auto sep = msg.find("::");
            if (sep == std::string::npos) continue;  // foreign commit on the shadow branch
            VersionRecord rec;
            rec.vid = vid;
            rec.parent_vid = prev_vid;
            rec.projid = msg.substr(0, sep);
            rec.ts_start = msg.substr(sep + 2);
            rec.branch = ref;
            out.push_back(std::move(rec));
            prev_vid = vid;
        }
    }
    std::sort(out.begin(), out.end(),
              [](const VersionRecord& a, const VersionRecord& b) { return a.ts_start < b.ts_start; });
    for (size_t i = 0; i + 1 < out.size(); ++i) out[i].ts_end = out[i + 1].ts_start;
    return out;
}

std::vector<VersionRecord> ShadowRepo::versions(const std::string& predicate) {
    auto all = versions();
    if (util::trim(predicate).empty()) return all;
    Table t;
    t.cols = {"projid", "tstamp"};
    for (const auto& rec : all) t.rows.push_back({rec.projid, rec.ts_start});
    Table kept = filter_view(t, predicate);
    std::set<std::string> keep;
    for (const auto& row : kept.rows) keep.insert(*row[1]);
    std::vector<VersionRecord> out;
    for (const auto& rec : all)
        if (keep.count(rec.ts_start)) out.push_back(rec);
    return out;
}

std::string ShadowRepo::lookup(const std::string& tstamp) {
    auto all = versions();
    const VersionRecord* hit = nullptr;
    for (const auto& rec : all) {
        if (rec.ts_start <= tstamp && (rec.ts_end.empty() || tstamp < rec.ts_end)) hit = &rec;
    }
    if (!hit) fail("no version covers tstamp " + tstamp);
    return hit->vid;
}

std::string ShadowRepo::show_file(const std::string& vid, const std::string& relpath) {
    // bytes must come back exactly (propagation preserves formatting)
    auto res = run_process({"git", "cat-file", "-p", vid + ":" + relpath}, root_, git_env());
    if (res.exit_code != 0)
        fail("cannot read " + relpath + " at " + vid.substr(0, 8) + ": " + util::trim(res.err));
    return res.out;
}

std::optional<std::string> ShadowRepo::resolve_prefix(const std::string& vid_prefix) {
    std::vector<std::string> hits;
    for (const auto& rec : versions())
        if (util::starts_with(rec.vid, vid_prefix)) hits.push_back(rec.vid);
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    if (hits.size() == 1) return hits[0];
    if (hits.size() > 1) fail("ambiguous vid prefix '" + vid_prefix + "' (" +
                              std::to_string(hits.size()) + " candidates)");
    return std::nullopt;
}

}  // namespace flor
