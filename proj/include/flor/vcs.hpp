#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flor {

struct VersionRecord {
    std::string vid;
    std::string parent_vid;
    std::string ts_start;
    std::string ts_end;  // empty = open-ended (latest run)
    std::string branch;
    std::string projid;
};

// Shadow-branch automation over the project's git repository. Every
// interaction goes through the git command line; the user's branch, HEAD
// and index are never touched (commits are built in a temporary index).
class ShadowRepo {
public:
    explicit ShadowRepo(std::filesystem::path root);

    void ensure_repo();  // init on first use; marks .flor/ excluded
    std::string user_branch();
    std::string shadow_branch();  // flor.shadow.<user-branch>

    // Snapshot of the working directory plus the run's logfile, committed
    // to the shadow branch. Returns the new vid.
    std::string autocommit(const std::string& projid, const std::string& tstamp,
                           const std::filesystem::path& logfile_rel);

    // Materializes the commit's tree into a disposable workspace directory
    // (minus .flor/); never mutates the user's working directory.
    std::filesystem::path restore(const std::string& vid,
                                  const std::filesystem::path& ws_parent);

    std::string lookup(const std::string& tstamp);  // vid covering the tstamp
    std::vector<VersionRecord> versions();          // newest-last
    // filtered on dimension columns (projid, tstamp), views predicate grammar
    std::vector<VersionRecord> versions(const std::string& predicate);
    std::string show_file(const std::string& vid, const std::string& relpath);
    std::optional<std::string> resolve_prefix(const std::string& vid_prefix);

private:
    std::filesystem::path root_;
    std::map<std::string, std::string> git_env(const std::filesystem::path& index_file = {}) const;
};

}  // namespace flor
