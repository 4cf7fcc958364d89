#include "flor/cli.hpp"
#include "flor/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

// `flor replay VARS [where_clause]`: the last positional is the filter when
// it is empty or contains predicate syntax rather than a bare name.
bool looks_like_predicate(const std::string& s) {
    if (s.empty()) return true;
    return s.find_first_of(" '\"<>=!()") != std::string::npos;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hindsight logging over recorded experiment runs"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute a script, recording (or replaying) it");
    std::string script, replay_flor;
    std::vector<std::string> kwargs;
    run->add_option("script", script, "script file")->required();
    run->add_option("--kwargs", kwargs, "name=value overrides")->expected(-1);
    run->add_option("--replay_flor", replay_flor,
                    "SCANSPEC: prefix|suffix|validation|range:<lo>:<hi>[:<i>/<n>]");

    auto* replay = app.add_subcommand("replay", "backfill variables across past runs");
    std::vector<std::string> replay_args;
    int workers = 1;
    bool yes = false;
    replay->add_option("vars", replay_args, "variables, then an optional quoted where-clause")
        ->required()
        ->expected(-1);
    replay->add_option("-w,--workers", workers, "parallel replay workers");
    replay->add_flag("-y,--yes", yes, "skip the confirmation prompt");

    auto* df = app.add_subcommand("dataframe", "print the pivoted view of the log history");
    std::vector<std::string> names;
    std::string where_clause, csv_out;
    df->add_option("names", names, "log variable names")->required()->expected(-1);
    df->add_option("--where", where_clause, "filter predicate");
    df->add_option("--csv", csv_out, "write RFC-4180 CSV to this path");

    auto* versions = app.add_subcommand("versions", "list recorded versions (newest last)");
    (void)versions;

    auto* stat = app.add_subcommand("stat", "profile segments and per-scan estimates for a run");
    std::string ref;
    stat->add_option("ref", ref, "vid prefix or tstamp prefix")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return flor::cli::cmd_run(script, kwargs, replay_flor);
        if (replay->parsed()) {
            std::vector<std::string> vars = replay_args;
            std::string where;
            if (vars.size() >= 2 && looks_like_predicate(vars.back())) {
                where = vars.back();
                vars.pop_back();
            }
            return flor::cli::cmd_replay(vars, where, workers, yes);
        }
        if (df->parsed()) return flor::cli::cmd_dataframe(names, where_clause, csv_out);
        if (versions->parsed()) return flor::cli::cmd_versions();
        if (stat->parsed()) return flor::cli::cmd_stat(ref);
    } catch (const flor::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
