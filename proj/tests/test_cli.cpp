#include <doctest.h>

#include "flor/logstore.hpp"
#include "flor/subprocess.hpp"
#include "flor/views.hpp"

#include "helpers.hpp"

#include <cstdlib>
#include <thread>

using namespace flor;
namespace fs = std::filesystem;

namespace {

std::string flor_bin() {
    const char* env = std::getenv("FLOR_BIN");
    REQUIRE(env != nullptr);
    return env;
}

util::ProcResult flor_cmd(const std::vector<std::string>& args, const fs::path& cwd,
                          const std::string& stdin_data = {}) {
    std::vector<std::string> argv{flor_bin()};
    argv.insert(argv.end(), args.begin(), args.end());
    return util::run_process(argv, cwd, {}, stdin_data);
}

}  // namespace

TEST_CASE("commands outside a project exit 2 with guidance") {
    auto dir = util::make_temp_dir("floroutside");
    auto res = flor_cmd({"replay", "x", "--yes"}, dir);
    CHECK(res.exit_code == 2);
    CHECK(res.err.find(".flor") != std::string::npos);
    CHECK(flor_cmd({"dataframe", "x"}, dir).exit_code == 2);
    CHECK(flor_cmd({"versions"}, dir).exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("usage errors exit 2") {
    auto dir = util::make_temp_dir("florusage");
    util::write_file(dir / "t.flr", "log(\"x\", 1)\n");
    CHECK(flor_cmd({"run", "t.flr", "--kwargs", "notkv"}, dir).exit_code == 2);
    CHECK(flor_cmd({"run", "missing.flr"}, dir).exit_code == 2);
    CHECK(flor_cmd({"run", "t.flr", "--replay_flor", "bogus"}, dir).exit_code == 2);
    CHECK(flor_cmd({"nonsense"}, dir).exit_code == 2);
    fs::remove_all(dir);
}

TEST_CASE("replay flow: declined confirmation performs zero writes, exit 1") {
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::base_fixture());
    auto res = flor_cmd({"run", "train.flr"}, tp.project.root);
    REQUIRE(res.exit_code == 0);

    std::string edited = testutil::base_fixture() + "log(\"late\", model * 2.0)\n";
    tp.write_script("train.flr", edited);

    // plan-only purity: user tree, facts, checkpoints and shadow refs untouched
    auto user_tree = util::hash_tree(tp.project.root, {".flor", ".git"});
    auto obj_tree = util::hash_tree(tp.project.obj_dir(), {});
    std::string shadow_head = util::run_checked(
        {"git", "rev-parse", "refs/heads/flor.shadow.main"}, tp.project.root);
    long long fact_count;
    {
        Logstore store(tp.project.db_path());
        fact_count = store.count_logs(testutil::only_run(store));
    }

    auto declined = flor_cmd({"replay", "late", ""}, tp.project.root, "n\n");
    CHECK(declined.exit_code == 1);
    CHECK(declined.out.find("declined") != std::string::npos);
    CHECK(util::hash_tree(tp.project.root, {".flor", ".git"}) == user_tree);
    CHECK(util::hash_tree(tp.project.obj_dir(), {}) == obj_tree);
    CHECK(util::run_checked({"git", "rev-parse", "refs/heads/flor.shadow.main"},
                            tp.project.root) == shadow_head);
    {
        Logstore store(tp.project.db_path());
        CHECK(store.count_logs(testutil::only_run(store)) == fact_count);
        CHECK_FALSE(store.has_value(testutil::only_run(store), "late"));
    }

    // confirming with 'y' on stdin executes and backfills
    auto confirmed = flor_cmd({"replay", "late", ""}, tp.project.root, "y\n");
    CHECK(confirmed.exit_code == 0);
    Logstore store(tp.project.db_path());
    CHECK(store.has_value(testutil::only_run(store), "late"));
}

TEST_CASE("replay with every var materialized reports nothing to backfill, exit 1") {
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::base_fixture());
    REQUIRE(flor_cmd({"run", "train.flr"}, tp.project.root).exit_code == 0);
    auto res = flor_cmd({"replay", "loss", "", "--yes"}, tp.project.root);
    CHECK(res.exit_code == 1);
    CHECK(res.out.find("nothing to backfill") != std::string::npos);
}

TEST_CASE("dataframe prints, filters, and exports csv") {
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::base_fixture());
    REQUIRE(flor_cmd({"run", "train.flr", "--kwargs", "seed=81"}, tp.project.root).exit_code == 0);

    auto res = flor_cmd({"dataframe", "f1_score", "seed"}, tp.project.root);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("f1_score") != std::string::npos);
    CHECK(res.out.find("81") != std::string::npos);

    CHECK(flor_cmd({"dataframe", "f1_score", "--where", "ghost = 1"}, tp.project.root).exit_code ==
          2);

    auto csv = flor_cmd({"dataframe", "loss", "--csv", "out.csv"}, tp.project.root);
    CHECK(csv.exit_code == 0);
    auto text = util::read_file(tp.project.root / "out.csv");
    CHECK(text.find("projid,tstamp,filename,epoch,step,loss") == 0);
}

TEST_CASE("stat resolves prefixes and prints monotone estimates") {
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::base_fixture());
    REQUIRE(flor_cmd({"run", "train.flr"}, tp.project.root).exit_code == 0);

    auto res = flor_cmd({"stat", "20"}, tp.project.root);  // tstamp prefix
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("t_prefix") != std::string::npos);
    CHECK(res.out.find("est prefix") != std::string::npos);
    CHECK(flor_cmd({"stat", "zzz"}, tp.project.root).exit_code == 2);
}

TEST_CASE("domain mappings: runs add rows, statements add columns, replay fills nulls") {
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::base_fixture());
    REQUIRE(flor_cmd({"run", "train.flr", "--kwargs", "seed=1"}, tp.project.root).exit_code == 0);

    auto view_rows = [&](const std::vector<std::string>& names) {
        Logstore store(tp.project.db_path());
        return dataframe(store, names);
    };

    // running an experiment adds rows
    auto before = view_rows({"f1_score"});
    REQUIRE(flor_cmd({"run", "train.flr", "--kwargs", "seed=2"}, tp.project.root).exit_code == 0);
    auto after = view_rows({"f1_score"});
    CHECK(after.rows.size() == before.rows.size() + 1);

    // adding a logging statement adds a (virtual, all-null) column
    std::string edited = testutil::base_fixture() + "log(\"f1_extra\", model * 2.0)\n";
    tp.write_script("train.flr", edited);
    auto with_col = view_rows({"f1_score", "f1_extra"});
    int idx = with_col.col_index("f1_extra");
    REQUIRE(idx >= 0);
    long long nulls = 0;
    for (const auto& row : with_col.rows)
        if (!row[static_cast<size_t>(idx)]) ++nulls;
    CHECK(nulls == 2);

    // replay from checkpoint backfills exactly those nulls
    REQUIRE(flor_cmd({"replay", "f1_extra", "", "--yes"}, tp.project.root).exit_code == 0);
    auto filled = view_rows({"f1_score", "f1_extra"});
    CHECK(filled.rows.size() == with_col.rows.size());
    for (const auto& row : filled.rows) CHECK(row[static_cast<size_t>(idx)].has_value());
}

TEST_CASE("scripts in subdirectories replay through their project-relative path") {
    testutil::TempProject tp;
    fs::create_directories(tp.project.root / "exp");
    util::write_file(tp.project.root / "exp" / "train.flr", testutil::base_fixture());
    REQUIRE(flor_cmd({"run", "exp/train.flr", "--kwargs", "seed=5"}, tp.project.root).exit_code ==
            0);
    {
        Logstore store(tp.project.db_path());
        CHECK(testutil::only_run(store).filename == "exp/train.flr");
    }
    util::write_file(tp.project.root / "exp" / "train.flr",
                     testutil::base_fixture() + "log(\"sub_extra\", model)\n");
    auto res = flor_cmd({"replay", "sub_extra", "", "--yes"}, tp.project.root);
    CHECK(res.exit_code == 0);
    Logstore store(tp.project.db_path());
    CHECK(store.has_value(testutil::only_run(store), "sub_extra"));
}

TEST_CASE("concurrent record runs never share a run key") {
    testutil::TempProject tp;
    std::string src = "x = arg(\"x\", 1)\nwork(0.3)\nlog(\"done\", x)\n";
    tp.write_script("t.flr", src);
    // three recorders racing within the same wall-clock second
    std::vector<util::ProcResult> results(3);
    std::vector<std::thread> threads;
    for (int i = 0; i < 3; ++i)
        threads.emplace_back([&, i] {
            results[static_cast<size_t>(i)] = flor_cmd(
                {"run", "t.flr", "--kwargs", "x=" + std::to_string(i)}, tp.project.root);
        });
    for (auto& t : threads) t.join();
    for (const auto& r : results) CHECK(r.exit_code == 0);
    Logstore store(tp.project.db_path());
    auto runs = store.runs();
    REQUIRE(runs.size() == 3);  // no run silently dropped as a duplicate
    std::set<std::string> stamps;
    for (const auto& r : runs) stamps.insert(r.tstamp);
    CHECK(stamps.size() == 3);
    ShadowRepo repo(tp.project.root);
    CHECK(repo.versions().size() == 3);
}

TEST_CASE("a validation-position var with a tstamp window replays only matching runs") {
    testutil::TempProject tp;
    tp.write_script("train.flr", testutil::base_fixture());
    std::vector<std::string> stamps;
    for (int i = 0; i < 3; ++i) {
        auto res = flor_cmd({"run", "train.flr", "--kwargs", "seed=" + std::to_string(i)},
                            tp.project.root);
        REQUIRE(res.exit_code == 0);
    }
    {
        Logstore store(tp.project.db_path());
        for (const auto& r : store.runs()) stamps.push_back(r.tstamp);
    }
    REQUIRE(stamps.size() == 3);

    std::string edited = testutil::base_fixture();
    {
        auto lines = util::split(edited, '\n');
        std::vector<std::string> out;
        for (const auto& l : lines) {
            out.push_back(l);
            if (l.find("val_acc") != std::string::npos)
                out.push_back("        log(\"f1_alert\", abs(model) * 4.0)");
        }
        edited = util::join(out, "\n");
    }
    tp.write_script("train.flr", edited);

    std::string where = "tstamp >= '" + stamps[0] + "' and tstamp < '" + stamps[2] + "'";
    auto res = flor_cmd({"replay", "f1_alert", where, "--yes"}, tp.project.root);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("validation") != std::string::npos);  // classified per position

    Logstore store(tp.project.db_path());
    auto runs = store.runs();
    CHECK(store.has_value(runs[0], "f1_alert"));
    CHECK(store.has_value(runs[1], "f1_alert"));
    CHECK_FALSE(store.has_value(runs[2], "f1_alert"));  // outside the window
    // five per-epoch values per backfilled run
    CHECK(testutil::facts_for(store, runs[0], "f1_alert").size() == 5);
}

TEST_CASE("script failures still flush and commit the partial logfile") {
    testutil::TempProject tp;
    std::string src = "log(\"early\", 1)\nboom = undefined_name\n";
    tp.write_script("t.flr", src);
    auto res = flor_cmd({"run", "t.flr"}, tp.project.root);
    CHECK(res.exit_code == 2);
    Logstore store(tp.project.db_path());
    auto run = testutil::only_run(store);
    CHECK(store.has_value(run, "early"));
    CHECK(testutil::facts_for(store, run, kStatusName) ==
          std::multiset<std::string>{std::string(kStatusName) + "||failed"});
    ShadowRepo repo(tp.project.root);
    CHECK(repo.versions().size() == 1);  // failed runs are committed too
}
