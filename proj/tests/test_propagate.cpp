#include <doctest.h>

#include "flor/error.hpp"
#include "flor/propagate.hpp"
#include "flor/script/parser.hpp"

#include "corpus.hpp"
#include "helpers.hpp"

using namespace flor;

namespace {

std::string with_suffix_statement(const std::string& base) {
    return base + "f1x = 1.0 / (2.0 + abs(model))\nlog(\"f1_extra\", f1x)\n";
}

std::string with_validation_statement(const std::string& base) {
    auto lines = util::split(base, '\n');
    std::vector<std::string> out;
    for (const auto& l : lines) {
        out.push_back(l);
        if (l.find("val_acc") != std::string::npos)
            out.push_back("        log(\"v_new\", abs(model) * 2.0)");
    }
    return util::join(out, "\n");
}

bool unit_applied(const PropagationResult& r, const std::string& var, std::string* block = nullptr) {
    for (const auto& u : r.units)
        if (u.var == var && u.applied) {
            if (block) *block = u.landing_block;
            return true;
        }
    return false;
}

}  // namespace

TEST_CASE("extraction returns the log statement plus its temp assignment") {
    std::string srcY = with_suffix_statement(testutil::base_fixture());
    auto units = extract_new_statements(script::parse(srcY), srcY, {"f1_extra"});
    REQUIRE(units.size() == 1);
    CHECK(units[0].stmts.size() == 2);  // the assignment travels with the log
    REQUIRE(units[0].lines.size() == 2);
    CHECK(units[0].lines[0] == "f1x = 1.0 / (2.0 + abs(model))");
    CHECK(units[0].lines[1] == "log(\"f1_extra\", f1x)");
    CHECK(units[0].reads == std::vector<std::string>{"model"});
}

TEST_CASE("extraction of a var absent from Y is an error") {
    std::string srcY = testutil::base_fixture();
    CHECK_THROWS_WITH_AS(extract_new_statements(script::parse(srcY), srcY, {"ghost"}),
                         doctest::Contains("ghost"), Error);
}

TEST_CASE("self-alignment is the identity and insertion is idempotent") {
    std::string base = testutil::base_fixture();
    std::string srcY = with_suffix_statement(base);

    auto first = propagate_source(base, srcY, {"f1_extra"});
    REQUIRE(first.changed);
    std::string landed;
    CHECK(unit_applied(first, "f1_extra", &landed));
    CHECK(landed == "module");

    // applying again inserts nothing (statement presence is checked first)
    auto second = propagate_source(first.source, srcY, {"f1_extra"});
    CHECK_FALSE(second.changed);
    CHECK(second.source == first.source);
    REQUIRE(second.units.size() == 1);
    CHECK(second.units[0].reason == "already present");
    CHECK(second.var_producible("f1_extra"));
}

TEST_CASE("emitted sources always parse and preserve other bytes") {
    std::string base = testutil::base_fixture();
    std::string srcY = with_validation_statement(base);
    auto res = propagate_source(base, srcY, {"v_new"});
    REQUIRE(res.changed);
    CHECK_NOTHROW(script::parse(res.source));
    // removing the inserted line restores the original byte-for-byte
    auto lines = util::split(res.source, '\n');
    std::vector<std::string> without;
    for (const auto& l : lines)
        if (l.find("v_new") == std::string::npos) without.push_back(l);
    CHECK(util::join(without, "\n") == base);
}

TEST_CASE("renamed validation block still lands in the epoch body") {
    std::string base = testutil::base_fixture();
    std::string renamed = testutil::corpus_detail::rename_ident(base, "g", "grad");
    renamed = testutil::corpus_detail::rename_ident(renamed, "r", "gen");
    std::string srcY = with_validation_statement(base);

    auto res = propagate_source(renamed, srcY, {"v_new"});
    std::string landed;
    REQUIRE(unit_applied(res, "v_new", &landed));
    CHECK(landed == "module>with>for[epoch]");
}

TEST_CASE("a version without the nested loop: suffix propagates, step-level is unalignable") {
    std::string old_version = R"(lr = arg("lr", 0.01)
seed = arg("seed", 7)
r = rng(seed)
model = 0.0
with checkpointing(model, r):
    for e in loop("epoch", range(5)):
        model = model - lr * (next(r) - 0.5)
        log("val_acc", 1.0 - abs(model))
log("f1_score", 1.0 / (1.0 + abs(model)))
)";
    std::string srcY = with_suffix_statement(testutil::base_fixture());
    {
        auto lines = util::split(srcY, '\n');
        std::vector<std::string> out;
        for (const auto& l : lines) {
            out.push_back(l);
            if (l.find("log(\"loss\"") != std::string::npos)
                out.push_back("            log(\"g_norm\", abs(g))");
        }
        srcY = util::join(out, "\n");
    }

    auto res = propagate_source(old_version, srcY, {"f1_extra", "g_norm"});
    CHECK(unit_applied(res, "f1_extra"));
    CHECK(res.var_producible("f1_extra"));
    CHECK_FALSE(res.var_producible("g_norm"));
    bool reported = false;
    for (const auto& u : res.units)
        if (u.var == "g_norm" && !u.applied &&
            u.reason.find("lacks loop 'step'") != std::string::npos)
            reported = true;
    CHECK(reported);
}

TEST_CASE("clamping: a shorter target block takes the statement at its end") {
    std::string shorter = R"(m = 0.0
for e in loop("epoch", range(2)):
    m = m + 1.0
log("done", m)
)";
    std::string longer = R"(m = 0.0
extra1 = 1
extra2 = 2
extra3 = 3
for e in loop("epoch", range(2)):
    m = m + 1.0
log("done", m)
log("m2", m * 2.0)
)";
    auto res = propagate_source(shorter, longer, {"m2"});
    std::string landed;
    REQUIRE(unit_applied(res, "m2", &landed));
    CHECK(landed == "module");
    // lands after log("done") at the end of the module block
    auto lines = util::split(res.source, '\n');
    REQUIRE(lines.size() >= 5);
    CHECK(lines[3].find("log(\"done\"") != std::string::npos);
    CHECK(lines[4].find("log(\"m2\"") != std::string::npos);
}

TEST_CASE("dependencies missing from X exclude the unit with a notice") {
    std::string old_version = R"(m = 0.0
for e in loop("epoch", range(2)):
    m = m + 1.0
log("done", m)
)";
    std::string srcY = R"(m = 0.0
helper = 42.0
for e in loop("epoch", range(2)):
    m = m + 1.0
log("done", m)
log("needs_helper", m + helper)
)";
    // the unit is just the log (helper is assigned far earlier, not adjacent)
    auto res = propagate_source(old_version, srcY, {"needs_helper"});
    CHECK_FALSE(res.var_producible("needs_helper"));
    REQUIRE(res.units.size() == 1);
    CHECK(res.units[0].reason.find("helper") != std::string::npos);
    CHECK(res.source == old_version);  // nothing half-inserted
}

TEST_CASE("the same name logged at two call sites propagates both with a note") {
    std::string base = R"(m = 0.0
for e in loop("epoch", range(2)):
    m = m + 1.0
log("done", m)
)";
    std::string srcY = R"(m = 0.0
for e in loop("epoch", range(2)):
    m = m + 1.0
    log("trace", m)
log("done", m)
log("trace", m * 10.0)
)";
    auto res = propagate_source(base, srcY, {"trace"});
    int applied = 0;
    for (const auto& u : res.units)
        if (u.applied) ++applied;
    CHECK(applied == 2);
    bool noted = false;
    for (const auto& n : res.notes)
        if (n.find("2 call sites") != std::string::npos) noted = true;
    CHECK(noted);
    CHECK_NOTHROW(script::parse(res.source));
}

TEST_CASE("scan level is preserved whenever X has the outer loop anchor") {
    std::string base = testutil::base_fixture();
    std::string srcY = with_suffix_statement(base);
    auto mutated = testutil::make_mutation_corpus(base, 12, 99);
    for (const auto& c : mutated) {
        auto res = propagate_source(c.srcX, srcY, {"f1_extra"});
        if (!res.var_producible("f1_extra")) continue;
        // classify via the planner helper happens in test_planner; here we
        // check the statement stayed outside the loop: it must be the last
        // top-level statement
        auto mod = script::parse(res.source);
        const auto& last = *mod.body.stmts.back();
        CHECK(stmt_signature(last, false).find("f1_extra") != std::string::npos);
    }
}

TEST_CASE("mutation corpus: >=95% block accuracy, zero silent misplacements") {
    std::string base = testutil::base_fixture();
    std::string srcY = with_validation_statement(with_suffix_statement(base));

    auto corpus = testutil::make_mutation_corpus(base, 60, 4242);
    int total = 0, correct = 0, reported = 0;
    for (const auto& c : corpus) {
        auto res = propagate_source(c.srcX, srcY, {"f1_extra", "v_new"});
        for (const auto& u : res.units) {
            ++total;
            if (u.applied) {
                std::string expected = u.var == "f1_extra" ? "module" : "module>with>for[epoch]";
                if (u.landing_block == expected)
                    ++correct;
                else
                    FAIL_CHECK("silent misplacement in case '" << c.description << "': " << u.var
                                                               << " landed in " << u.landing_block);
            } else {
                ++reported;  // failures must be reported, never silent
            }
        }
    }
    CHECK(total >= 120);
    double accuracy = static_cast<double>(correct) / static_cast<double>(total);
    CHECK(accuracy >= 0.95);
}
