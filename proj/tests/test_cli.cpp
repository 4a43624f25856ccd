#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "splc/reduction_json.hpp"
#include "splc/solver.hpp"

using namespace splc;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SPLC_CLI_PATH;
const std::string kFixtures = SPLC_FIXTURES_DIR;

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;

    Json json() const { return Json::parse(out); }
    Json error() const { return Json::parse(err).at("error"); }
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("splc_cli_" + std::to_string(::getpid()) + "_" + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Outcome run(const std::string &args) {
        std::string cmd = "cd '" + dir_.string() + "' && '" + kCli + "' " + args + " >stdout.txt 2>stderr.txt";
        int status = std::system(cmd.c_str());
        Outcome r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(dir_ / "stdout.txt");
        r.err = slurp(dir_ / "stderr.txt");
        return r;
    }

    static std::string fixture(const std::string &rel) { return "'" + kFixtures + "/" + rel + "'"; }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, CompileNotCycle) {
    auto r = run("compile " + fixture("circuits/not_cycle.pc") + " --eps 0 --out out");
    ASSERT_EQ(r.code, 0) << r.err;
    Json summary = r.json();
    EXPECT_EQ(summary["goods"], 881);
    EXPECT_EQ(summary["buyers"], 2641);
    EXPECT_EQ(summary["k"], 440);
    EXPECT_EQ(summary["d"], 8);
    FisherMarket m = market_from_json(Json::parse(slurp(dir_ / "out/market.json")));
    EXPECT_EQ(m.good_count(), 881u);
    auto rebuilt = reduced_from_documents(m, Json::parse(slurp(dir_ / "out/meta.json")));
    EXPECT_EQ(rebuilt.params.s, Rational(1, 140800));
}

TEST_F(Cli, CompileIsByteDeterministic) {
    ASSERT_EQ(run("compile " + fixture("circuits/purify_nand_loop.pc") + " --eps 1/12 --override-k 3 --override-d 4 "
                  "--out a").code, 0);
    ASSERT_EQ(run("compile " + fixture("circuits/purify_nand_loop.pc") + " --eps 1/12 --override-k 3 --override-d 4 "
                  "--out b").code, 0);
    EXPECT_EQ(slurp(dir_ / "a/market.json"), slurp(dir_ / "b/market.json"));
    EXPECT_EQ(slurp(dir_ / "a/meta.json"), slurp(dir_ / "b/meta.json"));
}

TEST_F(Cli, UsageAndPreconditionExits) {
    auto decimal = run("compile " + fixture("circuits/not_cycle.pc") + " --eps 0.1");
    EXPECT_EQ(decimal.code, 2);
    EXPECT_EQ(decimal.error()["kind"], "usage");
    EXPECT_TRUE(decimal.out.empty());

    auto limit = run("compile " + fixture("circuits/not_cycle.pc") + " --eps 1/11");
    EXPECT_EQ(limit.code, 3);
    EXPECT_EQ(limit.error()["exit"], 3);

    EXPECT_EQ(run("compile " + fixture("circuits/not_cycle.pc") + " --eps 0 --override-k 2").code, 2);
    EXPECT_EQ(run("compile missing.pc --eps 0").code, 2);
    EXPECT_EQ(run("compile " + fixture("invalid/duplicate_output.pc") + " --eps 0").code, 2);
    EXPECT_EQ(run("compile " + fixture("invalid/out_degree3.pc") + " --eps 0").code, 3);
    EXPECT_EQ(run("no-such-command").code, 2);
}

TEST_F(Cli, VerifyFisherAndExchange) {
    std::string base = fixture("markets/ref_only.json") + " ";
    auto ok = run("verify " + base + fixture("markets/ref_only.prices.json") + " " +
                  fixture("markets/ref_only.allocation.json") + " --eps 1/12");
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_EQ(ok.json()["verdict"], "pass");
    EXPECT_EQ(ok.json()["market_kind"], "fisher");

    auto bad = run("verify " + base + fixture("markets/ref_only.prices_high.json") + " " +
                   fixture("markets/ref_only.allocation.json") + " --eps 1/12");
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(bad.json()["verdict"], "fail");
    // Supply still clears; the buyer overspends.
    EXPECT_EQ(bad.json()["slack"]["ref"], "0");
    EXPECT_NE(bad.json()["buyers"]["ref"]["verdict"], "optimal");

    auto capped = run("verify " + fixture("markets/capped.json") + " " + fixture("markets/capped.prices.json") + " " +
                      fixture("markets/capped.allocation.json") + " --eps 0");
    EXPECT_EQ(capped.code, 0) << capped.out;

    auto ex = run("to-exchange " + fixture("markets/mirrored.json") + " --out ex.json");
    ASSERT_EQ(ex.code, 0) << ex.err;
    ExchangeMarket em = exchange_from_json(Json::parse(slurp(dir_ / "ex.json")));
    EXPECT_EQ(em.traders().size(), 2u);
    auto ev = run("verify ex.json " + fixture("markets/mirrored.prices.json") + " " +
                  fixture("markets/mirrored.allocation.json") + " --eps 0");
    EXPECT_EQ(ev.code, 0) << ev.out << ev.err;
    EXPECT_EQ(ev.json()["market_kind"], "exchange");
}

TEST_F(Cli, CircuitCheck) {
    auto bad = run("circuit-check " + fixture("circuits/not_cycle.pc") + " " +
                   fixture("assignments/not_cycle_bad.json"));
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(bad.json()["verdict"], "violated");
    EXPECT_NE(bad.out.find("0 → 1"), std::string::npos);

    auto good = run("circuit-check " + fixture("circuits/not_cycle.pc") + " " +
                    fixture("assignments/not_cycle_good.json"));
    EXPECT_EQ(good.code, 0);
    EXPECT_EQ(good.json()["verdict"], "satisfied");

    write_file(dir_ / "short.json", "{\"0\": \"1\"}");
    EXPECT_EQ(run("circuit-check " + fixture("circuits/not_cycle.pc") + " short.json").code, 2);
}

TEST_F(Cli, SolveWritesTraceAndDocuments) {
    auto r = run("solve " + fixture("markets/mirrored.json") + " --seed 5 --eps 1/1000000 --out s");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.json()["converged"]);
    std::string trace = slurp(dir_ / "s/trace.csv");
    EXPECT_EQ(trace.rfind("iteration,max_abs_slack,goods_violating\n", 0), 0u);
    auto v = run("verify " + fixture("markets/mirrored.json") + " s/prices.json s/allocation.json --eps 1/1000000");
    EXPECT_EQ(v.code, 0) << v.out;

    auto grid = run("solve " + fixture("markets/ref_only.json") + " --grid 1/2,1,2 --out g");
    ASSERT_EQ(grid.code, 0) << grid.err;
    EXPECT_EQ(Json::parse(slurp(dir_ / "g/prices.json"))["ref"], "1");

    auto stuck = run("solve " + fixture("markets/mirrored.json") + " --seed 5 --max-iters 1 --out t");
    EXPECT_EQ(stuck.code, 1);
    EXPECT_FALSE(stuck.json()["converged"]);
}

TEST_F(Cli, DecodeAllHigh) {
    ASSERT_EQ(run("compile " + fixture("circuits/not_cycle.pc") + " --eps 0 --override-k 1 --override-d 2 --out c")
                  .code,
              0);
    FisherMarket m = market_from_json(Json::parse(slurp(dir_ / "c/market.json")));
    write_file(dir_ / "p.json", prices_to_json(m.goods(), PriceVector(m.good_count(), Rational(1))).dump());
    auto r = run("decode c/meta.json p.json");
    ASSERT_EQ(r.code, 0) << r.err;
    Json doc = r.json();
    EXPECT_EQ(doc["copy"], 0);
    // s = 1/(20·k·d·|V|) with k = 1, d = 2, |V| = 2.
    EXPECT_EQ(doc["H"], "1/80");
    EXPECT_EQ(doc["assignment"], Json::parse(R"({"0": "1", "1": "1"})"));
}

TEST_F(Cli, LemmasOnHandBuiltEquilibrium) {
    ASSERT_EQ(run("compile " + fixture("circuits/not_cycle.pc") + " --eps 1/12 --copy 1759 --out c").code, 0);
    FisherMarket m = market_from_json(Json::parse(slurp(dir_ / "c/market.json")));
    auto reduced = reduced_from_documents(m, Json::parse(slurp(dir_ / "c/meta.json")));
    PriceVector p(m.good_count(), Rational(1));
    for (GoodId g = 0; g < m.good_count(); ++g) {
        if (g != reduced.ref_good) {
            p[g] = Rational(4) * reduced.copies.front().H_low / Rational(5);
        }
    }
    auto x = canonical_demand(m, p).bundles;
    write_file(dir_ / "p.json", prices_to_json(m.goods(), p).dump());
    write_file(dir_ / "x.json", allocation_to_json(m.goods(), buyer_ids(m), x).dump());
    auto r = run("lemmas c/meta.json c/market.json p.json x.json");
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_EQ(r.json()["verdict"], "pass");
    EXPECT_EQ(r.json()["copy"], 1759);

    p[reduced.ref_good] = Rational(3, 2);
    write_file(dir_ / "p2.json", prices_to_json(m.goods(), p).dump());
    auto pre = run("lemmas c/meta.json c/market.json p2.json x.json");
    EXPECT_EQ(pre.code, 3);
    EXPECT_EQ(pre.error()["kind"], "precondition");
}

TEST_F(Cli, GadgetLab) {
    auto r = run("gadget-lab " + fixture("circuits/not_ring3.pc") + " --out lab.json");
    EXPECT_EQ(r.code, 0) << r.err;
    auto purify = run("gadget-lab " + fixture("circuits/purify_gadget.pc") + " --mesh 8");
    EXPECT_EQ(purify.code, 0) << purify.err;
    EXPECT_EQ(purify.json()["verdict"], "pass");
}
