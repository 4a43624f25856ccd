#include <gtest/gtest.h>

#include <random>

#include "oracles/bundle_oracle.hpp"
#include "splc/reduction.hpp"
#include "splc/solver.hpp"

using namespace splc;

namespace {

FisherMarket ref_only() {
    FisherMarket m;
    GoodId ref = m.add_good("ref");
    m.add_buyer({"ref", Rational(1), {{ref, SplcUtility::linear(1)}}});
    return m;
}

FisherMarket mirrored() {
    FisherMarket m;
    GoodId a = m.add_good("a");
    GoodId b = m.add_good("b");
    m.add_buyer({"x", Rational(1), {{a, SplcUtility::linear(2)}, {b, SplcUtility::linear(1)}}});
    m.add_buyer({"y", Rational(1), {{a, SplcUtility::linear(1)}, {b, SplcUtility::linear(2)}}});
    return m;
}

// ref buyer, aux(j, r) with a steep slope on j, and a linear buyer with budget m on j.
FisherMarket aux_and_linear(const Rational &r, const Rational &m_budget, const Rational &aux_budget) {
    FisherMarket m;
    GoodId ref = m.add_good("ref");
    GoodId j = m.add_good("j");
    m.add_buyer({"ref", Rational(1), {{ref, SplcUtility::linear(1)}}});
    m.add_buyer({"aux", aux_budget, {{ref, SplcUtility::linear(1)}, {j, SplcUtility::capped(Rational(1000), r)}}});
    m.add_buyer({"lin", m_budget, {{j, SplcUtility::linear(1)}}});
    return m;
}

}  // namespace

TEST(CanonicalDemand, RefOnly) {
    auto m = ref_only();
    EXPECT_EQ(canonical_demand(m, {Rational(1)}).aggregate[0], Rational(1));
    EXPECT_EQ(canonical_demand(m, {Rational(1, 2)}).aggregate[0], Rational(2));
    EXPECT_THROW(canonical_demand(m, {Rational(0)}), UnboundedDemand);
}

TEST(CanonicalDemand, CompiledNotCycleAgainstOracle) {
    auto r = compile(parse_circuit("nodes 2\nNOT 0 1\nNOT 1 0\n"), Rational(0));
    const auto &m = r.market;
    std::mt19937_64 rng(9);
    PriceVector p(m.good_count());
    for (auto &x : p) {
        x = Rational(static_cast<long>(1 + rng() % 1000), 140800);
    }
    p[r.ref_good] = Rational(static_cast<long>(1 + rng() % 9), 4);
    auto d = canonical_demand(m, p);
    ASSERT_EQ(d.bundles.size(), 2641u);
    std::vector<Rational> sum(m.good_count(), Rational(0));
    for (BuyerId b = 0; b < m.buyer_count(); ++b) {
        for (const auto &[g, x] : d.bundles[b]) {
            sum[g] += x;
        }
        if (b % 37 == 0) {
            const Buyer &buyer = m.buyers()[b];
            EXPECT_EQ(row_utility(buyer.utilities, d.bundles[b]), oracle::max_utility(buyer, p)) << buyer.id;
        }
    }
    EXPECT_EQ(sum, d.aggregate);
}

TEST(Tatonnement, RefOnlyIsAFixedPoint) {
    auto res = tatonnement(ref_only(), SolverConfig{});
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations, 0u);
    ASSERT_EQ(res.trace.size(), 1u);
    EXPECT_EQ(res.trace[0].max_abs_slack, Rational(0));
    EXPECT_EQ(res.prices, PriceVector{Rational(1)});
}

TEST(Tatonnement, MirroredMarketReachesEqualPrices) {
    SolverConfig cfg;
    cfg.seed = 42;
    cfg.lambda = Rational(1);
    auto res = tatonnement(mirrored(), cfg);
    ASSERT_TRUE(res.converged);
    EXPECT_EQ(res.prices[0], res.prices[1]);
    EXPECT_EQ(res.prices[0], Rational(1));

    cfg.lambda = Rational(1, 2);
    cfg.epsilon = Rational(1, 1000000);
    res = tatonnement(mirrored(), cfg);
    ASSERT_TRUE(res.converged);
    EXPECT_LT((res.prices[0] - res.prices[1]).abs(), Rational(1, 100000));
    EXPECT_TRUE(verify_fisher(mirrored(), res.prices, res.allocation, cfg.epsilon).pass);
}

TEST(Tatonnement, TraceShapeAndBestPrices) {
    auto r = compile(parse_circuit("nodes 2\nNOT 0 1\nNOT 1 0\n"), Rational(0), {ParamOverride{1, 2}, std::nullopt});
    SolverConfig cfg;
    cfg.max_iters = 40;
    auto res = tatonnement(r.market, cfg);
    ASSERT_FALSE(res.trace.empty());
    EXPECT_LE(res.trace.size(), cfg.max_iters + 1);
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        EXPECT_EQ(res.trace[i].iteration, i);
    }
    Rational best = res.trace[0].max_abs_slack;
    for (const auto &row : res.trace) {
        best = min(best, row.max_abs_slack);
    }
    EXPECT_EQ(verify_fisher(r.market, res.prices, res.allocation, cfg.epsilon).max_abs_slack(), best);
    auto again = tatonnement(r.market, cfg);
    EXPECT_EQ(again.prices, res.prices);
    EXPECT_EQ(again.trace.size(), res.trace.size());
}

TEST(Tatonnement, ConfigValidation) {
    SolverConfig cfg;
    cfg.lambda = Rational(0);
    EXPECT_THROW(tatonnement(ref_only(), cfg), std::invalid_argument);
    cfg = SolverConfig{};
    cfg.price_floor = Rational(0);
    EXPECT_THROW(tatonnement(ref_only(), cfg), std::invalid_argument);
}

TEST(Tatonnement, SeedJittersStartDeterministically) {
    EXPECT_EQ(starting_prices(3, 0), PriceVector(3, Rational(1)));
    EXPECT_EQ(starting_prices(5, 7), starting_prices(5, 7));
    EXPECT_NE(starting_prices(5, 7), starting_prices(5, 8));
}

TEST(PinnedBisection, AuxPlusLinearClosedForm) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 40; ++i) {
        Rational r(static_cast<long>(1 + rng() % 9), 10);
        Rational m_budget(static_cast<long>(1 + rng() % 20), static_cast<long>(1 + rng() % 20));
        Rational expect = m_budget / (Rational(1) - r);
        auto m = aux_and_linear(r, m_budget, r * expect * Rational(2));
        std::vector<std::optional<Rational>> pinned{Rational(1), std::nullopt};
        auto res = pinned_bisection(m, pinned, 1, expect / Rational(1000), expect * Rational(1000), pow2(-80),
                                    Rational(0));
        EXPECT_TRUE(res.exact);
        EXPECT_EQ(res.price, expect);
    }
}

TEST(PinnedBisection, BracketErrors) {
    auto m = aux_and_linear(Rational(1, 2), Rational(1, 4), Rational(1));
    std::vector<std::optional<Rational>> pinned{Rational(1), std::nullopt};
    EXPECT_THROW(pinned_bisection(m, pinned, 1, Rational(1), Rational(2), pow2(-40), Rational(0)), BracketError);
    EXPECT_THROW(pinned_bisection(m, pinned, 1, Rational(1, 1000), Rational(1, 100), pow2(-40), Rational(0)),
                 BracketError);
    EXPECT_THROW(pinned_bisection(m, pinned, 1, Rational(2), Rational(1), pow2(-40), Rational(0)), BracketError);
    EXPECT_THROW(pinned_bisection(m, {std::nullopt, std::nullopt}, 1, Rational(1, 10), Rational(2), pow2(-40),
                                  Rational(0)),
                 std::invalid_argument);
}

TEST(PinnedBisection, TieOnlyClearing) {
    // The buyer splits its budget between a and b only when they cost the same.
    FisherMarket m;
    GoodId a = m.add_good("a");
    GoodId b = m.add_good("b");
    m.add_buyer({"x", Rational(1), {{a, SplcUtility::linear(1)}, {b, SplcUtility::linear(1)}}});
    m.add_buyer({"y", Rational(1, 2), {{b, SplcUtility::linear(1)}}});
    std::vector<std::optional<Rational>> pinned{Rational(1), std::nullopt};
    auto res = pinned_bisection(m, pinned, b, Rational(1, 8), Rational(8), pow2(-60), Rational(0));
    EXPECT_TRUE(res.exact);
    EXPECT_EQ(res.price, Rational(1));
    EXPECT_LE(res.demand_min, Rational(1));
    EXPECT_GE(res.demand_max, Rational(1));
}

TEST(GridSearch, RefOnly) {
    auto m = ref_only();
    auto res = grid_search(m, Rational(0), {0}, {Rational(1, 2), Rational(1), Rational(2)}, {std::nullopt});
    ASSERT_TRUE(res.has_value());
    EXPECT_EQ(res->prices[0], Rational(1));
    EXPECT_TRUE(verify_fisher(m, res->prices, res->allocation, Rational(0)).pass);
    EXPECT_FALSE(grid_search(m, Rational(0), {0}, {Rational(1, 2), Rational(2)}, {std::nullopt}).has_value());
}

TEST(GridSearch, TwoFreeGoods) {
    auto m = mirrored();
    std::vector<Rational> grid{Rational(1, 2), Rational(1), Rational(2)};
    auto res = grid_search(m, Rational(0), {0, 1}, grid, {std::nullopt, std::nullopt});
    ASSERT_TRUE(res.has_value());
    EXPECT_EQ(res->prices, (PriceVector{Rational(1), Rational(1)}));
    EXPECT_TRUE(verify_fisher(m, res->prices, res->allocation, Rational(0)).pass);
    EXPECT_THROW(grid_search(m, Rational(0), {0, 1, 0, 1}, grid, {std::nullopt, std::nullopt}),
                 std::invalid_argument);
}

TEST(GridSearch, AgreesWithBisectionWithinOneStep) {
    auto m = aux_and_linear(Rational(1, 3), Rational(1, 5), Rational(1));
    Rational root = Rational(1, 5) / (Rational(1) - Rational(1, 3));
    std::vector<std::optional<Rational>> pinned{Rational(1), std::nullopt};
    auto bis = pinned_bisection(m, pinned, 1, root / Rational(10), root * Rational(10), pow2(-80), Rational(0));
    Rational step = root * Rational(2) / Rational(64);
    std::vector<Rational> grid;
    for (long i = 1; i <= 64; ++i) {
        grid.push_back(step * Rational(i) + step / Rational(3));
    }
    auto res = grid_search(m, Rational(1, 50), {1}, grid, pinned);
    ASSERT_TRUE(res.has_value());
    EXPECT_LE((res->prices[1] - bis.price).abs(), step);
}
