#include <gtest/gtest.h>

#include "oracles/bundle_oracle.hpp"
#include "random_markets.hpp"
#include "splc/market.hpp"

using namespace splc;

namespace {

FisherMarket ref_only() {
    FisherMarket m;
    GoodId ref = m.add_good("ref");
    m.add_buyer({"ref", Rational(1), {{ref, SplcUtility::linear(1)}}});
    return m;
}

// Two goods, two buyers with mirrored linear tastes.
FisherMarket mirrored() {
    FisherMarket m;
    GoodId a = m.add_good("a");
    GoodId b = m.add_good("b");
    m.add_buyer({"x", Rational(1), {{a, SplcUtility::linear(2)}, {b, SplcUtility::linear(1)}}});
    m.add_buyer({"y", Rational(1), {{a, SplcUtility::linear(1)}, {b, SplcUtility::linear(2)}}});
    return m;
}

}  // namespace

TEST(Utility, PiecewiseEvaluation) {
    Rational a = 2;
    Rational t(4, 11);
    EXPECT_EQ(utility_value(SplcUtility::capped(a, Rational(2, 11)), Rational(1, 11)), Rational(2, 11));
    SplcUtility flat_tail({{t, a}, {std::nullopt, Rational(0)}});
    EXPECT_EQ(utility_value(flat_tail, Rational(2) * t), a * t);
    EXPECT_EQ(utility_value(flat_tail, Rational(0)), Rational(0));
    EXPECT_EQ(utility_value(SplcUtility(), Rational(5)), Rational(0));
    SplcUtility two({{Rational(1), Rational(3)}, {Rational(2), Rational(1)}});
    EXPECT_EQ(two.value(Rational(2)), Rational(4));
    EXPECT_EQ(two.value(Rational(10)), Rational(5));
}

TEST(Utility, ConstructorEnforcesShape) {
    EXPECT_THROW(SplcUtility({{Rational(1), Rational(1)}, {Rational(1), Rational(2)}}), std::invalid_argument);
    EXPECT_THROW(SplcUtility({{std::nullopt, Rational(2)}, {Rational(1), Rational(1)}}), std::invalid_argument);
    EXPECT_THROW(SplcUtility({{Rational(0), Rational(1)}}), std::invalid_argument);
    EXPECT_THROW(SplcUtility({{Rational(1), Rational(-1)}}), std::invalid_argument);
    EXPECT_THROW(SplcUtility::linear(1).value(Rational(-1)), std::invalid_argument);
}

TEST(Market, BuyersNeedPositiveBudgets) {
    FisherMarket m;
    m.add_good("g");
    EXPECT_THROW(m.add_buyer({"b", Rational(0), {}}), std::invalid_argument);
    EXPECT_THROW(m.add_buyer({"b", Rational(1), {{3, SplcUtility::linear(1)}}}), std::invalid_argument);
    m.add_buyer({"b", Rational(1), {}});
    EXPECT_THROW(m.add_buyer({"b", Rational(1), {}}), std::invalid_argument);
}

TEST(OptimalBundle, SingleLinearGood) {
    auto r = optimal_bundle(UtilityMap{{0, SplcUtility::linear(1)}}, Rational(1), {Rational(1, 2)});
    EXPECT_EQ(r.bundle.at(0), Rational(2));
    EXPECT_EQ(r.max_utility, Rational(2));
    EXPECT_EQ(r.spend, Rational(1));
}

TEST(OptimalBundle, AuxBuysExactlyR) {
    Rational s(1, 140800);
    Rational H_high = s * Rational(3, 2);
    Rational r(2, 11);
    UtilityMap u{{0, SplcUtility::linear(1)}, {1, SplcUtility::capped(Rational(2) * s, r)}};
    for (Rational p_j : {H_high, H_high / Rational(2), s / Rational(1000)}) {
        auto b = optimal_bundle(u, r * H_high, {Rational(1), p_j});
        EXPECT_EQ(b.bundle.at(1), r);
        EXPECT_EQ(b.spend, r * H_high);
        Rational ref = b.bundle.count(0) ? b.bundle.at(0) : Rational(0);
        EXPECT_EQ(ref, r * (H_high - p_j));
    }
}

TEST(OptimalBundle, ZeroSlopeNeverBought) {
    UtilityMap u{{0, SplcUtility({{Rational(1), Rational(2)}, {std::nullopt, Rational(0)}})}};
    auto b = optimal_bundle(u, Rational(10), {Rational(1)});
    EXPECT_EQ(b.bundle.at(0), Rational(1));
    EXPECT_EQ(b.spend, Rational(1));
}

TEST(OptimalBundle, TieBreakByGoodThenSegment) {
    UtilityMap u{{0, SplcUtility::capped(Rational(1), Rational(1))}, {1, SplcUtility::capped(Rational(2), Rational(1))}};
    auto b = optimal_bundle(u, Rational(1), {Rational(1), Rational(2)});
    EXPECT_EQ(b.bundle.at(0), Rational(1));
    EXPECT_EQ(b.bundle.count(1), 0u);
}

TEST(OptimalBundle, ZeroPrices) {
    EXPECT_THROW(optimal_bundle(UtilityMap{{0, SplcUtility::linear(1)}}, Rational(1), {Rational(0)}), UnboundedDemand);
    // A bounded piece at price zero is taken in full for free.
    auto b = optimal_bundle(UtilityMap{{0, SplcUtility::capped(Rational(1), Rational(3))}, {1, SplcUtility::linear(1)}},
                            Rational(1), {Rational(0), Rational(1)});
    EXPECT_EQ(b.bundle.at(0), Rational(3));
    EXPECT_EQ(b.bundle.at(1), Rational(1));
}

TEST(OptimalBundle, MatchesExhaustiveOracle) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        auto c = testgen::buyer_case(rng);
        auto greedy = optimal_bundle(c.utilities, c.budget, c.prices);
        EXPECT_EQ(greedy.max_utility, oracle::max_utility(c.utilities, c.budget, c.prices)) << "case " << i;
        EXPECT_LE(greedy.spend, c.budget);
        EXPECT_EQ(row_spend(greedy.bundle, c.prices), greedy.spend);
        EXPECT_EQ(row_utility(c.utilities, greedy.bundle), greedy.max_utility);
    }
}

TEST(IsOptimal, ByValueNotIdentity) {
    Buyer b{"b", Rational(1), {{0, SplcUtility::linear(1)}, {1, SplcUtility::linear(2)}}};
    PriceVector p{Rational(1), Rational(2)};
    auto best = optimal_bundle(b, p);
    EXPECT_TRUE(is_optimal(b, p, best.bundle));
    // Equal bang-per-buck: move half the spend from good 0 to good 1.
    AllocationRow shifted{{0, Rational(1, 2)}, {1, Rational(1, 4)}};
    EXPECT_EQ(row_utility(b.utilities, shifted), best.max_utility);
    EXPECT_TRUE(is_optimal(b, p, shifted));
    AllocationRow over = best.bundle;
    over[0] += Rational(1, 1000000);
    EXPECT_FALSE(is_optimal(b, p, over));
    EXPECT_FALSE(is_optimal(b, p, {{0, Rational(1, 2)}}));
}

TEST(DemandRange, ContainsCanonicalAndCollapsesWithoutTies) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i) {
        auto c = testgen::buyer_case(rng);
        auto greedy = optimal_bundle(c.utilities, c.budget, c.prices);
        for (GoodId g = 0; g < c.prices.size(); ++g) {
            auto r = demand_range(c.utilities, c.budget, c.prices, g);
            Rational x = greedy.bundle.count(g) ? greedy.bundle.at(g) : Rational(0);
            EXPECT_LE(r.min, x);
            if (r.max) {
                EXPECT_LE(x, *r.max);
            }
            EXPECT_LE(r.min, r.max.value_or(r.min));
        }
    }
}

TEST(DemandRange, TiedGoodsShareTheMarginalBudget) {
    UtilityMap u{{0, SplcUtility::linear(1)}, {1, SplcUtility::linear(2)}};
    auto r = demand_range(u, Rational(1), {Rational(1), Rational(2)}, 1);
    EXPECT_EQ(r.min, Rational(0));
    EXPECT_EQ(*r.max, Rational(1, 2));
    UtilityMap capped{{0, SplcUtility::capped(Rational(1), Rational(1, 4))}, {1, SplcUtility::linear(2)}};
    r = demand_range(capped, Rational(1), {Rational(1), Rational(2)}, 1);
    EXPECT_EQ(r.min, Rational(3, 8));
    EXPECT_EQ(*r.max, Rational(1, 2));
}

TEST(VerifyFisher, RefOnly) {
    auto m = ref_only();
    Allocation x{{{0, Rational(1)}}};
    auto rep = verify_fisher(m, {Rational(1)}, x, Rational(0));
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.slack[0], Rational(0));

    Allocation half{{{0, Rational(1, 2)}}};
    rep = verify_fisher(m, {Rational(2)}, half, Rational(0));
    EXPECT_FALSE(rep.pass);
    EXPECT_EQ(rep.slack[0], Rational(-1, 2));
    EXPECT_TRUE(rep.buyers[0].optimal());
    EXPECT_TRUE(verify_fisher(m, {Rational(2)}, half, Rational(1, 2)).pass);

    rep = verify_fisher(m, {Rational(2)}, x, Rational(1));
    EXPECT_FALSE(rep.pass);
    EXPECT_TRUE(rep.buyers[0].overspent);
}

TEST(VerifyFisher, ShapeErrors) {
    auto m = ref_only();
    EXPECT_THROW(verify_fisher(m, {}, Allocation(1), Rational(0)), std::invalid_argument);
    EXPECT_THROW(verify_fisher(m, {Rational(1)}, Allocation(2), Rational(0)), std::invalid_argument);
    EXPECT_THROW(verify_fisher(m, {Rational(1)}, Allocation(1), Rational(-1)), std::invalid_argument);
}

TEST(VerifyFisher, UnboundedDemandVerdict) {
    auto m = ref_only();
    auto rep = verify_fisher(m, {Rational(0)}, Allocation{{{0, Rational(1)}}}, Rational(0));
    EXPECT_FALSE(rep.pass);
    EXPECT_EQ(rep.buyers[0].kind, VerdictKind::UnboundedDemand);
}

TEST(VerifyFisher, MirroredMarketEquilibrium) {
    auto m = mirrored();
    Allocation x{{{0, Rational(1)}}, {{1, Rational(1)}}};
    auto rep = verify_fisher(m, {Rational(1), Rational(1)}, x, Rational(0));
    EXPECT_TRUE(rep.pass);
    for (BuyerId b = 0; b < m.buyer_count(); ++b) {
        EXPECT_EQ(rep.buyers[b].achieved, oracle::max_utility(m.buyers()[b], {Rational(1), Rational(1)}));
    }
    EXPECT_FALSE(verify_fisher(m, {Rational(1), Rational(2)}, x, Rational(0)).pass);
}

TEST(Exchange, EndowmentShares) {
    FisherMarket m;
    m.add_good("g1");
    m.add_good("g2");
    m.add_buyer({"a", Rational(1), {{0, SplcUtility::linear(1)}}});
    m.add_buyer({"b", Rational(3), {{1, SplcUtility::linear(1)}}});
    auto ex = to_exchange(m);
    ASSERT_EQ(ex.traders().size(), 2u);
    for (const auto &[g, w] : ex.traders()[0].endowments) {
        EXPECT_EQ(w, Rational(1, 4)) << g;
    }
    for (const auto &[g, w] : ex.traders()[1].endowments) {
        EXPECT_EQ(w, Rational(3, 4)) << g;
    }
    EXPECT_EQ(ex.traders()[1].utilities, m.buyers()[1].utilities);
    auto single = to_exchange(ref_only());
    EXPECT_EQ(single.traders()[0].endowments, (std::vector<std::pair<GoodId, Rational>>{{0, Rational(1)}}));
}

TEST(Exchange, ColumnsMustSumToOne) {
    Trader t{"t", {{0, Rational(1, 2)}}, {}};
    EXPECT_THROW(ExchangeMarket({"g"}, {t}), std::invalid_argument);
}

TEST(Exchange, VerifyRefOnlyAndScaling) {
    auto ex = to_exchange(ref_only());
    Allocation x{{{0, Rational(1)}}};
    EXPECT_TRUE(verify_exchange(ex, {Rational(1)}, x, Rational(0)).pass);
    EXPECT_TRUE(verify_exchange(ex, {Rational(7)}, x, Rational(0)).pass);

    auto mex = to_exchange(mirrored());
    Allocation y{{{0, Rational(1)}}, {{1, Rational(1)}}};
    for (PriceVector p : {PriceVector{Rational(1), Rational(1)}, PriceVector{Rational(1), Rational(3)}}) {
        auto a = verify_exchange(mex, p, y, Rational(0));
        auto b = verify_exchange(mex, {p[0] * 7, p[1] * 7}, y, Rational(0));
        EXPECT_EQ(a.pass, b.pass);
        EXPECT_EQ(a.slack, b.slack);
    }
}

TEST(Exchange, NormalizeAndStrongConnectivity) {
    auto p = normalize_prices({Rational(1), Rational(3)}, Rational(2));
    EXPECT_EQ(p, (PriceVector{Rational(1, 2), Rational(3, 2)}));
    EXPECT_THROW(normalize_prices({Rational(0)}, Rational(1)), std::invalid_argument);
    EXPECT_TRUE(economy_graph_strongly_connected(to_exchange(mirrored())));

    // Nobody wants good b, so its owner cannot be reached.
    Trader t1{"t1", {{0, Rational(1)}}, {{1, SplcUtility::linear(1)}}};
    Trader t2{"t2", {{1, Rational(1)}}, {{1, SplcUtility::linear(1)}}};
    EXPECT_FALSE(economy_graph_strongly_connected(ExchangeMarket({"a", "b"}, {t1, t2})));
}

TEST(SufficientCondition, NeedsUnboundedPositiveSlope) {
    EXPECT_TRUE(satisfies_sufficient_condition(ref_only()));
    FisherMarket m;
    m.add_good("g");
    m.add_buyer({"b", Rational(1), {{0, SplcUtility::capped(Rational(1), Rational(1))}}});
    EXPECT_FALSE(satisfies_sufficient_condition(m));
}
