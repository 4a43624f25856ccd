#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "market.hpp"

namespace splc {

struct DemandProfile {
    std::vector<Rational> aggregate;
    Allocation bundles;
};

/// Sums the greedy (canonical) optimal bundles of every buyer.
inline DemandProfile canonical_demand(const FisherMarket &market, const PriceVector &prices) {
    if (prices.size() != market.good_count()) {
        throw std::invalid_argument("price vector does not cover the market");
    }
    DemandProfile out;
    out.aggregate.assign(market.good_count(), Rational(0));
    out.bundles.reserve(market.buyer_count());
    for (const auto &b : market.buyers()) {
        auto best = optimal_bundle(b, prices);
        for (const auto &[g, x] : best.bundle) {
            out.aggregate[g] += x;
        }
        out.bundles.push_back(std::move(best.bundle));
    }
    return out;
}

struct SolverConfig {
    Rational lambda{1, 2};
    std::size_t max_iters = 1000;
    Rational epsilon{0};
    Rational price_floor{1, 1000000};
    /// 0 starts from all-ones; any other value jitters the start deterministically.
    std::uint64_t seed = 0;
    /// Significant bits kept in each price after an update.
    unsigned precision_bits = 64;
};

struct TraceRow {
    std::size_t iteration;
    Rational max_abs_slack;
    std::size_t goods_violating;
};

struct TatonnementResult {
    PriceVector prices;
    Allocation allocation;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<TraceRow> trace;
};

inline PriceVector starting_prices(std::size_t goods, std::uint64_t seed) {
    PriceVector p(goods, Rational(1));
    if (seed == 0) {
        return p;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<long> dist(512, 2048);
    for (auto &x : p) {
        x = Rational(dist(rng), 1024);
    }
    return p;
}

/// Multiplicative price adjustment p ← max(floor, p·(1 + λ·(D − 1))).
/// Convergence means the canonical allocation passes verify_fisher at the
/// configured ε. On failure the best prices seen are returned.
inline TatonnementResult tatonnement(const FisherMarket &market, const SolverConfig &config) {
    if (!config.lambda.is_positive()) {
        throw std::invalid_argument("lambda must be positive");
    }
    if (!config.price_floor.is_positive()) {
        throw std::invalid_argument("price floor must be positive");
    }
    TatonnementResult out;
    PriceVector p = starting_prices(market.good_count(), config.seed);
    std::optional<Rational> best_slack;
    for (std::size_t it = 0;; ++it) {
        DemandProfile demand = canonical_demand(market, p);
        EquilibriumReport report = verify_fisher(market, p, demand.bundles, config.epsilon);
        Rational slack = report.max_abs_slack();
        out.trace.push_back({it, slack, report.goods_violating()});
        if (!best_slack || slack < *best_slack) {
            best_slack = slack;
            out.prices = p;
            out.allocation = demand.bundles;
            out.iterations = it;
        }
        if (report.pass) {
            out.prices = p;
            out.allocation = std::move(demand.bundles);
            out.iterations = it;
            out.converged = true;
            return out;
        }
        if (it >= config.max_iters) {
            return out;
        }
        for (GoodId g = 0; g < p.size(); ++g) {
            Rational next = p[g] * (Rational(1) + config.lambda * (demand.aggregate[g] - Rational(1)));
            p[g] = max(config.price_floor, round_significant_bits(next, config.precision_bits));
        }
    }
}

struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BisectionResult {
    Rational price;
    /// Demand set for the free good at `price`.
    Rational demand_min;
    Rational demand_max;
    /// 1 lies in the demand set.
    bool exact = false;
    /// Some point of the demand set is within ε of 1.
    bool cleared = false;
    std::size_t evaluations = 0;
};

/// Set-valued demand for one good with every other price fixed.
class FreeGoodDemand {
public:
    FreeGoodDemand(const FisherMarket &market, const std::vector<std::optional<Rational>> &pinned, GoodId free)
        : market_(market), free_(free) {
        if (pinned.size() != market.good_count()) {
            throw std::invalid_argument("pinned price vector does not cover the market");
        }
        if (free >= market.good_count()) {
            throw std::invalid_argument("free good out of range");
        }
        prices_.resize(pinned.size());
        for (GoodId g = 0; g < pinned.size(); ++g) {
            if (g == free) {
                continue;
            }
            if (!pinned[g]) {
                throw std::invalid_argument("good \"" + market.goods()[g] + "\" is neither pinned nor free");
            }
            prices_[g] = *pinned[g];
        }
        for (BuyerId b = 0; b < market.buyer_count(); ++b) {
            const Buyer &buyer = market.buyers()[b];
            bool wants = buyer.utility_for(free) != nullptr;
            bool never_leftover = false;
            for (const auto &[g, u] : buyer.utilities) {
                if (g != free && u.strictly_increasing() && prices_[g].is_positive()) {
                    never_leftover = true;
                }
            }
            if (wants || !never_leftover) {
                relevant_.push_back(b);
            }
        }
    }

    std::pair<Rational, std::optional<Rational>> at(const Rational &price) {
        prices_[free_] = price;
        ++evaluations_;
        Rational lo = 0;
        std::optional<Rational> hi = Rational(0);
        for (BuyerId b : relevant_) {
            DemandRange r = demand_range(market_.buyers()[b], prices_, free_);
            lo += r.min;
            if (hi && r.max) {
                *hi += *r.max;
            } else {
                hi.reset();
            }
        }
        return {lo, hi};
    }

    /// Prices of the free good at which some relevant buyer is indifferent
    /// between one of its segments and a segment of another good.
    std::vector<Rational> tie_points() const {
        std::set<Rational> out;
        for (BuyerId b : relevant_) {
            const Buyer &buyer = market_.buyers()[b];
            const SplcUtility *uf = buyer.utility_for(free_);
            if (uf == nullptr) {
                continue;
            }
            for (const auto &fs : uf->segments()) {
                if (!fs.slope.is_positive()) {
                    continue;
                }
                for (const auto &[g, u] : buyer.utilities) {
                    if (g == free_ || !prices_[g].is_positive()) {
                        continue;
                    }
                    for (const auto &os : u.segments()) {
                        if (os.slope.is_positive()) {
                            out.insert(fs.slope * prices_[g] / os.slope);
                        }
                    }
                }
            }
        }
        return {out.begin(), out.end()};
    }

    std::size_t evaluations() const { return evaluations_; }

private:
    const FisherMarket &market_;
    GoodId free_;
    PriceVector prices_;
    std::vector<BuyerId> relevant_;
    std::size_t evaluations_ = 0;
};

/// Finds a clearing price for `free_good` with every other price pinned.
///
/// Demand is treated as set-valued, so a price counts as exact when 1 lies
/// in the demand set. Breakpoints where a buyer is indifferent between two
/// segments are checked first (demand jumps there); between them the bracket
/// is bisected with exact midpoints and finished with an exact fit of
/// D(P) = α + β/P, which is the shape of demand away from breakpoints.
inline BisectionResult pinned_bisection(const FisherMarket &market, const std::vector<std::optional<Rational>> &pinned,
                                        GoodId free_good, Rational lo, Rational hi, const Rational &tolerance,
                                        const Rational &eps) {
    if (!lo.is_positive() || hi <= lo) {
        throw BracketError("bracket must satisfy 0 < lo < hi");
    }
    FreeGoodDemand demand(market, pinned, free_good);
    auto result = [&](const Rational &price, const std::pair<Rational, std::optional<Rational>> &d) {
        BisectionResult r;
        r.price = price;
        r.demand_min = d.first;
        r.demand_max = d.second ? *d.second : d.first;
        bool unbounded = !d.second.has_value();
        r.exact = d.first <= Rational(1) && (unbounded || *d.second >= Rational(1));
        r.cleared = d.first <= Rational(1) + eps && (unbounded || *d.second >= Rational(1) - eps);
        r.evaluations = demand.evaluations();
        return r;
    };
    // +1: demand above 1 everywhere in the set; -1: below; 0: contains 1.
    auto side = [](const std::pair<Rational, std::optional<Rational>> &d) {
        if (d.first > Rational(1)) {
            return 1;
        }
        if (d.second && *d.second < Rational(1)) {
            return -1;
        }
        return 0;
    };
    auto d_lo = demand.at(lo);
    auto d_hi = demand.at(hi);
    if (d_lo.second && *d_lo.second < d_hi.first) {
        throw BracketError("demand increases across the bracket (monotonicity assumption fails)");
    }
    if (side(d_lo) < 0 || side(d_hi) > 0) {
        throw BracketError("bracket does not straddle the clearing price: demand " + d_lo.first.str() + " at lo, " +
                           d_hi.first.str() + " at hi");
    }
    if (side(d_lo) == 0) {
        return result(lo, d_lo);
    }
    if (side(d_hi) == 0) {
        return result(hi, d_hi);
    }

    std::vector<Rational> ties;
    for (const auto &p : demand.tie_points()) {
        if (p > lo && p < hi) {
            ties.push_back(p);
        }
    }
    // Narrow to a pair of neighbouring breakpoints.
    std::size_t a = 0;
    std::size_t b = ties.size();
    while (a < b) {
        std::size_t mid = a + (b - a) / 2;
        auto d = demand.at(ties[mid]);
        int s = side(d);
        if (s == 0) {
            return result(ties[mid], d);
        }
        if (s > 0) {
            lo = ties[mid];
            d_lo = d;
            a = mid + 1;
        } else {
            hi = ties[mid];
            d_hi = d;
            b = mid;
        }
    }

    auto fit = [&](const Rational &l, const Rational &h, const std::pair<Rational, std::optional<Rational>> &dl,
                   const std::pair<Rational, std::optional<Rational>> &dh) -> std::optional<BisectionResult> {
        if (!dl.second || !dh.second || dl.first != *dl.second || dh.first != *dh.second) {
            return std::nullopt;
        }
        Rational inv_gap = Rational(1) / l - Rational(1) / h;
        Rational beta = (dl.first - dh.first) / inv_gap;
        Rational alpha = dl.first - beta / l;
        if (alpha == Rational(1) || beta.is_zero()) {
            return std::nullopt;
        }
        Rational p = beta / (Rational(1) - alpha);
        if (p <= l || p >= h) {
            return std::nullopt;
        }
        auto d = demand.at(p);
        if (side(d) == 0) {
            return result(p, d);
        }
        return std::nullopt;
    };

    if (auto r = fit(lo, hi, d_lo, d_hi)) {
        return *r;
    }
    while (hi - lo > tolerance) {
        Rational mid = (lo + hi) / Rational(2);
        auto d = demand.at(mid);
        int s = side(d);
        if (s == 0) {
            return result(mid, d);
        }
        if (s > 0) {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
            d_hi = d;
        }
        if (auto r = fit(lo, hi, d_lo, d_hi)) {
            return *r;
        }
    }
    Rational mid = (lo + hi) / Rational(2);
    return result(mid, demand.at(mid));
}

struct GridResult {
    PriceVector prices;
    Allocation allocation;
};

/// Lexicographic scan over at most three free goods (the first listed good
/// varies slowest). Returns the first point whose canonical demand clears
/// every free good to within ε. Pinned goods are not required to clear.
inline std::optional<GridResult> grid_search(const FisherMarket &market, const Rational &eps,
                                             const std::vector<GoodId> &free_goods,
                                             const std::vector<std::vector<Rational>> &grids,
                                             const std::vector<std::optional<Rational>> &pinned) {
    if (free_goods.size() > 3) {
        throw std::invalid_argument("grid search supports at most 3 free goods");
    }
    if (grids.size() != free_goods.size()) {
        throw std::invalid_argument("one grid per free good is required");
    }
    if (pinned.size() != market.good_count()) {
        throw std::invalid_argument("pinned price vector does not cover the market");
    }
    PriceVector p(market.good_count());
    std::vector<char> is_free(market.good_count(), 0);
    for (GoodId g : free_goods) {
        if (g >= market.good_count()) {
            throw std::invalid_argument("free good out of range");
        }
        is_free[g] = 1;
    }
    for (GoodId g = 0; g < market.good_count(); ++g) {
        if (!is_free[g]) {
            if (!pinned[g]) {
                throw std::invalid_argument("good \"" + market.goods()[g] + "\" is neither pinned nor free");
            }
            p[g] = *pinned[g];
        }
    }
    for (const auto &grid : grids) {
        if (grid.empty()) {
            return std::nullopt;
        }
    }
    std::vector<std::size_t> idx(free_goods.size(), 0);
    while (true) {
        for (std::size_t i = 0; i < free_goods.size(); ++i) {
            p[free_goods[i]] = grids[i][idx[i]];
        }
        bool positive = std::all_of(p.begin(), p.end(), [](const Rational &x) { return x.is_positive(); });
        if (positive) {
            DemandProfile d = canonical_demand(market, p);
            bool ok = std::all_of(free_goods.begin(), free_goods.end(), [&](GoodId g) {
                return (d.aggregate[g] - Rational(1)).abs() <= eps;
            });
            if (ok) {
                return GridResult{p, std::move(d.bundles)};
            }
        }
        std::size_t pos = free_goods.size();
        while (pos > 0) {
            --pos;
            if (++idx[pos] < grids[pos].size()) {
                break;
            }
            idx[pos] = 0;
            if (pos == 0) {
                return std::nullopt;
            }
        }
        if (free_goods.empty()) {
            return std::nullopt;
        }
    }
}

inline std::optional<GridResult> grid_search(const FisherMarket &market, const Rational &eps,
                                             const std::vector<GoodId> &free_goods, const std::vector<Rational> &grid,
                                             const std::vector<std::optional<Rational>> &pinned) {
    return grid_search(market, eps, free_goods, std::vector<std::vector<Rational>>(free_goods.size(), grid), pinned);
}

}  // namespace splc
