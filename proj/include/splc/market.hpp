#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rational.hpp"

namespace splc {

using GoodId = std::size_t;
using BuyerId = std::size_t;

/// One linear piece of a per-good utility. `length == nullopt` means the
/// piece extends forever; only the last piece of a utility may do that.
struct SplcSegment {
    std::optional<Rational> length;
    Rational slope;

    bool bounded() const { return length.has_value(); }
    bool operator==(const SplcSegment &) const = default;
};

/// Separable piecewise-linear concave utility for a single good, u(0) = 0.
/// After the last bounded segment the utility is flat.
class SplcUtility {
public:
    SplcUtility() = default;

    explicit SplcUtility(std::vector<SplcSegment> segments) : segments_(std::move(segments)) {
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const auto &seg = segments_[i];
            if (seg.slope.is_negative()) {
                throw std::invalid_argument("utility segment slope must be >= 0");
            }
            if (seg.length && !seg.length->is_positive()) {
                throw std::invalid_argument("utility segment length must be > 0");
            }
            if (!seg.length && i + 1 != segments_.size()) {
                throw std::invalid_argument("only the last utility segment may be unbounded");
            }
            if (i > 0 && seg.slope > segments_[i - 1].slope) {
                throw std::invalid_argument("utility slopes must be non-increasing (concavity)");
            }
        }
    }

    /// Linear with the given slope, forever.
    static SplcUtility linear(const Rational &slope) { return SplcUtility({{std::nullopt, slope}}); }

    /// Slope `slope` up to `cap` units, flat afterwards.
    static SplcUtility capped(const Rational &slope, const Rational &cap) { return SplcUtility({{cap, slope}}); }

    const std::vector<SplcSegment> &segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }

    Rational value(const Rational &amount) const {
        if (amount.is_negative()) {
            throw std::invalid_argument("utility evaluated at a negative amount");
        }
        Rational total = 0;
        Rational left = amount;
        for (const auto &seg : segments_) {
            if (left.is_zero()) {
                break;
            }
            Rational take = seg.length ? min(*seg.length, left) : left;
            total += take * seg.slope;
            left -= take;
        }
        return total;
    }

    /// True when the utility keeps growing without bound (final segment
    /// unbounded with positive slope).
    bool strictly_increasing() const {
        return !segments_.empty() && !segments_.back().length && segments_.back().slope.is_positive();
    }

    bool operator==(const SplcUtility &) const = default;

private:
    std::vector<SplcSegment> segments_;
};

/// Per-good utilities of one buyer, sorted by GoodId.
using UtilityMap = std::vector<std::pair<GoodId, SplcUtility>>;

struct Buyer {
    std::string id;
    Rational budget;
    UtilityMap utilities;

    const SplcUtility *utility_for(GoodId g) const {
        auto it = std::lower_bound(utilities.begin(), utilities.end(), g,
                                   [](const auto &entry, GoodId key) { return entry.first < key; });
        if (it == utilities.end() || it->first != g) {
            return nullptr;
        }
        return &it->second;
    }
};

namespace detail {

inline void normalize_utilities(UtilityMap &utilities, std::size_t good_count) {
    std::sort(utilities.begin(), utilities.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    for (std::size_t i = 0; i < utilities.size(); ++i) {
        if (utilities[i].first >= good_count) {
            throw std::invalid_argument("utility refers to unknown good " + std::to_string(utilities[i].first));
        }
        if (i > 0 && utilities[i].first == utilities[i - 1].first) {
            throw std::invalid_argument("two utilities for good " + std::to_string(utilities[i].first));
        }
    }
}

}  // namespace detail

/// Goods with unit supply and buyers with fixed budgets.
class FisherMarket {
public:
    GoodId add_good(const std::string &name) {
        if (index_.count(name)) {
            throw std::invalid_argument("duplicate good \"" + name + "\"");
        }
        index_.emplace(name, goods_.size());
        goods_.push_back(name);
        return goods_.size() - 1;
    }

    BuyerId add_buyer(Buyer buyer) {
        if (!buyer.budget.is_positive()) {
            throw std::invalid_argument("buyer \"" + buyer.id + "\" must have a positive budget");
        }
        if (buyer_index_.count(buyer.id)) {
            throw std::invalid_argument("duplicate buyer \"" + buyer.id + "\"");
        }
        detail::normalize_utilities(buyer.utilities, goods_.size());
        buyer_index_.emplace(buyer.id, buyers_.size());
        buyers_.push_back(std::move(buyer));
        return buyers_.size() - 1;
    }

    const std::vector<std::string> &goods() const { return goods_; }
    const std::vector<Buyer> &buyers() const { return buyers_; }
    std::size_t good_count() const { return goods_.size(); }
    std::size_t buyer_count() const { return buyers_.size(); }

    GoodId good(const std::string &name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            throw std::out_of_range("unknown good \"" + name + "\"");
        }
        return it->second;
    }

    BuyerId buyer(const std::string &id) const {
        auto it = buyer_index_.find(id);
        if (it == buyer_index_.end()) {
            throw std::out_of_range("unknown buyer \"" + id + "\"");
        }
        return it->second;
    }

private:
    std::vector<std::string> goods_;
    std::unordered_map<std::string, GoodId> index_;
    std::vector<Buyer> buyers_;
    std::unordered_map<std::string, BuyerId> buyer_index_;
};

struct Trader {
    std::string id;
    /// Sparse, sorted by GoodId; absent entries are 0.
    std::vector<std::pair<GoodId, Rational>> endowments;
    UtilityMap utilities;
};

/// Arrow-Debreu exchange market: every good's endowments sum to 1.
class ExchangeMarket {
public:
    ExchangeMarket(std::vector<std::string> goods, std::vector<Trader> traders)
        : goods_(std::move(goods)), traders_(std::move(traders)) {
        std::vector<Rational> column(goods_.size(), Rational(0));
        for (auto &t : traders_) {
            detail::normalize_utilities(t.utilities, goods_.size());
            std::sort(t.endowments.begin(), t.endowments.end(),
                      [](const auto &a, const auto &b) { return a.first < b.first; });
            for (std::size_t i = 0; i < t.endowments.size(); ++i) {
                const auto &[g, w] = t.endowments[i];
                if (g >= goods_.size()) {
                    throw std::invalid_argument("endowment of unknown good " + std::to_string(g));
                }
                if (i > 0 && t.endowments[i - 1].first == g) {
                    throw std::invalid_argument("two endowments of good " + std::to_string(g));
                }
                if (w.is_negative()) {
                    throw std::invalid_argument("negative endowment for trader \"" + t.id + "\"");
                }
                column[g] += w;
            }
        }
        for (GoodId g = 0; g < goods_.size(); ++g) {
            if (column[g] != Rational(1)) {
                throw std::invalid_argument("endowments of good \"" + goods_[g] + "\" sum to " + column[g].str() +
                                            ", not 1");
            }
        }
    }

    const std::vector<std::string> &goods() const { return goods_; }
    const std::vector<Trader> &traders() const { return traders_; }

private:
    std::vector<std::string> goods_;
    std::vector<Trader> traders_;
};

/// Dense, indexed by GoodId.
using PriceVector = std::vector<Rational>;
/// Sparse bundle of one buyer; absent goods are 0.
using AllocationRow = std::map<GoodId, Rational>;
/// Indexed by BuyerId.
using Allocation = std::vector<AllocationRow>;

struct UnboundedDemand : std::runtime_error {
    GoodId good;
    std::string buyer;

    UnboundedDemand(GoodId good, std::string buyer)
        : std::runtime_error("unbounded demand for good " + std::to_string(good) +
                             (buyer.empty() ? std::string() : " by buyer \"" + buyer + "\"")),
          good(good),
          buyer(std::move(buyer)) {}
};

inline Rational utility_value(const SplcUtility &u, const Rational &amount) { return u.value(amount); }

inline Rational row_utility(const UtilityMap &utilities, const AllocationRow &row) {
    Rational total = 0;
    for (const auto &[g, u] : utilities) {
        auto it = row.find(g);
        if (it != row.end()) {
            total += u.value(it->second);
        }
    }
    return total;
}

inline Rational row_spend(const AllocationRow &row, const PriceVector &prices) {
    Rational total = 0;
    for (const auto &[g, x] : row) {
        total += prices.at(g) * x;
    }
    return total;
}

struct BundleResult {
    Rational max_utility;
    AllocationRow bundle;
    Rational spend;
};

namespace detail {

struct SegmentItem {
    GoodId good;
    std::size_t index;
    const SplcSegment *seg;
};

/// Purchase order for the greedy: bang-per-buck descending, then (good,
/// segment index). Free bounded segments come first.
inline std::vector<SegmentItem> ranked_segments(const UtilityMap &utilities, const PriceVector &prices,
                                                const std::string &who) {
    std::vector<SegmentItem> items;
    for (const auto &[g, u] : utilities) {
        const auto &segs = u.segments();
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (!segs[i].slope.is_positive()) {
                continue;
            }
            if (prices.at(g).is_zero() && !segs[i].bounded()) {
                throw UnboundedDemand(g, who);
            }
            items.push_back({g, i, &segs[i]});
        }
    }
    std::stable_sort(items.begin(), items.end(), [&](const SegmentItem &a, const SegmentItem &b) {
        const Rational &pa = prices[a.good];
        const Rational &pb = prices[b.good];
        // a ranks above b when slope_a / p_a > slope_b / p_b; zero prices rank highest.
        auto c = (a.seg->slope * pb) <=> (b.seg->slope * pa);
        if (pa.is_zero() != pb.is_zero()) {
            return pa.is_zero();
        }
        if (c != 0) {
            return c > 0;
        }
        if (a.good != b.good) {
            return a.good < b.good;
        }
        return a.index < b.index;
    });
    return items;
}

inline bool same_bang(const SegmentItem &a, const SegmentItem &b, const PriceVector &prices) {
    const Rational &pa = prices[a.good];
    const Rational &pb = prices[b.good];
    if (pa.is_zero() || pb.is_zero()) {
        return pa.is_zero() && pb.is_zero();
    }
    return a.seg->slope * pb == b.seg->slope * pa;
}

}  // namespace detail

/// Greedy optimal bundle for the given utilities and budget: buy whole
/// segments in bang-per-buck order until the budget runs out.
inline BundleResult optimal_bundle(const UtilityMap &utilities, const Rational &budget, const PriceVector &prices,
                                   const std::string &who = "") {
    BundleResult out{Rational(0), {}, Rational(0)};
    Rational left = budget;
    for (const auto &item : detail::ranked_segments(utilities, prices, who)) {
        const Rational &p = prices[item.good];
        Rational amount;
        if (p.is_zero()) {
            amount = *item.seg->length;
        } else {
            if (left.is_zero()) {
                break;
            }
            Rational affordable = left / p;
            amount = item.seg->length ? min(*item.seg->length, affordable) : affordable;
        }
        Rational cost = amount * p;
        out.bundle[item.good] += amount;
        out.max_utility += amount * item.seg->slope;
        out.spend += cost;
        left -= cost;
    }
    return out;
}

inline BundleResult optimal_bundle(const Buyer &buyer, const PriceVector &prices) {
    return optimal_bundle(buyer.utilities, buyer.budget, prices, buyer.id);
}

/// Range of x_g over the whole optimal set; `max == nullopt` means unbounded.
struct DemandRange {
    Rational min;
    std::optional<Rational> max;
};

/// The set of optimal bundles is described tier by tier: tiers of strictly
/// higher bang-per-buck are bought in full, the marginal tier shares the
/// remaining budget arbitrarily, and money left after every positive tier may
/// be spent on anything.
inline DemandRange demand_range(const UtilityMap &utilities, const Rational &budget, const PriceVector &prices,
                                GoodId good, const std::string &who = "") {
    auto items = detail::ranked_segments(utilities, prices, who);
    const Rational &pg = prices.at(good);
    Rational fixed = 0;
    Rational left = budget;
    std::size_t i = 0;
    // Free segments are always bought in full.
    while (i < items.size() && prices[items[i].good].is_zero()) {
        if (items[i].good == good) {
            fixed += *items[i].seg->length;
        }
        ++i;
    }
    if (pg.is_zero()) {
        return {fixed, std::nullopt};
    }
    while (i < items.size()) {
        std::size_t j = i;
        std::optional<Rational> tier_cost = Rational(0);
        std::optional<Rational> own_qty = Rational(0);
        std::optional<Rational> others_cost = Rational(0);
        while (j < items.size() && detail::same_bang(items[i], items[j], prices)) {
            const auto &it = items[j];
            if (it.seg->length) {
                Rational cost = *it.seg->length * prices[it.good];
                if (tier_cost) {
                    *tier_cost += cost;
                }
                if (it.good == good) {
                    if (own_qty) {
                        *own_qty += *it.seg->length;
                    }
                } else if (others_cost) {
                    *others_cost += cost;
                }
            } else {
                tier_cost.reset();
                if (it.good == good) {
                    own_qty.reset();
                } else {
                    others_cost.reset();
                }
            }
            ++j;
        }
        if (tier_cost && *tier_cost <= left) {
            fixed += *own_qty;
            left -= *tier_cost;
            i = j;
            continue;
        }
        // Marginal tier: the budget runs out inside it.
        Rational lo = fixed;
        if (others_cost && *others_cost < left) {
            lo += (left - *others_cost) / pg;
        }
        Rational hi = fixed + (own_qty ? min(*own_qty, left / pg) : left / pg);
        return {lo, hi};
    }
    return {fixed, fixed + left / pg};
}

inline DemandRange demand_range(const Buyer &buyer, const PriceVector &prices, GoodId good) {
    return demand_range(buyer.utilities, buyer.budget, prices, good, buyer.id);
}

enum class VerdictKind { Optimal, Suboptimal, UnboundedDemand };

struct BuyerVerdict {
    VerdictKind kind = VerdictKind::Optimal;
    Rational achieved;
    Rational max;
    bool overspent = false;

    bool optimal() const { return kind == VerdictKind::Optimal; }
};

inline BuyerVerdict assess_bundle(const UtilityMap &utilities, const Rational &budget, const PriceVector &prices,
                                  const AllocationRow &row, const std::string &who = "") {
    BuyerVerdict v;
    for (const auto &[g, x] : row) {
        if (x.is_negative()) {
            throw std::invalid_argument("negative allocation for buyer \"" + who + "\"");
        }
        (void)g;
    }
    BundleResult best;
    try {
        best = optimal_bundle(utilities, budget, prices, who);
    } catch (const UnboundedDemand &) {
        v.kind = VerdictKind::UnboundedDemand;
        v.achieved = row_utility(utilities, row);
        return v;
    }
    v.achieved = row_utility(utilities, row);
    v.max = best.max_utility;
    v.overspent = row_spend(row, prices) > budget;
    v.kind = (!v.overspent && v.achieved == v.max) ? VerdictKind::Optimal : VerdictKind::Suboptimal;
    return v;
}

/// Membership in the optimal set, judged by value rather than by identity
/// with the greedy's bundle. Throws UnboundedDemand.
inline bool is_optimal(const Buyer &buyer, const PriceVector &prices, const AllocationRow &row) {
    auto best = optimal_bundle(buyer, prices);
    return row_spend(row, prices) <= buyer.budget && row_utility(buyer.utilities, row) == best.max_utility;
}

struct EquilibriumReport {
    Rational epsilon;
    /// Σ_i x_ij − 1 per good.
    std::vector<Rational> slack;
    std::vector<BuyerVerdict> buyers;
    bool pass = false;

    std::size_t goods_violating() const {
        return static_cast<std::size_t>(
            std::count_if(slack.begin(), slack.end(), [&](const Rational &s) { return s.abs() > epsilon; }));
    }

    Rational max_abs_slack() const {
        Rational m = 0;
        for (const auto &s : slack) {
            m = max(m, s.abs());
        }
        return m;
    }
};

namespace detail {

inline void check_shapes(std::size_t goods, std::size_t buyers, const PriceVector &prices,
                         const Allocation &allocation, const Rational &eps) {
    if (eps.is_negative()) {
        throw std::invalid_argument("epsilon must be >= 0");
    }
    if (prices.size() != goods) {
        throw std::invalid_argument("price vector has " + std::to_string(prices.size()) + " entries for " +
                                    std::to_string(goods) + " goods");
    }
    for (const auto &p : prices) {
        if (p.is_negative()) {
            throw std::invalid_argument("negative price");
        }
    }
    if (allocation.size() != buyers) {
        throw std::invalid_argument("allocation has " + std::to_string(allocation.size()) + " rows for " +
                                    std::to_string(buyers) + " buyers");
    }
    for (const auto &row : allocation) {
        for (const auto &[g, x] : row) {
            if (g >= goods) {
                throw std::invalid_argument("allocation refers to unknown good " + std::to_string(g));
            }
        }
    }
}

inline void finish_report(EquilibriumReport &report, const Allocation &allocation, std::size_t goods) {
    report.slack.assign(goods, Rational(-1));
    for (const auto &row : allocation) {
        for (const auto &[g, x] : row) {
            report.slack[g] += x;
        }
    }
    bool ok = std::all_of(report.buyers.begin(), report.buyers.end(), [](const auto &v) { return v.optimal(); });
    report.pass = ok && report.goods_violating() == 0;
}

}  // namespace detail

inline EquilibriumReport verify_fisher(const FisherMarket &market, const PriceVector &prices,
                                       const Allocation &allocation, const Rational &eps) {
    detail::check_shapes(market.good_count(), market.buyer_count(), prices, allocation, eps);
    EquilibriumReport report;
    report.epsilon = eps;
    report.buyers.reserve(market.buyer_count());
    for (BuyerId b = 0; b < market.buyer_count(); ++b) {
        const auto &buyer = market.buyers()[b];
        report.buyers.push_back(assess_bundle(buyer.utilities, buyer.budget, prices, allocation[b], buyer.id));
    }
    detail::finish_report(report, allocation, market.good_count());
    return report;
}

inline Rational endowment_value(const Trader &trader, const PriceVector &prices) {
    Rational total = 0;
    for (const auto &[g, w] : trader.endowments) {
        total += prices.at(g) * w;
    }
    return total;
}

/// Budgets are the endowment values at `prices`; prices are not rescaled.
inline EquilibriumReport verify_exchange(const ExchangeMarket &market, const PriceVector &prices,
                                         const Allocation &allocation, const Rational &eps) {
    detail::check_shapes(market.goods().size(), market.traders().size(), prices, allocation, eps);
    EquilibriumReport report;
    report.epsilon = eps;
    for (std::size_t i = 0; i < market.traders().size(); ++i) {
        const auto &t = market.traders()[i];
        report.buyers.push_back(assess_bundle(t.utilities, endowment_value(t, prices), prices, allocation[i], t.id));
    }
    detail::finish_report(report, allocation, market.goods().size());
    return report;
}

inline Rational total_budget(const FisherMarket &market) {
    Rational total = 0;
    for (const auto &b : market.buyers()) {
        total += b.budget;
    }
    return total;
}

/// Every trader owns the share e_i / Σ e of every good.
inline ExchangeMarket to_exchange(const FisherMarket &fisher) {
    Rational total = total_budget(fisher);
    std::vector<Trader> traders;
    traders.reserve(fisher.buyer_count());
    for (const auto &b : fisher.buyers()) {
        Trader t{b.id, {}, b.utilities};
        Rational share = b.budget / total;
        t.endowments.reserve(fisher.good_count());
        for (GoodId g = 0; g < fisher.good_count(); ++g) {
            t.endowments.emplace_back(g, share);
        }
        traders.push_back(std::move(t));
    }
    return ExchangeMarket(fisher.goods(), std::move(traders));
}

/// Scales prices so that they sum to `target_sum`.
inline PriceVector normalize_prices(const PriceVector &prices, const Rational &target_sum) {
    Rational sum = 0;
    for (const auto &p : prices) {
        sum += p;
    }
    if (sum.is_zero()) {
        throw std::invalid_argument("cannot normalize an all-zero price vector");
    }
    Rational factor = target_sum / sum;
    PriceVector out;
    out.reserve(prices.size());
    for (const auto &p : prices) {
        out.push_back(p * factor);
    }
    return out;
}

/// Every buyer has some utility that keeps growing without bound.
inline bool satisfies_sufficient_condition(const FisherMarket &market) {
    return std::all_of(market.buyers().begin(), market.buyers().end(), [](const Buyer &b) {
        return std::any_of(b.utilities.begin(), b.utilities.end(),
                           [](const auto &e) { return e.second.strictly_increasing(); });
    });
}

/// Economy graph: edge i -> i' when i owns some good that i' desires without
/// bound. Checked via reachability through goods in both directions.
inline bool economy_graph_strongly_connected(const ExchangeMarket &market) {
    std::size_t n = market.traders().size();
    std::size_t m = market.goods().size();
    if (n <= 1) {
        return true;
    }
    std::vector<std::vector<std::size_t>> owners(m);
    std::vector<std::vector<std::size_t>> wanters(m);
    std::vector<std::vector<GoodId>> owns(n);
    std::vector<std::vector<GoodId>> wants(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = market.traders()[i];
        for (const auto &[g, w] : t.endowments) {
            if (w.is_positive()) {
                owners[g].push_back(i);
                owns[i].push_back(g);
            }
        }
        for (const auto &[g, u] : t.utilities) {
            if (u.strictly_increasing()) {
                wanters[g].push_back(i);
                wants[i].push_back(g);
            }
        }
    }
    auto reach_all = [&](const std::vector<std::vector<GoodId>> &out_goods,
                         const std::vector<std::vector<std::size_t>> &good_to) {
        std::vector<char> seen_t(n, 0);
        std::vector<char> seen_g(m, 0);
        std::vector<std::size_t> stack{0};
        seen_t[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            for (GoodId g : out_goods[i]) {
                if (seen_g[g]) {
                    continue;
                }
                seen_g[g] = 1;
                for (std::size_t k : good_to[g]) {
                    if (!seen_t[k]) {
                        seen_t[k] = 1;
                        ++count;
                        stack.push_back(k);
                    }
                }
            }
        }
        return count == n;
    };
    return reach_all(owns, wanters) && reach_all(wants, owners);
}

}  // namespace splc
