#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "market.hpp"

namespace splc {

using Json = nlohmann::ordered_json;

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rational rational_from_json(const Json &j, const std::string &where) {
    if (!j.is_string()) {
        throw FormatError(where + ": rationals must be JSON strings \"p/q\"");
    }
    try {
        return Rational::parse(j.get<std::string>());
    } catch (const std::invalid_argument &e) {
        throw FormatError(where + ": " + e.what());
    }
}

inline const Json &require(const Json &j, const char *key, const std::string &where) {
    if (!j.is_object() || !j.contains(key)) {
        throw FormatError(where + ": missing key \"" + key + "\"");
    }
    return j.at(key);
}

inline Json utility_to_json(const SplcUtility &u) {
    Json segs = Json::array();
    for (const auto &seg : u.segments()) {
        segs.push_back({{"length", seg.length ? seg.length->str() : "inf"}, {"slope", seg.slope.str()}});
    }
    return segs;
}

inline SplcUtility utility_from_json(const Json &j, const std::string &where) {
    if (!j.is_array()) {
        throw FormatError(where + ": utility must be a list of segments");
    }
    std::vector<SplcSegment> segs;
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::string w = where + "[" + std::to_string(i) + "]";
        const Json &len = require(j[i], "length", w);
        SplcSegment seg;
        if (len.is_string() && len.get<std::string>() == "inf") {
            seg.length = std::nullopt;
        } else {
            seg.length = rational_from_json(len, w + ".length");
        }
        seg.slope = rational_from_json(require(j[i], "slope", w), w + ".slope");
        segs.push_back(seg);
    }
    try {
        return SplcUtility(std::move(segs));
    } catch (const std::invalid_argument &e) {
        throw FormatError(where + ": " + e.what());
    }
}

inline Json utilities_to_json(const UtilityMap &utilities, const std::vector<std::string> &goods) {
    Json out = Json::object();
    for (const auto &[g, u] : utilities) {
        out[goods[g]] = utility_to_json(u);
    }
    return out;
}

inline UtilityMap utilities_from_json(const Json &j, const std::unordered_map<std::string, GoodId> &index,
                                      const std::string &where) {
    if (!j.is_object()) {
        throw FormatError(where + ": utilities must be an object keyed by good");
    }
    UtilityMap out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto g = index.find(it.key());
        if (g == index.end()) {
            throw FormatError(where + ": unknown good \"" + it.key() + "\"");
        }
        out.emplace_back(g->second, utility_from_json(it.value(), where + "." + it.key()));
    }
    return out;
}

namespace detail {

inline std::vector<std::string> goods_from_json(const Json &doc,
                                                std::unordered_map<std::string, GoodId> &index) {
    const Json &goods = require(doc, "goods", "market");
    if (!goods.is_array()) {
        throw FormatError("market.goods must be a list of names");
    }
    std::vector<std::string> names;
    for (const auto &g : goods) {
        if (!g.is_string()) {
            throw FormatError("market.goods entries must be strings");
        }
        std::string name = g.get<std::string>();
        if (!index.emplace(name, names.size()).second) {
            throw FormatError("market.goods: duplicate good \"" + name + "\"");
        }
        names.push_back(name);
    }
    return names;
}

}  // namespace detail

inline Json market_to_json(const FisherMarket &market) {
    Json buyers = Json::array();
    for (const auto &b : market.buyers()) {
        Json jb;
        jb["id"] = b.id;
        jb["budget"] = b.budget.str();
        jb["utilities"] = utilities_to_json(b.utilities, market.goods());
        buyers.push_back(std::move(jb));
    }
    Json doc;
    doc["goods"] = market.goods();
    doc["buyers"] = std::move(buyers);
    return doc;
}

inline FisherMarket market_from_json(const Json &doc) {
    std::unordered_map<std::string, GoodId> index;
    auto names = detail::goods_from_json(doc, index);
    FisherMarket market;
    for (const auto &n : names) {
        market.add_good(n);
    }
    const Json &buyers = require(doc, "buyers", "market");
    if (!buyers.is_array()) {
        throw FormatError("market.buyers must be a list");
    }
    for (std::size_t i = 0; i < buyers.size(); ++i) {
        std::string where = "market.buyers[" + std::to_string(i) + "]";
        const Json &jb = buyers[i];
        if (jb.contains("endowments")) {
            throw FormatError(where + ": exchange document given where a Fisher market was expected");
        }
        const Json &id = require(jb, "id", where);
        if (!id.is_string()) {
            throw FormatError(where + ".id must be a string");
        }
        Buyer b{id.get<std::string>(), rational_from_json(require(jb, "budget", where), where + ".budget"),
                utilities_from_json(require(jb, "utilities", where), index, where + ".utilities")};
        try {
            market.add_buyer(std::move(b));
        } catch (const std::invalid_argument &e) {
            throw FormatError(where + ": " + e.what());
        }
    }
    return market;
}

inline Json exchange_to_json(const ExchangeMarket &market) {
    Json traders = Json::array();
    for (const auto &t : market.traders()) {
        Json jt;
        jt["id"] = t.id;
        Json endow = Json::object();
        for (const auto &[g, w] : t.endowments) {
            endow[market.goods()[g]] = w.str();
        }
        jt["endowments"] = std::move(endow);
        jt["utilities"] = utilities_to_json(t.utilities, market.goods());
        traders.push_back(std::move(jt));
    }
    Json doc;
    doc["goods"] = market.goods();
    doc["buyers"] = std::move(traders);
    return doc;
}

inline ExchangeMarket exchange_from_json(const Json &doc) {
    std::unordered_map<std::string, GoodId> index;
    auto names = detail::goods_from_json(doc, index);
    const Json &buyers = require(doc, "buyers", "exchange");
    if (!buyers.is_array()) {
        throw FormatError("exchange.buyers must be a list");
    }
    std::vector<Trader> traders;
    for (std::size_t i = 0; i < buyers.size(); ++i) {
        std::string where = "exchange.buyers[" + std::to_string(i) + "]";
        const Json &jt = buyers[i];
        const Json &id = require(jt, "id", where);
        if (!id.is_string()) {
            throw FormatError(where + ".id must be a string");
        }
        Trader t{id.get<std::string>(), {}, {}};
        const Json &endow = require(jt, "endowments", where);
        if (!endow.is_object()) {
            throw FormatError(where + ".endowments must be an object keyed by good");
        }
        for (auto it = endow.begin(); it != endow.end(); ++it) {
            auto g = index.find(it.key());
            if (g == index.end()) {
                throw FormatError(where + ".endowments: unknown good \"" + it.key() + "\"");
            }
            t.endowments.emplace_back(g->second, rational_from_json(it.value(), where + ".endowments." + it.key()));
        }
        t.utilities = utilities_from_json(require(jt, "utilities", where), index, where + ".utilities");
        traders.push_back(std::move(t));
    }
    try {
        return ExchangeMarket(std::move(names), std::move(traders));
    } catch (const std::invalid_argument &e) {
        throw FormatError(std::string("exchange: ") + e.what());
    }
}

inline Json prices_to_json(const std::vector<std::string> &goods, const PriceVector &prices) {
    Json out = Json::object();
    for (GoodId g = 0; g < goods.size(); ++g) {
        out[goods[g]] = prices.at(g).str();
    }
    return out;
}

/// Must name every good exactly once.
inline PriceVector prices_from_json(const Json &j, const std::vector<std::string> &goods) {
    if (!j.is_object()) {
        throw FormatError("prices must be an object keyed by good");
    }
    std::unordered_map<std::string, GoodId> index;
    for (GoodId g = 0; g < goods.size(); ++g) {
        index.emplace(goods[g], g);
    }
    std::vector<std::optional<Rational>> seen(goods.size());
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto g = index.find(it.key());
        if (g == index.end()) {
            throw FormatError("prices: unknown good \"" + it.key() + "\"");
        }
        seen[g->second] = rational_from_json(it.value(), "prices." + it.key());
    }
    PriceVector out;
    out.reserve(goods.size());
    for (GoodId g = 0; g < goods.size(); ++g) {
        if (!seen[g]) {
            throw FormatError("prices: no price for good \"" + goods[g] + "\"");
        }
        out.push_back(*seen[g]);
    }
    return out;
}

inline Json allocation_to_json(const std::vector<std::string> &goods, const std::vector<std::string> &buyers,
                               const Allocation &allocation) {
    Json out = Json::object();
    for (BuyerId b = 0; b < buyers.size(); ++b) {
        Json row = Json::object();
        for (const auto &[g, x] : allocation.at(b)) {
            row[goods[g]] = x.str();
        }
        out[buyers[b]] = std::move(row);
    }
    return out;
}

/// Buyers missing from the document get empty bundles.
inline Allocation allocation_from_json(const Json &j, const std::vector<std::string> &goods,
                                       const std::vector<std::string> &buyers) {
    if (!j.is_object()) {
        throw FormatError("allocation must be an object keyed by buyer");
    }
    std::unordered_map<std::string, GoodId> gidx;
    for (GoodId g = 0; g < goods.size(); ++g) {
        gidx.emplace(goods[g], g);
    }
    std::unordered_map<std::string, BuyerId> bidx;
    for (BuyerId b = 0; b < buyers.size(); ++b) {
        bidx.emplace(buyers[b], b);
    }
    Allocation out(buyers.size());
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto b = bidx.find(it.key());
        if (b == bidx.end()) {
            throw FormatError("allocation: unknown buyer \"" + it.key() + "\"");
        }
        if (!it.value().is_object()) {
            throw FormatError("allocation." + it.key() + " must be an object keyed by good");
        }
        for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
            auto g = gidx.find(jt.key());
            if (g == gidx.end()) {
                throw FormatError("allocation." + it.key() + ": unknown good \"" + jt.key() + "\"");
            }
            Rational x = rational_from_json(jt.value(), "allocation." + it.key() + "." + jt.key());
            if (x.is_negative()) {
                throw FormatError("allocation." + it.key() + "." + jt.key() + " is negative");
            }
            out[b->second][g->second] = x;
        }
    }
    return out;
}

inline std::vector<std::string> buyer_ids(const FisherMarket &market) {
    std::vector<std::string> out;
    out.reserve(market.buyer_count());
    for (const auto &b : market.buyers()) {
        out.push_back(b.id);
    }
    return out;
}

inline std::vector<std::string> buyer_ids(const ExchangeMarket &market) {
    std::vector<std::string> out;
    out.reserve(market.traders().size());
    for (const auto &t : market.traders()) {
        out.push_back(t.id);
    }
    return out;
}

inline const char *verdict_name(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::Optimal:
            return "optimal";
        case VerdictKind::Suboptimal:
            return "suboptimal";
        case VerdictKind::UnboundedDemand:
            return "unbounded-demand";
    }
    return "?";
}

inline Json report_to_json(const EquilibriumReport &report, const std::vector<std::string> &goods,
                           const std::vector<std::string> &buyers) {
    Json doc;
    doc["verdict"] = report.pass ? "pass" : "fail";
    doc["epsilon"] = report.epsilon.str();
    doc["max_abs_slack"] = report.max_abs_slack().str();
    doc["goods_violating"] = report.goods_violating();
    Json slack = Json::object();
    for (GoodId g = 0; g < goods.size(); ++g) {
        slack[goods[g]] = report.slack[g].str();
    }
    doc["slack"] = std::move(slack);
    Json verdicts = Json::object();
    for (BuyerId b = 0; b < buyers.size(); ++b) {
        const auto &v = report.buyers[b];
        Json jv;
        jv["verdict"] = verdict_name(v.kind);
        if (v.kind == VerdictKind::Suboptimal) {
            jv["achieved"] = v.achieved.str();
            jv["max"] = v.max.str();
            jv["overspent"] = v.overspent;
        }
        verdicts[buyers[b]] = std::move(jv);
    }
    doc["buyers"] = std::move(verdicts);
    return doc;
}

}  // namespace splc
