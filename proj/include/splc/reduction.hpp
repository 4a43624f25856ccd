#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "market.hpp"
#include "purecircuit.hpp"
#include "rational.hpp"

namespace splc {

struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when ε is outside [0, 1/11), where the construction is undefined.
struct EpsilonOutOfRange : std::domain_error {
    using std::domain_error::domain_error;
};

struct ParamOverride {
    unsigned long k;
    unsigned long d;
};

struct ReductionParams {
    Rational epsilon;
    Rational delta;
    Rational t;
    unsigned long d = 0;
    unsigned long k = 0;
    Rational s;
    Rational a;
    Rational r_not;
    Rational r_nand;
    Rational H_min;
    Rational H_max;
    /// |V| used in s: original nodes plus chain intermediates of one copy.
    std::size_t vertex_count = 0;
    /// Set whenever k or d did not come from the parameter table.
    bool overridden = false;

    bool guarantees_void() const { return overridden; }

    /// r^1_j: 0 for odd j, 2/11 for even j.
    Rational r_chain1(std::size_t j) const { return j % 2 == 1 ? Rational(0) : Rational(2, 11); }
    /// r^2_j: 2/11 for odd j, 0 for even j.
    Rational r_chain2(std::size_t j) const { return j % 2 == 1 ? Rational(2, 11) : Rational(0); }
    Rational r_chain(int chain, std::size_t j) const { return chain == 1 ? r_chain1(j) : r_chain2(j); }

    Rational copy_width() const { return (H_max - H_min) / Rational(k); }

    std::pair<Rational, Rational> copy_interval(std::size_t c) const {
        Rational w = copy_width();
        return {H_min + w * Rational(c), H_min + w * Rational(c + 1)};
    }

    std::vector<std::pair<Rational, Rational>> copy_intervals() const {
        std::vector<std::pair<Rational, Rational>> out;
        out.reserve(k);
        for (std::size_t c = 0; c < k; ++c) {
            out.push_back(copy_interval(c));
        }
        return out;
    }

    /// t̄ = t − 5/k, the least an inverter can buy of an input.
    Rational t_bar() const { return t - Rational(5) / Rational(k); }
};

inline Rational epsilon_limit() { return Rational(1, 11); }

inline void check_epsilon(const Rational &eps) {
    if (eps.is_negative() || eps >= epsilon_limit()) {
        throw EpsilonOutOfRange("epsilon " + eps.str() + " is outside [0, 1/11)");
    }
}

/// d = 2·⌈log₂(3/δ)⌉, depends on ε only.
inline unsigned long table_chain_length(const Rational &eps) {
    check_epsilon(eps);
    Rational delta = Rational(11, 4) * (epsilon_limit() - eps);
    return 2 * ceil_log2(Rational(3) / delta);
}

inline ReductionParams compute_params(const Rational &eps, std::size_t vertex_count,
                                      const std::optional<ParamOverride> &override = std::nullopt) {
    check_epsilon(eps);
    if (vertex_count == 0) {
        throw std::invalid_argument("vertex count must be at least 1");
    }
    ReductionParams p;
    p.epsilon = eps;
    p.delta = Rational(11, 4) * (epsilon_limit() - eps);
    p.t = Rational(4, 11);
    if (override) {
        if (override->k == 0) {
            throw std::invalid_argument("override k must be at least 1");
        }
        if (override->d < 2 || override->d % 2 != 0) {
            throw std::invalid_argument("override d must be even and at least 2");
        }
        p.k = override->k;
        p.d = override->d;
        p.overridden = true;
    } else {
        p.k = to_u64((Rational(110) / p.delta).ceil());
        p.d = 2 * ceil_log2(Rational(3) / p.delta);
    }
    p.vertex_count = vertex_count;
    p.s = Rational(1) / (Rational(20) * Rational(p.k) * Rational(p.d) * Rational(vertex_count));
    p.a = max(Rational(2), Rational(4) * p.s / p.delta);
    p.r_not = Rational(2, 11);
    p.r_nand = Rational(2, 11);
    p.H_min = p.s / Rational(2);
    p.H_max = Rational(2) * p.s;
    return p;
}

enum class GoodKind { Reference, Variable, ChainIntermediate };
enum class BuyerKind { Reference, Inverter, GateAux, TopUpAux };

struct GoodRole {
    GoodKind kind = GoodKind::Reference;
    std::size_t copy = 0;
    NodeId node = 0;
    std::size_t gate = 0;
    int chain = 0;
    std::size_t position = 0;
};

struct BuyerRole {
    BuyerKind kind = BuyerKind::Reference;
    std::size_t copy = 0;
    /// Index into ReducedMarket::gadgets for inverters and gate auxes.
    std::size_t gadget = 0;
    /// The good an aux buyer buys.
    GoodId good = 0;
    Rational r;
};

/// One inverter gadget: a circuit NOT/NAND gate, or one NOT link of a
/// PURIFY chain (chain 1 or 2, position j in 1..d).
struct GadgetInstance {
    std::string id;
    std::size_t copy = 0;
    std::size_t gate = 0;
    int chain = 0;
    std::size_t position = 0;
    GateType kind = GateType::Not;
    std::vector<GoodId> inputs;
    GoodId output = 0;
    BuyerId inverter = 0;
    std::optional<BuyerId> aux;
    Rational r;
};

struct PurifyLayout {
    std::size_t gate = 0;
    /// goods[i-1] = g^i_0 .. g^i_d for chain i.
    std::array<std::vector<GoodId>, 2> goods;
    /// gadgets[i-1][j-1] is the NOT link producing g^i_j.
    std::array<std::vector<std::size_t>, 2> gadgets;
};

struct CopyLayout {
    std::size_t copy = 0;
    Rational H_low;
    Rational H_high;
    std::vector<GoodId> node_goods;
    /// Gadget indices for circuit NOT/NAND gates, indexed by gate (nullopt for PURIFY).
    std::vector<std::optional<std::size_t>> gate_gadget;
    std::vector<PurifyLayout> purify;
    std::vector<BuyerId> top_ups;
};

struct CompileOptions {
    std::optional<ParamOverride> override;
    /// Materialize only these copies (full parameters are still computed
    /// for all k). Used by the gadget lab; the result is flagged partial.
    std::optional<std::vector<std::size_t>> only_copies;
};

struct ReducedMarket {
    FisherMarket market;
    ReductionParams params;
    CircuitInstance circuit;
    std::vector<GoodRole> good_roles;
    std::vector<BuyerRole> buyer_roles;
    std::vector<GadgetInstance> gadgets;
    std::vector<CopyLayout> copies;
    /// For every good, the gadget whose inverter produces it.
    std::vector<std::optional<std::size_t>> producer;
    GoodId ref_good = 0;
    BuyerId ref_buyer = 0;
    bool partial = false;

    const CopyLayout *layout(std::size_t copy) const {
        for (const auto &c : copies) {
            if (c.copy == copy) {
                return &c;
            }
        }
        return nullptr;
    }
};

/// Consumer slots of each node: NOT and NAND read an input once, PURIFY
/// feeds both chains from its input.
inline std::vector<std::size_t> consumer_slots(const CircuitInstance &circuit) {
    return interaction_degrees(circuit).out;
}

inline std::size_t expanded_vertex_count(const CircuitInstance &circuit, unsigned long d) {
    std::size_t purifies = static_cast<std::size_t>(std::count_if(
        circuit.gates.begin(), circuit.gates.end(), [](const Gate &g) { return g.type == GateType::Purify; }));
    return circuit.n + 2 * (d - 1) * purifies;
}

namespace detail {

inline std::string copy_prefix(std::size_t c) { return "c" + std::to_string(c) + "."; }

inline std::string chain_suffix(int chain, std::size_t j) {
    return ".ch" + std::to_string(chain) + "." + std::to_string(j);
}

class Compiler {
public:
    Compiler(ReducedMarket &out) : out_(out) {}

    GoodId good(const std::string &name, GoodRole role) {
        GoodId g = out_.market.add_good(name);
        out_.good_roles.push_back(role);
        out_.producer.push_back(std::nullopt);
        return g;
    }

    BuyerId buyer(const std::string &name, const Rational &budget, UtilityMap utilities, BuyerRole role) {
        BuyerId b = out_.market.add_buyer(Buyer{name, budget, std::move(utilities)});
        out_.buyer_roles.push_back(role);
        return b;
    }

    /// aux(j, r): budget r·H_high, slope 2s on j up to r, slope 1 on ref.
    BuyerId aux(const std::string &name, GoodId j, const Rational &r, const CopyLayout &layout, BuyerRole role) {
        const auto &p = out_.params;
        UtilityMap u{{out_.ref_good, SplcUtility::linear(1)}, {j, SplcUtility::capped(Rational(2) * p.s, r)}};
        role.good = j;
        role.r = r;
        return buyer(name, r * layout.H_high, std::move(u), role);
    }

    std::size_t gadget(GadgetInstance g, const CopyLayout &layout) {
        const auto &p = out_.params;
        std::size_t index = out_.gadgets.size();
        std::string tail = g.id.substr(copy_prefix(g.copy).size());
        UtilityMap u{{out_.ref_good, SplcUtility::linear(1)}, {g.output, SplcUtility::linear(p.s)}};
        for (GoodId in : g.inputs) {
            u.emplace_back(in, SplcUtility::capped(p.a, p.t));
        }
        Rational budget = Rational(g.inputs.size()) * p.t * layout.H_low;
        BuyerRole inv_role{BuyerKind::Inverter, g.copy, index, g.output, Rational(0)};
        g.inverter = buyer(copy_prefix(g.copy) + "inv." + tail, budget, std::move(u), inv_role);
        // aux(out, 0) would have no budget; it is left out.
        if (g.r.is_positive()) {
            BuyerRole aux_role{BuyerKind::GateAux, g.copy, index, g.output, g.r};
            g.aux = aux(copy_prefix(g.copy) + "aux." + tail, g.output, g.r, layout, aux_role);
        }
        out_.producer[g.output] = index;
        out_.gadgets.push_back(std::move(g));
        return index;
    }

    void build_copy(std::size_t c) {
        const auto &p = out_.params;
        const auto &circuit = out_.circuit;
        CopyLayout layout;
        layout.copy = c;
        std::tie(layout.H_low, layout.H_high) = p.copy_interval(c);
        std::string pre = copy_prefix(c);
        for (NodeId v = 0; v < circuit.n; ++v) {
            layout.node_goods.push_back(good(pre + "n" + std::to_string(v), {GoodKind::Variable, c, v, 0, 0, 0}));
        }
        layout.gate_gadget.assign(circuit.gates.size(), std::nullopt);
        // Chain intermediates follow the node goods.
        for (std::size_t gi = 0; gi < circuit.gates.size(); ++gi) {
            const Gate &g = circuit.gates[gi];
            if (g.type != GateType::Purify) {
                continue;
            }
            PurifyLayout pl;
            pl.gate = gi;
            for (int chain = 1; chain <= 2; ++chain) {
                auto &goods = pl.goods[chain - 1];
                goods.push_back(layout.node_goods[g.u]);
                for (std::size_t j = 1; j < p.d; ++j) {
                    goods.push_back(good(pre + "p" + std::to_string(gi) + chain_suffix(chain, j),
                                         {GoodKind::ChainIntermediate, c, 0, gi, chain, j}));
                }
                goods.push_back(layout.node_goods[chain == 1 ? g.v : *g.w]);
            }
            layout.purify.push_back(std::move(pl));
        }
        std::size_t purify_index = 0;
        for (std::size_t gi = 0; gi < circuit.gates.size(); ++gi) {
            const Gate &g = circuit.gates[gi];
            std::string gate_id = pre + "g" + std::to_string(gi);
            if (g.type == GateType::Not) {
                GadgetInstance gd{gate_id, c, gi, 0, 0, GateType::Not, {layout.node_goods[g.u]},
                                  layout.node_goods[g.v], 0, std::nullopt, p.r_not};
                layout.gate_gadget[gi] = gadget(std::move(gd), layout);
            } else if (g.type == GateType::Nand) {
                GadgetInstance gd{gate_id,
                                  c,
                                  gi,
                                  0,
                                  0,
                                  GateType::Nand,
                                  {layout.node_goods[g.u], layout.node_goods[g.v]},
                                  layout.node_goods[*g.w],
                                  0,
                                  std::nullopt,
                                  p.r_nand};
                layout.gate_gadget[gi] = gadget(std::move(gd), layout);
            } else {
                PurifyLayout &pl = layout.purify[purify_index++];
                for (int chain = 1; chain <= 2; ++chain) {
                    const auto &goods = pl.goods[chain - 1];
                    for (std::size_t j = 1; j <= p.d; ++j) {
                        GadgetInstance gd{gate_id + chain_suffix(chain, j),
                                          c,
                                          gi,
                                          chain,
                                          j,
                                          GateType::Not,
                                          {goods[j - 1]},
                                          goods[j],
                                          0,
                                          std::nullopt,
                                          p.r_chain(chain, j)};
                        pl.gadgets[chain - 1].push_back(gadget(std::move(gd), layout));
                    }
                }
            }
        }
        // Top-ups bring every good to exactly two consumers besides its own gadget.
        auto slots = consumer_slots(circuit);
        for (NodeId v = 0; v < circuit.n; ++v) {
            for (std::size_t slot = slots[v]; slot < 2; ++slot) {
                BuyerRole role{BuyerKind::TopUpAux, c, 0, 0, Rational(0)};
                layout.top_ups.push_back(aux(pre + "top.n" + std::to_string(v) + "." + std::to_string(slot + 1),
                                             layout.node_goods[v], p.t, layout, role));
            }
        }
        for (const auto &pl : layout.purify) {
            for (int chain = 1; chain <= 2; ++chain) {
                for (std::size_t j = 1; j < p.d; ++j) {
                    BuyerRole role{BuyerKind::TopUpAux, c, 0, 0, Rational(0)};
                    layout.top_ups.push_back(aux(pre + "top.p" + std::to_string(pl.gate) + chain_suffix(chain, j),
                                                 pl.goods[chain - 1][j], p.t, layout, role));
                }
            }
        }
        out_.copies.push_back(std::move(layout));
    }

private:
    ReducedMarket &out_;
};

}  // namespace detail

/// Compiles a circuit into a Fisher market: a reference good and buyer, then
/// k copies of the circuit, each built for its own interval [H_low, H_high].
inline ReducedMarket compile(const CircuitInstance &circuit, const Rational &eps, const CompileOptions &options = {}) {
    check_epsilon(eps);
    auto slots = consumer_slots(circuit);
    for (NodeId v = 0; v < circuit.n; ++v) {
        if (slots[v] > 2) {
            throw CompileError("node " + std::to_string(v) + " has out-degree " + std::to_string(slots[v]) +
                               "; at most 2 is supported");
        }
    }
    unsigned long d = options.override ? options.override->d : table_chain_length(eps);
    std::size_t vertices = std::max<std::size_t>(1, expanded_vertex_count(circuit, d));

    ReducedMarket out;
    out.circuit = circuit;
    out.params = compute_params(eps, vertices, options.override);

    std::vector<std::size_t> copies;
    if (options.only_copies) {
        std::set<std::size_t> chosen(options.only_copies->begin(), options.only_copies->end());
        for (std::size_t c : chosen) {
            if (c >= out.params.k) {
                throw CompileError("copy " + std::to_string(c) + " does not exist (k = " +
                                   std::to_string(out.params.k) + ")");
            }
            copies.push_back(c);
        }
        out.partial = true;
    } else {
        for (std::size_t c = 0; c < out.params.k; ++c) {
            copies.push_back(c);
        }
    }

    detail::Compiler compiler(out);
    out.ref_good = compiler.good("ref", GoodRole{});
    out.ref_buyer = compiler.buyer("ref", Rational(1), {{out.ref_good, SplcUtility::linear(1)}}, BuyerRole{});
    if (circuit.n == 0) {
        return out;
    }
    for (std::size_t c : copies) {
        compiler.build_copy(c);
    }
    return out;
}

struct DecodeResult {
    Assignment assignment;
    std::size_t copy = 0;
    Rational H;
    Rational L;
};

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Lowest copy whose closed interval contains H.
inline std::size_t copy_for(const ReductionParams &p, const Rational &H) {
    if (H < p.H_min || H > p.H_max) {
        throw DecodeError("H = " + H.str() + " is outside [H_min, H_max] = [" + p.H_min.str() + ", " + p.H_max.str() +
                          "]");
    }
    Rational q = (H - p.H_min) / p.copy_width();
    std::size_t c = to_u64(q.floor());
    if (q.is_integer() && c > 0) {
        c -= 1;
    }
    return std::min<std::size_t>(c, p.k - 1);
}

inline Value decode_price(const Rational &price, const Rational &H, const Rational &L) {
    if (price >= H) {
        return Value::One;
    }
    if (price <= L) {
        return Value::Zero;
    }
    return Value::Bot;
}

inline DecodeResult decode(const ReducedMarket &reduced, const PriceVector &prices) {
    if (prices.size() != reduced.market.good_count()) {
        throw std::invalid_argument("price vector does not cover the market");
    }
    const auto &p = reduced.params;
    const Rational &p_ref = prices[reduced.ref_good];
    if (!p_ref.is_positive()) {
        throw DecodeError("reference price must be positive");
    }
    DecodeResult out;
    out.H = p.s * p_ref;
    out.L = p.s * out.H / p.a;
    out.copy = copy_for(p, out.H);
    const CopyLayout *layout = reduced.layout(out.copy);
    if (reduced.circuit.n == 0) {
        return out;
    }
    if (layout == nullptr) {
        throw DecodeError("copy " + std::to_string(out.copy) + " was not materialized");
    }
    for (GoodId g : layout->node_goods) {
        out.assignment.push_back(decode_price(prices[g], out.H, out.L));
    }
    return out;
}

struct RoleCounts {
    std::size_t variable_goods = 0;
    std::size_t chain_goods = 0;
    std::size_t inverters = 0;
    std::size_t gate_auxes = 0;
    std::size_t top_ups = 0;

    std::size_t goods() const { return variable_goods + chain_goods; }
    std::size_t buyers() const { return inverters + gate_auxes + top_ups; }
    bool operator==(const RoleCounts &) const = default;
};

struct Census {
    std::size_t copies = 0;
    /// Counts for each materialized copy, in copy order.
    std::vector<std::pair<std::size_t, RoleCounts>> per_copy;
    RoleCounts total;
    std::size_t reference_goods = 0;
    std::size_t reference_buyers = 0;
    std::size_t goods = 0;
    std::size_t buyers = 0;
};

inline Census census(const ReducedMarket &reduced) {
    Census out;
    std::vector<RoleCounts> by_copy(reduced.params.k);
    for (const auto &r : reduced.good_roles) {
        switch (r.kind) {
            case GoodKind::Reference:
                out.reference_goods += 1;
                break;
            case GoodKind::Variable:
                by_copy[r.copy].variable_goods += 1;
                break;
            case GoodKind::ChainIntermediate:
                by_copy[r.copy].chain_goods += 1;
                break;
        }
    }
    for (const auto &r : reduced.buyer_roles) {
        switch (r.kind) {
            case BuyerKind::Reference:
                out.reference_buyers += 1;
                break;
            case BuyerKind::Inverter:
                by_copy[r.copy].inverters += 1;
                break;
            case BuyerKind::GateAux:
                by_copy[r.copy].gate_auxes += 1;
                break;
            case BuyerKind::TopUpAux:
                by_copy[r.copy].top_ups += 1;
                break;
        }
    }
    for (const auto &layout : reduced.copies) {
        const RoleCounts &rc = by_copy[layout.copy];
        out.per_copy.emplace_back(layout.copy, rc);
        out.total.variable_goods += rc.variable_goods;
        out.total.chain_goods += rc.chain_goods;
        out.total.inverters += rc.inverters;
        out.total.gate_auxes += rc.gate_auxes;
        out.total.top_ups += rc.top_ups;
    }
    out.copies = reduced.copies.size();
    out.goods = out.reference_goods + out.total.goods();
    out.buyers = out.reference_buyers + out.total.buyers();
    return out;
}

inline std::string describe(const ReducedMarket &reduced) {
    Census c = census(reduced);
    const auto &p = reduced.params;
    std::ostringstream out;
    out << "eps " << p.epsilon << ", k " << p.k << ", d " << p.d << ", |V| " << p.vertex_count;
    if (p.guarantees_void()) {
        out << " (override: guarantees void)";
    }
    if (reduced.partial) {
        out << " (partial: " << c.copies << " of " << p.k << " copies)";
    }
    out << "\n";
    out << "goods " << c.goods << ": reference " << c.reference_goods << ", variable " << c.total.variable_goods
        << ", chain " << c.total.chain_goods << "\n";
    out << "buyers " << c.buyers << ": reference " << c.reference_buyers << ", inverter " << c.total.inverters
        << ", gate aux " << c.total.gate_auxes << ", top-up " << c.total.top_ups << "\n";
    // Copies are structurally identical; print each distinct shape once.
    std::vector<std::pair<RoleCounts, std::size_t>> shapes;
    for (const auto &[copy, rc] : c.per_copy) {
        auto it = std::find_if(shapes.begin(), shapes.end(), [&](const auto &s) { return s.first == rc; });
        if (it == shapes.end()) {
            shapes.emplace_back(rc, 1);
        } else {
            it->second += 1;
        }
    }
    for (const auto &[rc, n] : shapes) {
        out << "per copy (x" << n << "): goods " << rc.goods() << " (variable " << rc.variable_goods << ", chain "
            << rc.chain_goods << "), buyers " << rc.buyers() << " (inverter " << rc.inverters << ", gate aux "
            << rc.gate_auxes << ", top-up " << rc.top_ups << ")\n";
    }
    return out.str();
}

/// Checks every structural invariant of a compiled market. Returns one line
/// per violation; empty means the market is well-formed.
inline std::vector<std::string> audit(const ReducedMarket &reduced) {
    std::vector<std::string> bad;
    const auto &m = reduced.market;
    const auto &p = reduced.params;
    auto good_name = [&](GoodId g) { return m.goods()[g]; };

    std::size_t ref_goods = 0;
    for (const auto &r : reduced.good_roles) {
        ref_goods += r.kind == GoodKind::Reference;
    }
    std::size_t ref_buyers = 0;
    for (const auto &r : reduced.buyer_roles) {
        ref_buyers += r.kind == BuyerKind::Reference;
    }
    if (ref_goods != 1 || ref_buyers != 1) {
        bad.push_back("expected one reference good and one reference buyer, found " + std::to_string(ref_goods) +
                      " and " + std::to_string(ref_buyers));
    }
    const Buyer &rb = m.buyers()[reduced.ref_buyer];
    if (rb.budget != Rational(1) || rb.utilities.size() != 1 || rb.utilities[0].first != reduced.ref_good ||
        !(rb.utilities[0].second == SplcUtility::linear(1))) {
        bad.push_back("reference buyer must have budget 1 and utility x on ref only");
    }

    std::vector<std::vector<std::pair<BuyerId, const SplcUtility *>>> consumers(m.good_count());
    Rational budget_sum = 0;
    for (BuyerId b = 0; b < m.buyer_count(); ++b) {
        const Buyer &buyer = m.buyers()[b];
        if (b != reduced.ref_buyer) {
            budget_sum += buyer.budget;
            if (buyer.budget > p.H_max) {
                bad.push_back("buyer " + buyer.id + " budget " + buyer.budget.str() + " exceeds H_max " +
                              p.H_max.str());
            }
        }
        const SplcUtility *ref_u = buyer.utility_for(reduced.ref_good);
        if (ref_u == nullptr || !ref_u->strictly_increasing()) {
            bad.push_back("buyer " + buyer.id + " is not unsatiated in ref");
        }
        for (const auto &[g, u] : buyer.utilities) {
            bool positive = std::any_of(u.segments().begin(), u.segments().end(),
                                        [](const SplcSegment &s) { return s.slope.is_positive(); });
            if (positive) {
                consumers[g].emplace_back(b, &u);
            }
        }
    }

    std::vector<std::size_t> producing(m.good_count(), 0);
    for (const auto &g : reduced.gadgets) {
        producing[g.output] += 1;
    }
    for (GoodId g = 0; g < m.good_count(); ++g) {
        if (g == reduced.ref_good) {
            continue;
        }
        if (producing[g] != 1) {
            bad.push_back("good " + good_name(g) + " is the output of " + std::to_string(producing[g]) +
                          " inverters");
            continue;
        }
        if (consumers[g].size() > 4) {
            bad.push_back("good " + good_name(g) + " has " + std::to_string(consumers[g].size()) + " consumers");
        }
        const GadgetInstance &gd = reduced.gadgets[*reduced.producer[g]];
        Rational caps = 0;
        bool unbounded = false;
        for (const auto &[b, u] : consumers[g]) {
            if (b == gd.inverter) {
                continue;
            }
            for (const auto &seg : u->segments()) {
                if (!seg.slope.is_positive()) {
                    continue;
                }
                if (seg.length) {
                    caps += *seg.length;
                } else {
                    unbounded = true;
                }
            }
        }
        if (unbounded || caps > Rational(2) * p.t + gd.r) {
            bad.push_back("good " + good_name(g) + ": external consumers can take " +
                          (unbounded ? std::string("unboundedly much") : caps.str()) + " > 2t + r = " +
                          (Rational(2) * p.t + gd.r).str());
        }
    }

    if (p.d % 2 != 0) {
        bad.push_back("chain length d = " + std::to_string(p.d) + " is odd");
    }
    for (const auto &g : reduced.gadgets) {
        Rational expect = g.chain == 0 ? (g.kind == GateType::Nand ? p.r_nand : p.r_not) : p.r_chain(g.chain, g.position);
        if (g.r != expect) {
            bad.push_back("gadget " + g.id + " has r = " + g.r.str() + ", expected " + expect.str());
        }
        if (g.r.is_positive() != g.aux.has_value()) {
            bad.push_back("gadget " + g.id + " aux buyer presence does not match r");
        }
    }
    for (const auto &layout : reduced.copies) {
        for (const auto &pl : layout.purify) {
            for (int chain = 1; chain <= 2; ++chain) {
                if (pl.gadgets[chain - 1].size() != p.d) {
                    bad.push_back("PURIFY gate " + std::to_string(pl.gate) + " chain " + std::to_string(chain) +
                                  " has " + std::to_string(pl.gadgets[chain - 1].size()) + " links, expected d");
                }
            }
        }
    }

    Rational bound = Rational(4) * Rational(p.k) * Rational(p.d) * Rational(p.vertex_count) * p.H_max;
    if (budget_sum > bound) {
        bad.push_back("non-reference budgets sum to " + budget_sum.str() + " > 4kd|V|H_max = " + bound.str());
    }
    if (!satisfies_sufficient_condition(m)) {
        bad.push_back("sufficient condition fails");
    }
    return bad;
}

}  // namespace splc
