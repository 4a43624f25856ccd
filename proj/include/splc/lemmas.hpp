#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chain_bounds.hpp"
#include "market.hpp"
#include "reduction.hpp"

namespace splc {

/// The candidate is not an ε-equilibrium, so no lemma applies to it.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LemmaRecord {
    std::string id;
    /// "global", a gadget id, a good name or a buyer id.
    std::string scope;
    bool pass = false;
    std::vector<std::pair<std::string, Rational>> witnesses;
    std::string note;
};

struct LemmaReport {
    std::size_t copy = 0;
    Rational H;
    Rational L;
    std::vector<LemmaRecord> records;

    bool pass() const {
        return std::all_of(records.begin(), records.end(), [](const LemmaRecord &r) { return r.pass; });
    }
};

namespace detail {

inline Rational alloc(const Allocation &x, BuyerId b, GoodId g) {
    auto it = x[b].find(g);
    return it == x[b].end() ? Rational(0) : it->second;
}

class LemmaChecker {
public:
    LemmaChecker(const ReducedMarket &reduced, const PriceVector &prices, const Allocation &x, const Rational &eps)
        : rm_(reduced), p_(prices), x_(x), eps_(eps), params_(reduced.params) {
        const auto &m = reduced.market;
        holders_.resize(m.good_count());
        for (BuyerId b = 0; b < m.buyer_count(); ++b) {
            for (const auto &[g, amount] : x[b]) {
                if (amount.is_positive()) {
                    holders_[g].emplace_back(b, amount);
                }
            }
        }
    }

    LemmaReport run() {
        const auto &m = rm_.market;
        const Rational &p_ref = p_[rm_.ref_good];
        bool ref_ok = p_ref >= Rational(1, 2) && p_ref <= Rational(2);
        add("ref_price_bounds", "global", ref_ok, {{"p_ref", p_ref}, {"lower", Rational(1, 2)}, {"upper", Rational(2)}});
        if (!ref_ok) {
            report_.records.back().note = "no copy can be selected";
            return std::move(report_);
        }
        DecodeResult dec = decode(rm_, p_);
        report_.copy = dec.copy;
        report_.H = H_ = dec.H;
        report_.L = L_ = dec.L;
        const CopyLayout *layout = rm_.layout(dec.copy);
        if (layout == nullptr) {
            return std::move(report_);
        }
        H_low_ = layout->H_low;

        for (GoodId g = 0; g < m.good_count(); ++g) {
            const GoodRole &role = rm_.good_roles[g];
            if (role.kind == GoodKind::Reference || role.copy != dec.copy) {
                continue;
            }
            add("good_price_bounds", m.goods()[g], p_[g].is_positive() && p_[g] <= H_, {{"p", p_[g]}, {"H", H_}});
        }
        for (BuyerId b = 0; b < m.buyer_count(); ++b) {
            const BuyerRole &role = rm_.buyer_roles[b];
            if ((role.kind != BuyerKind::GateAux && role.kind != BuyerKind::TopUpAux) || role.copy != dec.copy) {
                continue;
            }
            Rational got = alloc(x_, b, role.good);
            add("aux_exact", m.buyers()[b].id, got == role.r, {{"x", got}, {"r", role.r}});
        }
        for (std::size_t gi = 0; gi < rm_.gadgets.size(); ++gi) {
            const GadgetInstance &g = rm_.gadgets[gi];
            if (g.copy == dec.copy) {
                gadget_checks(g);
            }
        }
        for (const auto &pl : layout->purify) {
            purify_checks(pl);
        }
        return std::move(report_);
    }

private:
    void add(std::string id, std::string scope, bool pass, std::vector<std::pair<std::string, Rational>> witnesses,
             std::string note = "") {
        report_.records.push_back({std::move(id), std::move(scope), pass, std::move(witnesses), std::move(note)});
    }

    void gadget_checks(const GadgetInstance &g) {
        const Rational &t = params_.t;
        const Rational one = 1;
        const Rational two = 2;
        Rational k = Rational(params_.k);
        Rational p_out = p_[g.output];
        Rational inv_out = alloc(x_, g.inverter, g.output);
        Rational external = 0;
        Rational outside = 0;
        for (const auto &[b, amount] : holders_[g.output]) {
            if (b == g.inverter) {
                continue;
            }
            external += amount;
            if (!g.aux || b != *g.aux) {
                outside += amount;
            }
        }
        add("external_demand", g.id, external <= two * t + g.r, {{"external", external}, {"bound", two * t + g.r}});
        add("nonzero_output", g.id, inv_out.is_positive(), {{"x_out", inv_out}});
        add("outside_band", g.id, outside >= two * params_.t_bar() && outside <= two * t,
            {{"outside", outside}, {"lower", two * params_.t_bar()}, {"upper", two * t}});

        std::vector<Rational> x_in;
        for (GoodId in : g.inputs) {
            x_in.push_back(alloc(x_, g.inverter, in));
        }
        bool other_purchase = false;
        for (const auto &[good, amount] : x_[g.inverter]) {
            bool is_input = std::find(g.inputs.begin(), g.inputs.end(), good) != g.inputs.end();
            if (!is_input && amount.is_positive()) {
                other_purchase = true;
            }
        }
        bool full = std::all_of(x_in.begin(), x_in.end(), [&](const Rational &v) { return v == t; });
        {
            std::vector<std::pair<std::string, Rational>> w{{"p_out", p_out}, {"L", L_}};
            for (std::size_t i = 0; i < x_in.size(); ++i) {
                w.emplace_back("x_in" + std::to_string(i + 1), x_in[i]);
            }
            bool applies = p_out > L_;
            add("big_l_anti_endowment", g.id, !applies || full || !other_purchase, std::move(w),
                applies ? "" : "p_out <= L: premise does not apply");
        }
        Rational slack_per = g.kind == GateType::Nand ? Rational(5) / k : Rational(3) / k;
        for (std::size_t i = 0; i < x_in.size(); ++i) {
            add(g.kind == GateType::Nand ? "nand_anti_endowment" : "not_anti_endowment",
                g.id + ".in" + std::to_string(i + 1), x_in[i] >= t - slack_per && x_in[i] <= t,
                {{"x_in", x_in[i]}, {"lower", t - slack_per}, {"upper", t}});
        }

        if (g.kind == GateType::Not) {
            Rational p_in = p_[g.inputs[0]];
            Rational den_up = one - two * t - g.r - eps_;
            if (den_up.is_positive()) {
                Rational up = max(L_, (H_low_ - p_in) * t / den_up);
                add("not_upper_bound", g.id, p_out <= up, {{"p_out", p_out}, {"bound", up}, {"p_in", p_in}});
                Rational den_lo = one - two * params_.t_bar() - g.r + eps_;
                Rational lo = min(H_, (H_low_ - p_in) * t / den_lo);
                add("not_lower_bound", g.id, p_out >= lo, {{"p_out", p_out}, {"bound", lo}, {"p_in", p_in}});
            }
            if (g.chain == 0) {
                if (p_in >= H_) {
                    add("not_correct", g.id, p_out <= L_, {{"p_in", p_in}, {"H", H_}, {"p_out", p_out}, {"L", L_}},
                        "input 1");
                } else if (p_in <= L_) {
                    add("not_correct", g.id, p_out >= H_, {{"p_in", p_in}, {"L", L_}, {"p_out", p_out}, {"H", H_}},
                        "input 0");
                } else {
                    add("not_correct", g.id, true, {{"p_in", p_in}, {"L", L_}, {"H", H_}}, "input bot: unconstrained");
                }
            }
        } else {
            Rational p1 = p_[g.inputs[0]];
            Rational p2 = p_[g.inputs[1]];
            std::vector<std::pair<std::string, Rational>> w{{"p_in1", p1}, {"p_in2", p2}, {"p_out", p_out},
                                                            {"L", L_},     {"H", H_}};
            bool both_high = p1 >= H_ && p2 >= H_;
            add("nand_one", g.id, !both_high || p_out <= L_, w, both_high ? "" : "premise does not apply");
            bool any_low = p1 <= L_ || p2 <= L_;
            add("nand_two", g.id, !any_low || p_out >= H_, w, any_low ? "" : "premise does not apply");
        }
    }

    void purify_checks(const PurifyLayout &pl) {
        std::string scope = "c" + std::to_string(report_.copy) + ".g" + std::to_string(pl.gate);
        Rational p_in = p_[pl.goods[0].front()];
        Rational out1 = p_[pl.goods[0].back()];
        Rational out2 = p_[pl.goods[1].back()];
        for (int chain = 1; chain <= 2; ++chain) {
            ChainBounds cb = chain_bounds(params_, chain, H_low_, H_, L_);
            Rational out = chain == 1 ? out1 : out2;
            bool ok = true;
            std::string note = "p_in between thresholds";
            if (p_in >= cb.R_U) {
                ok = out >= H_;
                note = "p_in >= R_U";
            } else if (p_in <= cb.R_L) {
                ok = out <= L_;
                note = "p_in <= R_L";
            }
            add("chain_thresholds", scope + ".ch" + std::to_string(chain), ok,
                {{"p_in", p_in}, {"R_L", cb.R_L}, {"R_U", cb.R_U}, {"p_out", out}, {"L", L_}, {"H", H_}}, note);
        }
        std::vector<std::pair<std::string, Rational>> w{
            {"p_in", p_in}, {"p_out1", out1}, {"p_out2", out2}, {"L", L_}, {"H", H_}};
        if (p_in >= H_) {
            add("purify_trichotomy", scope, out1 >= H_ && out2 >= H_, w, "input 1");
        } else if (p_in <= L_) {
            add("purify_trichotomy", scope, out1 <= L_ && out2 <= L_, w, "input 0");
        } else {
            auto pure = [&](const Rational &v) { return v <= L_ || v >= H_; };
            add("purify_trichotomy", scope, pure(out1) || pure(out2), w, "input bot");
        }
    }

    const ReducedMarket &rm_;
    const PriceVector &p_;
    const Allocation &x_;
    Rational eps_;
    const ReductionParams &params_;
    std::vector<std::vector<std::pair<BuyerId, Rational>>> holders_;
    Rational H_;
    Rational L_;
    Rational H_low_;
    LemmaReport report_;
};

}  // namespace detail

/// Runs every gadget-level check on the decoded copy of a verified
/// ε-equilibrium. Throws PreconditionError if (prices, allocation) does not
/// pass verify_fisher at ε, or if the decoded copy was not compiled.
inline LemmaReport lemma_suite(const ReducedMarket &reduced, const PriceVector &prices, const Allocation &allocation,
                               const Rational &eps) {
    EquilibriumReport eq = verify_fisher(reduced.market, prices, allocation, eps);
    if (!eq.pass) {
        throw PreconditionError("not an epsilon-equilibrium at eps = " + eps.str() + " (max |slack| " +
                                eq.max_abs_slack().str() + ", " + std::to_string(eq.goods_violating()) +
                                " goods violating)");
    }
    const Rational &p_ref = prices[reduced.ref_good];
    if (p_ref >= Rational(1, 2) && p_ref <= Rational(2)) {
        std::size_t copy = copy_for(reduced.params, reduced.params.s * p_ref);
        if (reduced.circuit.n > 0 && reduced.layout(copy) == nullptr) {
            throw PreconditionError("decoded copy " + std::to_string(copy) + " was not compiled");
        }
    }
    return detail::LemmaChecker(reduced, prices, allocation, eps).run();
}

}  // namespace splc
