#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reduction.hpp"
#include "solver.hpp"

namespace splc {

/// A compiled market with one materialized copy and a price vector in which
/// p_ref is chosen so that H equals that copy's H_high. Every other good
/// starts at H.
struct LabSetup {
    ReducedMarket reduced;
    std::size_t copy = 0;
    Rational epsilon;
    Rational p_ref;
    Rational H;
    Rational L;
    Rational H_low;
    Rational H_high;
    std::vector<std::optional<Rational>> base;

    const CopyLayout &layout() const { return reduced.copies.front(); }
    Rational tolerance() const { return H * pow2(-96); }
};

/// Uses the copy that contains H = s (p_ref = 1), then moves p_ref so that H
/// sits on that copy's upper edge, the extreme case for the gadget lemmas.
inline LabSetup lab_setup(const CircuitInstance &circuit, const Rational &eps,
                          const std::optional<ParamOverride> &override = std::nullopt) {
    unsigned long d = override ? override->d : table_chain_length(eps);
    ReductionParams params =
        compute_params(eps, std::max<std::size_t>(1, expanded_vertex_count(circuit, d)), override);
    std::size_t copy = copy_for(params, params.s);
    CompileOptions options;
    options.override = override;
    options.only_copies = std::vector<std::size_t>{copy};
    LabSetup lab;
    lab.reduced = compile(circuit, eps, options);
    lab.copy = copy;
    lab.epsilon = eps;
    std::tie(lab.H_low, lab.H_high) = params.copy_interval(copy);
    lab.p_ref = lab.H_high / params.s;
    lab.H = lab.H_high;
    lab.L = params.s * lab.H / params.a;
    lab.base.assign(lab.reduced.market.good_count(), lab.H);
    lab.base[lab.reduced.ref_good] = lab.p_ref;
    return lab;
}

/// Clears `free_good` by bisection over [L/4, 4H] with `pinned` fixing every
/// other price.
inline BisectionResult lab_clear(const LabSetup &lab, std::vector<std::optional<Rational>> pinned, GoodId free_good) {
    pinned[free_good] = std::nullopt;
    return pinned_bisection(lab.reduced.market, pinned, free_good, lab.L / Rational(4), Rational(4) * lab.H,
                            lab.tolerance(), lab.epsilon);
}

enum class Expect { AtMostL, AtLeastH };

inline const char *expect_name(Expect e) { return e == Expect::AtMostL ? "<= L" : ">= H"; }

struct GateCase {
    std::string gadget;
    std::vector<Rational> inputs;
    Expect expect = Expect::AtMostL;
    BisectionResult result;
    bool pass = false;
};

inline GateCase run_gate_case(const LabSetup &lab, std::size_t gadget, const std::vector<Rational> &input_prices,
                              Expect expect) {
    const GadgetInstance &g = lab.reduced.gadgets.at(gadget);
    if (input_prices.size() != g.inputs.size()) {
        throw std::invalid_argument("gadget " + g.id + " takes " + std::to_string(g.inputs.size()) + " inputs");
    }
    auto pinned = lab.base;
    for (std::size_t i = 0; i < g.inputs.size(); ++i) {
        pinned[g.inputs[i]] = input_prices[i];
    }
    GateCase out{g.id, input_prices, expect, lab_clear(lab, pinned, g.output), false};
    out.pass = out.result.cleared &&
               (expect == Expect::AtMostL ? out.result.price <= lab.L : out.result.price >= lab.H);
    return out;
}

/// Input 1 (priced H_high) must give an output at most L; input 0 (priced
/// L/2) an output at least H.
inline std::vector<GateCase> not_truth_table(const LabSetup &lab, std::size_t gadget) {
    Rational high = lab.H_high;
    Rational low = lab.L / Rational(2);
    return {run_gate_case(lab, gadget, {high}, Expect::AtMostL), run_gate_case(lab, gadget, {low}, Expect::AtLeastH)};
}

inline std::vector<GateCase> nand_truth_table(const LabSetup &lab, std::size_t gadget) {
    Rational high = lab.H_high;
    Rational low = lab.L / Rational(2);
    return {run_gate_case(lab, gadget, {high, high}, Expect::AtMostL),
            run_gate_case(lab, gadget, {low, high}, Expect::AtLeastH),
            run_gate_case(lab, gadget, {high, low}, Expect::AtLeastH),
            run_gate_case(lab, gadget, {low, low}, Expect::AtLeastH)};
}

struct PurifyPoint {
    Rational p_in;
    Rational out1;
    Rational out2;
    std::size_t passes = 0;
    bool settled = false;
    bool pass = false;
    std::string rule;
};

struct PurifySweep {
    std::string gadget;
    std::vector<PurifyPoint> points;

    bool pass() const {
        return !points.empty() &&
               std::all_of(points.begin(), points.end(), [](const PurifyPoint &p) { return p.pass; });
    }
};

/// `mesh` evenly spaced points from L to H inclusive.
inline std::vector<Rational> mesh_points(const Rational &L, const Rational &H, std::size_t mesh) {
    if (mesh < 2) {
        throw std::invalid_argument("mesh needs at least 2 points");
    }
    std::vector<Rational> out;
    for (std::size_t i = 0; i < mesh; ++i) {
        out.push_back(L + (H - L) * Rational(i) / Rational(mesh - 1));
    }
    return out;
}

/// Pins the PURIFY input and clears both chains link by link, repeating
/// passes until no good needs re-clearing (a good is re-cleared only when
/// its current price no longer ε-clears).
inline PurifyPoint settle_purify(const LabSetup &lab, const PurifyLayout &pl, const Rational &p_in,
                                 std::size_t max_passes = 200) {
    auto prices = lab.base;
    prices[pl.goods[0].front()] = p_in;
    PurifyPoint point;
    point.p_in = p_in;
    for (std::size_t pass = 1; pass <= max_passes; ++pass) {
        bool changed = false;
        for (int chain = 0; chain < 2; ++chain) {
            const auto &goods = pl.goods[chain];
            for (std::size_t j = 1; j < goods.size(); ++j) {
                GoodId g = goods[j];
                FreeGoodDemand demand(lab.reduced.market, [&] {
                    auto pinned = prices;
                    pinned[g] = std::nullopt;
                    return pinned;
                }(), g);
                auto d = demand.at(*prices[g]);
                bool clears = d.first <= Rational(1) + lab.epsilon && (!d.second || *d.second >= Rational(1) - lab.epsilon);
                if (clears) {
                    continue;
                }
                prices[g] = lab_clear(lab, prices, g).price;
                changed = true;
            }
        }
        point.passes = pass;
        if (!changed) {
            point.settled = true;
            break;
        }
    }
    point.out1 = *prices[pl.goods[0].back()];
    point.out2 = *prices[pl.goods[1].back()];
    const Rational &L = lab.L;
    const Rational &H = lab.H;
    auto pure = [&](const Rational &v) { return v <= L || v >= H; };
    if (p_in >= H) {
        point.rule = "input >= H: both outputs >= H";
        point.pass = point.out1 >= H && point.out2 >= H;
    } else if (p_in <= L) {
        point.rule = "input <= L: both outputs <= L";
        point.pass = point.out1 <= L && point.out2 <= L;
    } else {
        point.rule = "input in (L, H): some output outside (L, H)";
        point.pass = pure(point.out1) || pure(point.out2);
    }
    point.pass = point.pass && point.settled;
    return point;
}

inline PurifySweep purify_sweep(const LabSetup &lab, std::size_t purify_index, std::size_t mesh = 64) {
    const PurifyLayout &pl = lab.layout().purify.at(purify_index);
    PurifySweep out;
    out.gadget = "c" + std::to_string(lab.copy) + ".g" + std::to_string(pl.gate);
    for (const auto &p_in : mesh_points(lab.L, lab.H, mesh)) {
        out.points.push_back(settle_purify(lab, pl, p_in));
    }
    return out;
}

}  // namespace splc
