#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "market_json.hpp"
#include "reduction.hpp"

namespace splc {

struct CompileRequest {
    CircuitInstance circuit;
    Rational epsilon;
    CompileOptions options;
};

inline Json params_to_json(const ReductionParams &p) {
    Json j;
    j["epsilon"] = p.epsilon.str();
    j["delta"] = p.delta.str();
    j["t"] = p.t.str();
    j["t_bar"] = p.t_bar().str();
    j["d"] = p.d;
    j["k"] = p.k;
    j["vertex_count"] = p.vertex_count;
    j["s"] = p.s.str();
    j["a"] = p.a.str();
    j["r_not"] = p.r_not.str();
    j["r_nand"] = p.r_nand.str();
    j["r_chain1"] = {{"odd", p.r_chain1(1).str()}, {"even", p.r_chain1(2).str()}};
    j["r_chain2"] = {{"odd", p.r_chain2(1).str()}, {"even", p.r_chain2(2).str()}};
    j["H_min"] = p.H_min.str();
    j["H_max"] = p.H_max.str();
    j["copy_width"] = p.copy_width().str();
    j["guarantees_void"] = p.guarantees_void();
    return j;
}

inline Json good_role_to_json(const GoodRole &r) {
    Json j;
    switch (r.kind) {
        case GoodKind::Reference:
            j["kind"] = "reference";
            break;
        case GoodKind::Variable:
            j["kind"] = "variable";
            j["copy"] = r.copy;
            j["node"] = r.node;
            break;
        case GoodKind::ChainIntermediate:
            j["kind"] = "chain";
            j["copy"] = r.copy;
            j["gate"] = r.gate;
            j["chain"] = r.chain;
            j["position"] = r.position;
            break;
    }
    return j;
}

inline Json buyer_role_to_json(const ReducedMarket &reduced, const BuyerRole &r) {
    Json j;
    switch (r.kind) {
        case BuyerKind::Reference:
            j["kind"] = "reference";
            break;
        case BuyerKind::Inverter:
            j["kind"] = "inverter";
            j["copy"] = r.copy;
            j["gadget"] = reduced.gadgets[r.gadget].id;
            break;
        case BuyerKind::GateAux:
            j["kind"] = "gate-aux";
            j["copy"] = r.copy;
            j["gadget"] = reduced.gadgets[r.gadget].id;
            j["r"] = r.r.str();
            break;
        case BuyerKind::TopUpAux:
            j["kind"] = "top-up";
            j["copy"] = r.copy;
            j["good"] = reduced.market.goods()[r.good];
            j["r"] = r.r.str();
            break;
    }
    return j;
}

inline Json census_to_json(const Census &c) {
    auto counts = [](const RoleCounts &rc) {
        Json j;
        j["variable_goods"] = rc.variable_goods;
        j["chain_goods"] = rc.chain_goods;
        j["inverters"] = rc.inverters;
        j["gate_auxes"] = rc.gate_auxes;
        j["top_ups"] = rc.top_ups;
        return j;
    };
    Json j;
    j["goods"] = c.goods;
    j["buyers"] = c.buyers;
    j["copies"] = c.copies;
    j["reference_goods"] = c.reference_goods;
    j["reference_buyers"] = c.reference_buyers;
    j["total"] = counts(c.total);
    j["per_copy"] = c.per_copy.empty() ? Json() : counts(c.per_copy.front().second);
    return j;
}

inline Json meta_to_json(const ReducedMarket &reduced, const CompileRequest &request) {
    const auto &m = reduced.market;
    Json j;
    j["circuit"] = serialize_circuit(request.circuit);
    j["epsilon"] = request.epsilon.str();
    if (request.options.override) {
        j["override"] = {{"k", request.options.override->k}, {"d", request.options.override->d}};
    } else {
        j["override"] = nullptr;
    }
    if (request.options.only_copies) {
        j["only_copies"] = *request.options.only_copies;
    } else {
        j["only_copies"] = nullptr;
    }
    j["partial"] = reduced.partial;
    j["params"] = params_to_json(reduced.params);
    j["census"] = census_to_json(census(reduced));
    Json gadgets = Json::array();
    for (const auto &g : reduced.gadgets) {
        Json jg;
        jg["id"] = g.id;
        jg["kind"] = gate_type_name(g.kind);
        jg["copy"] = g.copy;
        jg["gate"] = g.gate;
        if (g.chain != 0) {
            jg["chain"] = g.chain;
            jg["position"] = g.position;
        }
        Json inputs = Json::array();
        for (GoodId in : g.inputs) {
            inputs.push_back(m.goods()[in]);
        }
        jg["inputs"] = std::move(inputs);
        jg["output"] = m.goods()[g.output];
        jg["inverter"] = m.buyers()[g.inverter].id;
        jg["aux"] = g.aux ? Json(m.buyers()[*g.aux].id) : Json();
        jg["r"] = g.r.str();
        gadgets.push_back(std::move(jg));
    }
    j["gadgets"] = std::move(gadgets);
    Json goods = Json::object();
    for (GoodId g = 0; g < m.good_count(); ++g) {
        goods[m.goods()[g]] = good_role_to_json(reduced.good_roles[g]);
    }
    j["goods"] = std::move(goods);
    Json buyers = Json::object();
    for (BuyerId b = 0; b < m.buyer_count(); ++b) {
        buyers[m.buyers()[b].id] = buyer_role_to_json(reduced, reduced.buyer_roles[b]);
    }
    j["buyers"] = std::move(buyers);
    return j;
}

inline CompileRequest request_from_meta(const Json &meta) {
    CompileRequest req;
    const Json &circuit = require(meta, "circuit", "meta");
    if (!circuit.is_string()) {
        throw FormatError("meta.circuit must be the circuit text");
    }
    try {
        req.circuit = parse_circuit(circuit.get<std::string>());
    } catch (const ParseError &e) {
        throw FormatError(std::string("meta.circuit: ") + e.what());
    }
    req.epsilon = rational_from_json(require(meta, "epsilon", "meta"), "meta.epsilon");
    const Json &ov = require(meta, "override", "meta");
    if (!ov.is_null()) {
        req.options.override = ParamOverride{require(ov, "k", "meta.override").get<unsigned long>(),
                                             require(ov, "d", "meta.override").get<unsigned long>()};
    }
    const Json &only = require(meta, "only_copies", "meta");
    if (!only.is_null()) {
        req.options.only_copies = only.get<std::vector<std::size_t>>();
    }
    return req;
}

/// Rebuilds the role metadata for `market` by recompiling from the recorded
/// request and checking that the result is exactly the given market.
inline ReducedMarket reduced_from_documents(const FisherMarket &market, const Json &meta) {
    CompileRequest req = request_from_meta(meta);
    ReducedMarket reduced = compile(req.circuit, req.epsilon, req.options);
    const auto &m = reduced.market;
    bool same = m.goods() == market.goods() && m.buyer_count() == market.buyer_count();
    for (BuyerId b = 0; same && b < m.buyer_count(); ++b) {
        const Buyer &x = m.buyers()[b];
        const Buyer &y = market.buyers()[b];
        same = x.id == y.id && x.budget == y.budget && x.utilities == y.utilities;
    }
    if (!same) {
        throw FormatError("market does not match the compilation recorded in meta");
    }
    reduced.market = market;
    return reduced;
}

/// {"0": "0" | "1" | "bot", ...} keyed by node index.
inline Json assignment_to_json(const Assignment &a) {
    Json out = Json::object();
    for (NodeId v = 0; v < a.size(); ++v) {
        out[std::to_string(v)] = value_name(a[v]);
    }
    return out;
}

/// Must be total over the n nodes.
inline Assignment assignment_from_json(const Json &j, std::size_t n) {
    if (!j.is_object()) {
        throw FormatError("assignment must be an object keyed by node index");
    }
    std::vector<std::optional<Value>> seen(n);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string &key = it.key();
        bool digits = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (!digits || (key.size() > 1 && key[0] == '0')) {
            throw FormatError("assignment: \"" + key + "\" is not a node index");
        }
        std::size_t v = std::stoull(key);
        if (v >= n) {
            throw FormatError("assignment: node " + key + " out of range (circuit has " + std::to_string(n) + ")");
        }
        if (!it.value().is_string()) {
            throw FormatError("assignment." + key + " must be \"0\", \"1\" or \"bot\"");
        }
        try {
            seen[v] = parse_value(it.value().get<std::string>());
        } catch (const std::invalid_argument &e) {
            throw FormatError("assignment." + key + ": " + e.what());
        }
    }
    Assignment out(n);
    for (NodeId v = 0; v < n; ++v) {
        if (!seen[v]) {
            throw FormatError("assignment: no value for node " + std::to_string(v));
        }
        out[v] = *seen[v];
    }
    return out;
}

}  // namespace splc
