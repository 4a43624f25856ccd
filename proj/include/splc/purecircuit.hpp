#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace splc {

using NodeId = std::size_t;

enum class GateType { Not, Nand, Purify };

inline const char *gate_type_name(GateType type) {
    switch (type) {
        case GateType::Not:
            return "NOT";
        case GateType::Nand:
            return "NAND";
        case GateType::Purify:
            return "PURIFY";
    }
    return "?";
}

/// NOT: u -> v. NAND: u, v -> w. PURIFY: u -> v, w.
struct Gate {
    GateType type;
    NodeId u;
    NodeId v;
    std::optional<NodeId> w;

    std::vector<NodeId> inputs() const {
        if (type == GateType::Nand) {
            return {u, v};
        }
        return {u};
    }

    std::vector<NodeId> outputs() const {
        switch (type) {
            case GateType::Not:
                return {v};
            case GateType::Nand:
                return {*w};
            case GateType::Purify:
                return {v, *w};
        }
        return {};
    }

    bool operator==(const Gate &) const = default;
};

struct CircuitInstance {
    std::size_t n = 0;
    std::vector<Gate> gates;

    bool operator==(const CircuitInstance &) const = default;
};

enum class Value : std::uint8_t { Zero, One, Bot };

inline const char *value_name(Value v) {
    switch (v) {
        case Value::Zero:
            return "0";
        case Value::One:
            return "1";
        case Value::Bot:
            return "bot";
    }
    return "?";
}

inline Value parse_value(std::string_view text) {
    if (text == "0") {
        return Value::Zero;
    }
    if (text == "1") {
        return Value::One;
    }
    if (text == "bot" || text == "⊥") {
        return Value::Bot;
    }
    throw std::invalid_argument("not a circuit value: \"" + std::string(text) + "\"");
}

inline bool is_pure(Value v) { return v != Value::Bot; }

/// Indexed by NodeId. Must be total over the circuit's nodes.
using Assignment = std::vector<Value>;

struct GateVerdict {
    std::size_t gate_index;
    bool satisfied;
    std::string reason;
};

struct ParseError : std::runtime_error {
    std::size_t line;
    std::size_t column;

    ParseError(std::size_t line, std::size_t column, const std::string &message)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line(line),
          column(column) {}
};

namespace detail {

struct Token {
    std::string text;
    std::size_t column;
};

inline std::vector<Token> tokenize_line(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (c == '#') {
            break;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') {
            ++i;
        }
        out.push_back({std::string(line.substr(start, i - start)), start + 1});
    }
    return out;
}

inline std::size_t parse_index(const Token &tok, std::size_t line_no) {
    if (tok.text.empty() || !std::all_of(tok.text.begin(), tok.text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ParseError(line_no, tok.column, "expected a decimal node id, got \"" + tok.text + "\"");
    }
    if (tok.text.size() > 18) {
        throw ParseError(line_no, tok.column, "node id too large: " + tok.text);
    }
    return std::stoull(tok.text);
}

}  // namespace detail

/// Parses the line-oriented `.pc` format:
///
///     nodes <n>
///     NOT <u> <v>
///     NAND <u> <v> <w>
///     PURIFY <u> <v> <w>
///
/// `#` starts a comment. The header fixes n; every node in [0, n) must be the
/// output of exactly one gate.
inline CircuitInstance parse_circuit(std::string_view text) {
    CircuitInstance circuit;
    bool have_header = false;
    std::vector<std::optional<std::size_t>> producer_line;
    std::size_t line_no = 0;
    std::size_t last_line = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;
        auto toks = detail::tokenize_line(line);
        if (toks.empty()) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        last_line = line_no;
        const std::string &head = toks[0].text;
        if (!have_header) {
            if (head != "nodes") {
                throw ParseError(line_no, toks[0].column, "expected header \"nodes <n>\"");
            }
            if (toks.size() != 2) {
                throw ParseError(line_no, toks[0].column, "header takes exactly one argument");
            }
            circuit.n = detail::parse_index(toks[1], line_no);
            producer_line.assign(circuit.n, std::nullopt);
            have_header = true;
            continue;
        }
        GateType type;
        std::size_t arity;
        if (head == "NOT") {
            type = GateType::Not;
            arity = 2;
        } else if (head == "NAND") {
            type = GateType::Nand;
            arity = 3;
        } else if (head == "PURIFY") {
            type = GateType::Purify;
            arity = 3;
        } else if (head == "nodes") {
            throw ParseError(line_no, toks[0].column, "duplicate header");
        } else {
            throw ParseError(line_no, toks[0].column, "unknown gate type \"" + head + "\"");
        }
        if (toks.size() != arity + 1) {
            std::size_t col = toks.size() > arity + 1 ? toks[arity + 1].column : line.size() + 1;
            throw ParseError(line_no, col, head + " takes " + std::to_string(arity) + " node ids");
        }
        std::vector<NodeId> ids;
        for (std::size_t i = 1; i <= arity; ++i) {
            NodeId id = detail::parse_index(toks[i], line_no);
            if (id >= circuit.n) {
                throw ParseError(line_no, toks[i].column,
                                 "node id " + std::to_string(id) + " out of range for " + std::to_string(circuit.n) +
                                     " nodes");
            }
            for (std::size_t j = 0; j < ids.size(); ++j) {
                if (ids[j] == id) {
                    throw ParseError(line_no, toks[i].column,
                                     "node " + std::to_string(id) + " appears twice in one gate");
                }
            }
            ids.push_back(id);
        }
        Gate gate{type, ids[0], ids[1], arity == 3 ? std::optional<NodeId>(ids[2]) : std::nullopt};
        auto outs = gate.outputs();
        for (NodeId out : outs) {
            if (producer_line[out]) {
                std::size_t pos = 0;
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (ids[i] == out) {
                        pos = i;
                    }
                }
                throw ParseError(line_no, toks[pos + 1].column,
                                 "node " + std::to_string(out) + " is already the output of the gate on line " +
                                     std::to_string(*producer_line[out]));
            }
            producer_line[out] = line_no;
        }
        circuit.gates.push_back(gate);
    }
    if (!have_header) {
        throw ParseError(1, 1, "missing header \"nodes <n>\"");
    }
    for (NodeId v = 0; v < circuit.n; ++v) {
        if (!producer_line[v]) {
            throw ParseError(last_line + 1, 1, "node " + std::to_string(v) + " is not the output of any gate");
        }
    }
    return circuit;
}

inline std::string serialize_circuit(const CircuitInstance &circuit) {
    std::ostringstream out;
    out << "nodes " << circuit.n << "\n";
    for (const auto &g : circuit.gates) {
        out << gate_type_name(g.type) << " " << g.u << " " << g.v;
        if (g.w) {
            out << " " << *g.w;
        }
        out << "\n";
    }
    return out.str();
}

struct Degrees {
    std::vector<std::size_t> in;
    std::vector<std::size_t> out;
};

/// Degrees in the interaction graph, whose edges run from each gate input to
/// each gate output.
inline Degrees interaction_degrees(const CircuitInstance &circuit) {
    Degrees deg{std::vector<std::size_t>(circuit.n, 0), std::vector<std::size_t>(circuit.n, 0)};
    for (const auto &g : circuit.gates) {
        for (NodeId i : g.inputs()) {
            for (NodeId o : g.outputs()) {
                deg.out[i] += 1;
                deg.in[o] += 1;
            }
        }
    }
    return deg;
}

/// Number of gates that read node v (the consumer slots the reduction budgets for).
inline std::vector<std::size_t> fan_out(const CircuitInstance &circuit) {
    std::vector<std::size_t> out(circuit.n, 0);
    for (const auto &g : circuit.gates) {
        for (NodeId i : g.inputs()) {
            out[i] += 1;
        }
    }
    return out;
}

/// One warning per node that breaks a degree bound (in <= 2, out <= 2, total <= 3).
inline std::vector<std::string> validate(const CircuitInstance &circuit) {
    std::vector<std::string> warnings;
    Degrees deg = interaction_degrees(circuit);
    for (NodeId v = 0; v < circuit.n; ++v) {
        std::vector<std::string> broken;
        if (deg.in[v] > 2) {
            broken.push_back("in-degree " + std::to_string(deg.in[v]) + " > 2");
        }
        if (deg.out[v] > 2) {
            broken.push_back("out-degree " + std::to_string(deg.out[v]) + " > 2");
        }
        if (deg.in[v] + deg.out[v] > 3) {
            broken.push_back("total degree " + std::to_string(deg.in[v] + deg.out[v]) + " > 3");
        }
        if (!broken.empty()) {
            std::string msg = "node " + std::to_string(v) + ":";
            for (std::size_t i = 0; i < broken.size(); ++i) {
                msg += (i == 0 ? " " : ", ") + broken[i];
            }
            warnings.push_back(msg);
        }
    }
    return warnings;
}

inline GateVerdict check_gate(const Gate &g, std::size_t index, const Assignment &a) {
    auto ok = [&]() { return GateVerdict{index, true, ""}; };
    auto bad = [&](std::string why) { return GateVerdict{index, false, std::move(why)}; };
    switch (g.type) {
        case GateType::Not: {
            Value in = a[g.u];
            Value out = a[g.v];
            if (in == Value::Zero && out != Value::One) {
                return bad("NOT row \"0 → 1\" violated");
            }
            if (in == Value::One && out != Value::Zero) {
                return bad("NOT row \"1 → 0\" violated");
            }
            return ok();
        }
        case GateType::Nand: {
            Value x = a[g.u];
            Value y = a[g.v];
            Value out = a[*g.w];
            if (x == Value::One && y == Value::One && out != Value::Zero) {
                return bad("NAND row \"1,1 → 0\" violated");
            }
            if ((x == Value::Zero || y == Value::Zero) && out != Value::One) {
                return bad("NAND row \"any 0 → 1\" violated");
            }
            return ok();
        }
        case GateType::Purify: {
            Value in = a[g.u];
            Value o1 = a[g.v];
            Value o2 = a[*g.w];
            if (in == Value::Zero && (o1 != Value::Zero || o2 != Value::Zero)) {
                return bad("PURIFY row \"0 → 0,0\" violated");
            }
            if (in == Value::One && (o1 != Value::One || o2 != Value::One)) {
                return bad("PURIFY row \"1 → 1,1\" violated");
            }
            if (!is_pure(o1) && !is_pure(o2)) {
                return bad("At least one output in {0,1}");
            }
            return ok();
        }
    }
    return ok();
}

inline std::vector<GateVerdict> check_assignment(const CircuitInstance &circuit, const Assignment &a) {
    if (a.size() < circuit.n) {
        throw std::invalid_argument("assignment has no value for node " + std::to_string(a.size()));
    }
    if (a.size() > circuit.n) {
        throw std::invalid_argument("assignment has " + std::to_string(a.size()) + " values for " +
                                    std::to_string(circuit.n) + " nodes");
    }
    std::vector<GateVerdict> verdicts;
    verdicts.reserve(circuit.gates.size());
    for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
        verdicts.push_back(check_gate(circuit.gates[i], i, a));
    }
    return verdicts;
}

inline bool all_satisfied(const std::vector<GateVerdict> &verdicts) {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const GateVerdict &v) { return v.satisfied; });
}

/// First satisfying assignment in lexicographic order (node 0 most
/// significant, Zero < One < Bot).
inline Assignment brute_force_solve(const CircuitInstance &circuit, std::size_t cap = 12) {
    if (circuit.n > cap) {
        throw std::invalid_argument("brute force capped at " + std::to_string(cap) + " nodes, instance has " +
                                    std::to_string(circuit.n));
    }
    Assignment a(circuit.n, Value::Zero);
    while (true) {
        bool good = true;
        for (std::size_t i = 0; i < circuit.gates.size() && good; ++i) {
            good = check_gate(circuit.gates[i], i, a).satisfied;
        }
        if (good) {
            return a;
        }
        std::size_t pos = circuit.n;
        while (pos > 0) {
            --pos;
            if (a[pos] != Value::Bot) {
                a[pos] = static_cast<Value>(static_cast<std::uint8_t>(a[pos]) + 1);
                break;
            }
            a[pos] = Value::Zero;
            if (pos == 0) {
                pos = circuit.n + 1;
                break;
            }
        }
        if (pos == circuit.n + 1 || circuit.n == 0) {
            throw std::logic_error("no satisfying assignment found; the gate checker is inconsistent");
        }
    }
}

}  // namespace splc
