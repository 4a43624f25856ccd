// Command-line front end: compile, verify, solve, decode, lemmas,
// to-exchange, gadget-lab and circuit-check.
//
// Exit codes: 0 success/pass, 1 verified fail (report still written),
// 2 usage, format or IO error, 3 precondition error.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "splc/splc.hpp"

namespace fs = std::filesystem;
using namespace splc;

namespace {

struct Failure : std::runtime_error {
    int code;
    std::string kind;
    Failure(int c, std::string k, const std::string &message)
        : std::runtime_error(message), code(c), kind(std::move(k)) {}
};

Failure usage(const std::string &message) { return Failure(2, "usage", message); }

std::string read_text(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Failure(2, "io", "cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const std::string &path) {
    std::string text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw Failure(2, "format", path + ": " + e.what());
    }
}

void write_atomic(const fs::path &path, const std::string &content) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Failure(2, "io", "cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw Failure(2, "io", "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Failure(2, "io", "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

std::string dump(const Json &doc) { return doc.dump(2) + "\n"; }

/// Writes to `path`, or to stdout when it is empty.
void emit(const std::string &path, const std::string &content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    write_atomic(p, content);
}

fs::path out_dir(const std::string &dir) {
    fs::path p(dir.empty() ? "." : dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) {
        throw Failure(2, "io", "cannot create " + p.string() + ": " + ec.message());
    }
    return p;
}

Rational parse_rational_flag(const std::string &flag, const std::string &text) {
    try {
        return Rational::parse(text);
    } catch (const std::invalid_argument &) {
        throw usage(flag + " takes an exact rational p/q, got \"" + text + "\"");
    }
}

std::vector<Rational> parse_grid(const std::string &text) {
    std::vector<Rational> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_rational_flag("--grid", item));
    }
    if (out.empty()) {
        throw usage("--grid needs at least one value");
    }
    return out;
}

struct OverrideFlags {
    std::optional<unsigned long> k;
    std::optional<unsigned long> d;

    void add(CLI::App *app) {
        app->add_option("--override-k", k, "copy count override (needs --override-d)");
        app->add_option("--override-d", d, "chain length override (needs --override-k)");
    }

    std::optional<ParamOverride> get() const {
        if (k.has_value() != d.has_value()) {
            throw usage("--override-k and --override-d must be given together");
        }
        if (!k) {
            return std::nullopt;
        }
        return ParamOverride{*k, *d};
    }
};

CircuitInstance load_circuit(const std::string &path) {
    std::string text = read_text(path);
    try {
        return parse_circuit(text);
    } catch (const ParseError &e) {
        throw Failure(2, "format", path + ":" + std::to_string(e.line) + ":" + std::to_string(e.column) + ": " +
                                       e.what());
    }
}

// compile --------------------------------------------------------------------

struct CompileCmd {
    std::string circuit;
    std::string eps;
    OverrideFlags override;
    std::vector<std::size_t> copies;
    std::string out;

    int run() const {
        CompileRequest req{load_circuit(circuit), parse_rational_flag("--eps", eps), {}};
        req.options.override = override.get();
        if (!copies.empty()) {
            req.options.only_copies = copies;
        }
        ReducedMarket reduced = compile(req.circuit, req.epsilon, req.options);
        fs::path dir = out_dir(out);
        write_atomic(dir / "market.json", dump(market_to_json(reduced.market)));
        write_atomic(dir / "meta.json", dump(meta_to_json(reduced, req)));
        Json summary;
        summary["market"] = (dir / "market.json").string();
        summary["meta"] = (dir / "meta.json").string();
        summary["goods"] = reduced.market.good_count();
        summary["buyers"] = reduced.market.buyer_count();
        summary["k"] = reduced.params.k;
        summary["d"] = reduced.params.d;
        summary["partial"] = reduced.partial;
        summary["guarantees_void"] = reduced.params.guarantees_void();
        std::cout << dump(summary);
        return 0;
    }
};

// verify ---------------------------------------------------------------------

struct VerifyCmd {
    std::string market;
    std::string prices;
    std::string allocation;
    std::string eps;
    std::string out;

    int run() const {
        Rational e = parse_rational_flag("--eps", eps);
        if (e.is_negative()) {
            throw usage("--eps must be non-negative");
        }
        Json doc = read_json(market);
        const Json &buyers = require(doc, "buyers", "market");
        bool exchange = buyers.is_array() && !buyers.empty() && buyers.front().contains("endowments");
        EquilibriumReport report;
        std::vector<std::string> goods;
        std::vector<std::string> ids;
        if (exchange) {
            ExchangeMarket m = exchange_from_json(doc);
            goods = m.goods();
            ids = buyer_ids(m);
            PriceVector p = prices_from_json(read_json(prices), goods);
            Allocation x = allocation_from_json(read_json(allocation), goods, ids);
            report = verify_exchange(m, p, x, e);
        } else {
            FisherMarket m = market_from_json(doc);
            goods = m.goods();
            ids = buyer_ids(m);
            PriceVector p = prices_from_json(read_json(prices), goods);
            Allocation x = allocation_from_json(read_json(allocation), goods, ids);
            report = verify_fisher(m, p, x, e);
        }
        Json j;
        j["market_kind"] = exchange ? "exchange" : "fisher";
        j.update(report_to_json(report, goods, ids));
        emit(out, dump(j));
        return report.pass ? 0 : 1;
    }
};

// solve ----------------------------------------------------------------------

struct SolveCmd {
    std::string market;
    std::string eps = "0";
    std::size_t max_iters = 1000;
    std::string lambda = "1/2";
    std::string floor = "1/1000000";
    std::uint64_t seed = 0;
    std::string grid;
    std::string out;

    int run() const {
        FisherMarket m = market_from_json(read_json(market));
        SolverConfig cfg;
        cfg.epsilon = parse_rational_flag("--eps", eps);
        cfg.lambda = parse_rational_flag("--lambda", lambda);
        cfg.price_floor = parse_rational_flag("--floor", floor);
        cfg.max_iters = max_iters;
        cfg.seed = seed;
        if (cfg.epsilon.is_negative() || !cfg.lambda.is_positive() || !cfg.price_floor.is_positive()) {
            throw usage("--eps must be >= 0, --lambda and --floor > 0");
        }
        fs::path dir = out_dir(out);
        auto goods = m.goods();
        auto ids = buyer_ids(m);
        Json summary;
        PriceVector prices;
        Allocation alloc;
        bool ok = false;
        if (!grid.empty()) {
            if (m.good_count() > 3) {
                throw usage("--grid searches every good and supports at most 3 goods");
            }
            std::vector<GoodId> free(m.good_count());
            std::iota(free.begin(), free.end(), GoodId{0});
            auto found = grid_search(m, cfg.epsilon, free, parse_grid(grid),
                                     std::vector<std::optional<Rational>>(m.good_count()));
            summary["method"] = "grid";
            summary["found"] = found.has_value();
            if (found) {
                prices = found->prices;
                alloc = found->allocation;
                ok = verify_fisher(m, prices, alloc, cfg.epsilon).pass;
            }
        } else {
            TatonnementResult r = tatonnement(m, cfg);
            std::ostringstream csv;
            csv << "iteration,max_abs_slack,goods_violating\n";
            for (const auto &row : r.trace) {
                csv << row.iteration << ',' << row.max_abs_slack.str() << ',' << row.goods_violating << '\n';
            }
            write_atomic(dir / "trace.csv", csv.str());
            summary["method"] = "tatonnement";
            summary["iterations"] = r.trace.empty() ? 0 : r.trace.back().iteration;
            summary["best_iteration"] = r.iterations;
            summary["trace"] = (dir / "trace.csv").string();
            prices = std::move(r.prices);
            alloc = std::move(r.allocation);
            ok = r.converged;
        }
        summary["converged"] = ok;
        if (!prices.empty()) {
            write_atomic(dir / "prices.json", dump(prices_to_json(goods, prices)));
            write_atomic(dir / "allocation.json", dump(allocation_to_json(goods, ids, alloc)));
            summary["prices"] = (dir / "prices.json").string();
            summary["allocation"] = (dir / "allocation.json").string();
            summary["max_abs_slack"] = verify_fisher(m, prices, alloc, cfg.epsilon).max_abs_slack().str();
        }
        std::cout << dump(summary);
        return ok ? 0 : 1;
    }
};

// decode ---------------------------------------------------------------------

ReducedMarket reduced_from_meta(const Json &meta) {
    CompileRequest req = request_from_meta(meta);
    return compile(req.circuit, req.epsilon, req.options);
}

struct DecodeCmd {
    std::string meta;
    std::string prices;
    std::string out;

    int run() const {
        ReducedMarket reduced = reduced_from_meta(read_json(meta));
        PriceVector p = prices_from_json(read_json(prices), reduced.market.goods());
        DecodeResult dec = decode(reduced, p);
        Json j;
        j["copy"] = dec.copy;
        j["H"] = dec.H.str();
        j["L"] = dec.L.str();
        j["assignment"] = assignment_to_json(dec.assignment);
        emit(out, dump(j));
        return 0;
    }
};

// lemmas ---------------------------------------------------------------------

struct LemmasCmd {
    std::string meta;
    std::string market;
    std::string prices;
    std::string allocation;
    std::string eps;
    std::string out;

    int run() const {
        Json meta_doc = read_json(meta);
        ReducedMarket reduced = reduced_from_documents(market_from_json(read_json(market)), meta_doc);
        const auto &goods = reduced.market.goods();
        auto ids = buyer_ids(reduced.market);
        Rational e = eps.empty() ? reduced.params.epsilon : parse_rational_flag("--eps", eps);
        PriceVector p = prices_from_json(read_json(prices), goods);
        Allocation x = allocation_from_json(read_json(allocation), goods, ids);
        LemmaReport report = lemma_suite(reduced, p, x, e);
        Json j;
        j["epsilon"] = e.str();
        j.update(lemma_report_to_json(report));
        emit(out, dump(j));
        return report.pass() ? 0 : 1;
    }
};

// to-exchange ----------------------------------------------------------------

struct ToExchangeCmd {
    std::string market;
    std::string out;

    int run() const {
        FisherMarket m = market_from_json(read_json(market));
        emit(out, dump(exchange_to_json(to_exchange(m))));
        return 0;
    }
};

// gadget-lab -----------------------------------------------------------------

Json rationals(const std::vector<Rational> &xs) {
    Json out = Json::array();
    for (const auto &x : xs) {
        out.push_back(x.str());
    }
    return out;
}

struct GadgetLabCmd {
    std::string circuit;
    std::string eps = "1/12";
    OverrideFlags override;
    std::size_t mesh = 64;
    std::string out;

    int run() const {
        CircuitInstance c = load_circuit(circuit);
        if (c.gates.empty()) {
            throw Failure(3, "precondition", "circuit has no gates to exercise");
        }
        LabSetup lab = lab_setup(c, parse_rational_flag("--eps", eps), override.get());
        if (mesh < 2) {
            throw usage("--mesh must be at least 2");
        }
        Json doc;
        doc["epsilon"] = lab.epsilon.str();
        doc["k"] = lab.reduced.params.k;
        doc["d"] = lab.reduced.params.d;
        doc["guarantees_void"] = lab.reduced.params.guarantees_void();
        doc["copy"] = lab.copy;
        doc["p_ref"] = lab.p_ref.str();
        doc["H"] = lab.H.str();
        doc["L"] = lab.L.str();
        doc["H_low"] = lab.H_low.str();
        doc["H_high"] = lab.H_high.str();
        bool all = true;
        Json cases = Json::array();
        const CopyLayout &layout = lab.layout();
        for (std::size_t gate = 0; gate < c.gates.size(); ++gate) {
            if (!layout.gate_gadget[gate]) {
                continue;
            }
            std::size_t gi = *layout.gate_gadget[gate];
            const GadgetInstance &g = lab.reduced.gadgets[gi];
            Json jc;
            jc["gadget"] = g.id;
            jc["kind"] = gate_type_name(g.kind);
            try {
                auto table = g.kind == GateType::Nand ? nand_truth_table(lab, gi) : not_truth_table(lab, gi);
                Json rows = Json::array();
                for (const auto &row : table) {
                    Json jr;
                    jr["inputs"] = rationals(row.inputs);
                    jr["expect"] = expect_name(row.expect);
                    jr["price"] = row.result.price.str();
                    jr["exact"] = row.result.exact;
                    jr["cleared"] = row.result.cleared;
                    jr["pass"] = row.pass;
                    all = all && row.pass;
                    rows.push_back(std::move(jr));
                }
                jc["rows"] = std::move(rows);
            } catch (const BracketError &e) {
                jc["error"] = e.what();
                all = false;
            }
            cases.push_back(std::move(jc));
        }
        doc["gates"] = std::move(cases);
        Json sweeps = Json::array();
        for (std::size_t i = 0; i < layout.purify.size(); ++i) {
            Json js;
            try {
                PurifySweep sweep = purify_sweep(lab, i, mesh);
                js["gadget"] = sweep.gadget;
                js["pass"] = sweep.pass();
                all = all && sweep.pass();
                Json points = Json::array();
                for (const auto &pt : sweep.points) {
                    Json jp;
                    jp["p_in"] = pt.p_in.str();
                    jp["out1"] = pt.out1.str();
                    jp["out2"] = pt.out2.str();
                    jp["passes"] = pt.passes;
                    jp["rule"] = pt.rule;
                    jp["pass"] = pt.pass;
                    points.push_back(std::move(jp));
                }
                js["points"] = std::move(points);
            } catch (const BracketError &e) {
                js["gadget"] = "c" + std::to_string(lab.copy) + ".g" + std::to_string(layout.purify[i].gate);
                js["error"] = e.what();
                all = false;
            }
            sweeps.push_back(std::move(js));
        }
        doc["purify"] = std::move(sweeps);
        doc["verdict"] = all ? "pass" : "fail";
        emit(out, dump(doc));
        return all ? 0 : 1;
    }
};

// circuit-check --------------------------------------------------------------

struct CircuitCheckCmd {
    std::string circuit;
    std::string assignment;
    std::string out;

    int run() const {
        CircuitInstance c = load_circuit(circuit);
        Json doc = read_json(assignment);
        Assignment a = assignment_from_json(require(doc, "assignment", "assignment document"), c.n);
        auto verdicts = check_assignment(c, a);
        Json j;
        bool ok = all_satisfied(verdicts);
        j["verdict"] = ok ? "satisfied" : "violated";
        Json rows = Json::array();
        for (const auto &v : verdicts) {
            const Gate &g = c.gates[v.gate_index];
            Json jr;
            jr["gate"] = v.gate_index;
            jr["type"] = gate_type_name(g.type);
            jr["satisfied"] = v.satisfied;
            if (!v.satisfied) {
                jr["reason"] = v.reason;
            }
            rows.push_back(std::move(jr));
        }
        j["gates"] = std::move(rows);
        j["warnings"] = validate(c);
        emit(out, dump(j));
        return ok ? 0 : 1;
    }
};

int fail(int code, const std::string &kind, const std::string &message) {
    Json err;
    err["error"] = {{"kind", kind}, {"message", message}, {"exit", code}};
    std::cerr << err.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Pure-Circuit to SPLC Fisher market compiler and verifier", "splc"};
    app.require_subcommand(1);

    CompileCmd compile_cmd;
    auto *sc = app.add_subcommand("compile", "compile a .pc circuit into market.json and meta.json");
    sc->add_option("circuit", compile_cmd.circuit, "circuit file (.pc)")->required();
    sc->add_option("--eps", compile_cmd.eps, "epsilon as p/q")->required();
    compile_cmd.override.add(sc);
    sc->add_option("--copy", compile_cmd.copies, "materialize only these copies (repeatable)");
    sc->add_option("--out", compile_cmd.out, "output directory (default .)");

    VerifyCmd verify_cmd;
    auto *sv = app.add_subcommand("verify", "check an epsilon-equilibrium (Fisher or exchange market)");
    sv->add_option("market", verify_cmd.market)->required();
    sv->add_option("prices", verify_cmd.prices)->required();
    sv->add_option("allocation", verify_cmd.allocation)->required();
    sv->add_option("--eps", verify_cmd.eps, "epsilon as p/q")->required();
    sv->add_option("--out", verify_cmd.out, "report file (default stdout)");

    SolveCmd solve_cmd;
    auto *ss = app.add_subcommand("solve", "tatonnement (or grid search) for a Fisher market");
    ss->add_option("market", solve_cmd.market)->required();
    ss->add_option("--eps", solve_cmd.eps, "convergence epsilon as p/q (default 0)");
    ss->add_option("--max-iters", solve_cmd.max_iters, "iteration cap (default 1000)");
    ss->add_option("--lambda", solve_cmd.lambda, "step factor as p/q (default 1/2)");
    ss->add_option("--floor", solve_cmd.floor, "price floor as p/q (default 1/1000000)");
    ss->add_option("--seed", solve_cmd.seed, "0 starts from all-ones prices");
    ss->add_option("--grid", solve_cmd.grid, "grid search over every good with values a,b,c");
    ss->add_option("--out", solve_cmd.out, "output directory (default .)");

    DecodeCmd decode_cmd;
    auto *sd = app.add_subcommand("decode", "decode prices into a circuit assignment");
    sd->add_option("meta", decode_cmd.meta)->required();
    sd->add_option("prices", decode_cmd.prices)->required();
    sd->add_option("--out", decode_cmd.out, "output file (default stdout)");

    LemmasCmd lemmas_cmd;
    auto *sl = app.add_subcommand("lemmas", "run the gadget lemma suite on a verified equilibrium");
    sl->add_option("meta", lemmas_cmd.meta)->required();
    sl->add_option("market", lemmas_cmd.market)->required();
    sl->add_option("prices", lemmas_cmd.prices)->required();
    sl->add_option("allocation", lemmas_cmd.allocation)->required();
    sl->add_option("--eps", lemmas_cmd.eps, "epsilon as p/q (default: the compile epsilon)");
    sl->add_option("--out", lemmas_cmd.out, "output file (default stdout)");

    ToExchangeCmd exchange_cmd;
    auto *sx = app.add_subcommand("to-exchange", "Fisher market to exchange market");
    sx->add_option("market", exchange_cmd.market)->required();
    sx->add_option("--out", exchange_cmd.out, "output file (default stdout)");

    GadgetLabCmd lab_cmd;
    auto *sg = app.add_subcommand("gadget-lab", "pinned-bisection truth tables and PURIFY sweeps");
    sg->add_option("circuit", lab_cmd.circuit)->required();
    sg->add_option("--eps", lab_cmd.eps, "epsilon as p/q (default 1/12)");
    lab_cmd.override.add(sg);
    sg->add_option("--mesh", lab_cmd.mesh, "PURIFY sweep points over [L, H] (default 64)");
    sg->add_option("--out", lab_cmd.out, "output file (default stdout)");

    CircuitCheckCmd check_cmd;
    auto *sk = app.add_subcommand("circuit-check", "check an assignment against every gate");
    sk->add_option("circuit", check_cmd.circuit)->required();
    sk->add_option("assignment", check_cmd.assignment)->required();
    sk->add_option("--out", check_cmd.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail(2, "usage", e.what());
    }

    try {
        if (*sc) return compile_cmd.run();
        if (*sv) return verify_cmd.run();
        if (*ss) return solve_cmd.run();
        if (*sd) return decode_cmd.run();
        if (*sl) return lemmas_cmd.run();
        if (*sx) return exchange_cmd.run();
        if (*sg) return lab_cmd.run();
        if (*sk) return check_cmd.run();
        return fail(2, "usage", "no subcommand");
    } catch (const Failure &e) {
        return fail(e.code, e.kind, e.what());
    } catch (const EpsilonOutOfRange &e) {
        return fail(3, "precondition", e.what());
    } catch (const CompileError &e) {
        return fail(3, "precondition", e.what());
    } catch (const PreconditionError &e) {
        return fail(3, "precondition", e.what());
    } catch (const DecodeError &e) {
        return fail(3, "precondition", e.what());
    } catch (const BracketError &e) {
        return fail(3, "precondition", e.what());
    } catch (const UnboundedDemand &e) {
        return fail(3, "precondition", e.what());
    } catch (const FormatError &e) {
        return fail(2, "format", e.what());
    } catch (const Json::exception &e) {
        return fail(2, "format", e.what());
    } catch (const fs::filesystem_error &e) {
        return fail(2, "io", e.what());
    } catch (const std::invalid_argument &e) {
        return fail(2, "usage", e.what());
    } catch (const std::exception &e) {
        return fail(2, "error", e.what());
    }
}
