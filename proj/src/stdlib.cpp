#include "lsc/stdlib.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "lsc/errors.hpp"

namespace lsc::gen {

using io::CircuitDoc;
using io::GateCall;

ToffoliStrategy strategy_from_string(const std::string& s) {
    if (s == "t-dag" || s == "tdag") return ToffoliStrategy::TDag;
    if (s == "extern") return ToffoliStrategy::Extern;
    if (s == "ccz") return ToffoliStrategy::Ccz;
    throw ParseError("unknown toffoli strategy '" + s + "'");
}

namespace {

std::string idx(const std::string& reg, int i) { return reg + "[" + std::to_string(i) + "]"; }

GateCall g(const std::string& op, std::vector<std::string> args) {
    return {op, std::move(args), {}, ""};
}

void add_register(CircuitDoc& doc, const std::string& name, int size) {
    doc.registers.push_back({name, static_cast<std::uint32_t>(size)});
}

// The toffoli macro body under each compilation strategy. Classical
// simulation treats `toffoli` calls as classical AND regardless of the body,
// which is what lets the same document be verified and compiled.
ir::MacroDef toffoli_macro(ToffoliStrategy strategy) {
    ir::MacroDef m;
    m.name = "toffoli";
    m.formals = {"x", "y", "z"};
    auto bg = [&m](const std::string& op, std::vector<std::string> args) {
        ir::MacroDef::BodyGate b;
        b.op = op;
        for (auto& a : args) b.args.push_back(ir::parse_symbol(a));
        m.body.push_back(std::move(b));
    };
    switch (strategy) {
        case ToffoliStrategy::TDag:
            bg("h", {"z"});
            bg("cnot", {"y", "z"});
            bg("tdg", {"z"});
            bg("cnot", {"x", "z"});
            bg("t", {"z"});
            bg("cnot", {"y", "z"});
            bg("tdg", {"z"});
            bg("cnot", {"x", "z"});
            bg("t", {"y"});
            bg("t", {"z"});
            bg("cnot", {"x", "y"});
            bg("h", {"z"});
            bg("t", {"x"});
            bg("tdg", {"y"});
            bg("cnot", {"x", "y"});
            break;
        case ToffoliStrategy::Extern:
            bg("Toffoli.call", {"x", "y", "z"});
            break;
        case ToffoliStrategy::Ccz:
            bg("h", {"z"});
            bg("ccz", {"x", "y", "z"});
            bg("h", {"z"});
            break;
    }
    return m;
}

void declare_toffoli(CircuitDoc& doc, ToffoliStrategy strategy) {
    doc.macros.push_back(toffoli_macro(strategy));
    if (strategy == ToffoliStrategy::Extern) {
        ir::ExternTemplate t;
        t.name = "Toffoli";
        t.width = 4;
        t.height = 3;
        t.ops.push_back({"call", 3, 0, 15});
        doc.externs.push_back(t);
    }
}

ir::MacroDef swap_macro() {
    ir::MacroDef m;
    m.name = "swap2";
    m.formals = {"x", "y"};
    auto bg = [&m](const std::string& op, std::vector<std::string> args) {
        ir::MacroDef::BodyGate b;
        b.op = op;
        for (auto& a : args) b.args.push_back(ir::parse_symbol(a));
        m.body.push_back(std::move(b));
    };
    bg("cnot", {"x", "y"});
    bg("cnot", {"y", "x"});
    bg("cnot", {"x", "y"});
    return m;
}

// CSWAP as three Toffolis.
ir::MacroDef cswap_macro() {
    ir::MacroDef m;
    m.name = "cswap";
    m.formals = {"c", "x", "y"};
    auto bg = [&m](const std::string& op, std::vector<std::string> args) {
        ir::MacroDef::BodyGate b;
        b.op = op;
        for (auto& a : args) b.args.push_back(ir::parse_symbol(a));
        m.body.push_back(std::move(b));
    };
    bg("toffoli", {"c", "x", "y"});
    bg("toffoli", {"c", "y", "x"});
    bg("toffoli", {"c", "x", "y"});
    return m;
}

// Steering gadget shared by both QRAM constructions: moves the parent lane
// into the right child when the router bit is set, into the left otherwise.
ir::MacroDef bb_gadget_macro() {
    ir::MacroDef m;
    m.name = "bb_gadget";
    m.formals = {"c", "p", "l", "r"};
    auto bg = [&m](const std::string& op, std::vector<std::string> args) {
        ir::MacroDef::BodyGate b;
        b.op = op;
        for (auto& a : args) b.args.push_back(ir::parse_symbol(a));
        m.body.push_back(std::move(b));
    };
    bg("cswap", {"c", "p", "r"});
    bg("x", {"c"});
    bg("cswap", {"c", "p", "l"});
    bg("x", {"c"});
    return m;
}

// Ripple adder: adds xs into ys where |ys| = |xs| + 1, using `carry` as the
// scratch qubit (returned to zero).
void emit_cuccaro(CircuitDoc& doc, const std::vector<std::string>& xs,
                  const std::vector<std::string>& ys, const std::string& carry) {
    int n = static_cast<int>(xs.size());
    auto maj = [&](const std::string& x, const std::string& y, const std::string& z) {
        doc.gates.push_back(g("cnot", {z, y}));
        doc.gates.push_back(g("cnot", {z, x}));
        doc.gates.push_back(g("toffoli", {x, y, z}));
    };
    auto uma = [&](const std::string& x, const std::string& y, const std::string& z) {
        doc.gates.push_back(g("toffoli", {x, y, z}));
        doc.gates.push_back(g("cnot", {z, x}));
        doc.gates.push_back(g("cnot", {x, y}));
    };
    maj(carry, ys[0], xs[0]);
    for (int i = 1; i < n; ++i) maj(xs[i - 1], ys[i], xs[i]);
    doc.gates.push_back(g("cnot", {xs[n - 1], ys[n]}));
    for (int i = n - 1; i >= 1; --i) uma(xs[i - 1], ys[i], xs[i]);
    uma(carry, ys[0], xs[0]);
}

}  // namespace

// --- basic logic ---------------------------------------------------------------

io::CircuitDoc gen_cnot_network(int n, int rounds, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw ParseError("cnot network needs an even register count");
    if (rounds < 1) throw ParseError("cnot network needs at least one round");
    CircuitDoc doc;
    doc.name = "cnot_network_n" + std::to_string(n) + "_r" + std::to_string(rounds);
    add_register(doc, "q", n);
    std::mt19937_64 rng(seed);
    std::vector<int> perm(n);
    for (int r = 0; r < rounds; ++r) {
        for (int i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i + 1 < n; i += 2)
            doc.gates.push_back(g("cnot", {idx("q", perm[i]), idx("q", perm[i + 1])}));
    }
    return doc;
}

io::CircuitDoc gen_t_factory(int level, FactoryStyle style,
                             const std::optional<ir::ExternTemplate>& t_source) {
    if (level < 0) throw ParseError("factory level must be non-negative");
    CircuitDoc doc;
    doc.name = std::string("t_factory_") +
               (style == FactoryStyle::Parallel15 ? "15to1" : "slice") + "_L" +
               std::to_string(level);

    // The "T" extern the consumptions draw from: raw injected states at level
    // one, a packaged or nominal lower-level factory above that.
    ir::ExternTemplate src;
    if (t_source) {
        src = *t_source;
        src.name = "T";
    } else {
        src.name = "T";
        src.width = 2 + 2 * std::max(0, level - 1);
        src.height = 2 + std::max(0, level - 1);
        src.ops.push_back({"call", 0, 1, 8 * level + 2});
    }

    if (level == 0) {
        // Raw passthrough: one consumption feeding the output.
        add_register(doc, "out", 1);
        doc.io.push_back({"out", ir::IoDir::Out});
        doc.externs.push_back(src);
        doc.gates.push_back(g("t", {"out"}));
        return doc;
    }
    doc.externs.push_back(src);
    add_register(doc, "out", 1);
    doc.io.push_back({"out", ir::IoDir::Out});

    if (style == FactoryStyle::Parallel15) {
        add_register(doc, "q", 4);
        add_register(doc, "anc", 15);
        for (int i = 0; i < 4; ++i) doc.gates.push_back(g("prep_plus", {idx("q", i)}));
        doc.gates.push_back(g("prep_0", {"out"}));
        // One ancilla per parity set; the fifteen consumptions can run in
        // parallel once the ancillae are prepared.
        for (int mask = 1; mask <= 15; ++mask) {
            std::string a = idx("anc", mask - 1);
            doc.gates.push_back(g("prep_0", {a}));
            for (int b = 0; b < 4; ++b)
                if (mask & (1 << b)) doc.gates.push_back(g("cnot", {idx("q", b), a}));
        }
        for (int mask = 1; mask <= 15; ++mask)
            doc.gates.push_back(g("t", {idx("anc", mask - 1)}));
        for (int mask = 15; mask >= 1; --mask) {
            std::string a = idx("anc", mask - 1);
            for (int b = 3; b >= 0; --b)
                if (mask & (1 << b)) doc.gates.push_back(g("cnot", {idx("q", b), a}));
            doc.gates.push_back(g("meas_x", {a}));
        }
        for (int i = 0; i < 4; ++i) doc.gates.push_back(g("cnot", {idx("q", i), "out"}));
    } else {
        // Slice construction: fifteen sequential consumptions on a shared
        // register, each slice depending on the one before it.
        add_register(doc, "q", 5);
        for (int i = 0; i < 5; ++i) doc.gates.push_back(g("prep_plus", {idx("q", i)}));
        for (int k = 0; k < 15; ++k) {
            doc.gates.push_back(g("t", {idx("q", 0)}));
            doc.gates.push_back(g("cnot", {idx("q", 0), idx("q", 1 + k % 4)}));
        }
        doc.gates.push_back(g("cnot", {idx("q", 0), "out"}));
    }
    return doc;
}

io::CircuitDoc gen_ccz_factory(bool fast) {
    CircuitDoc doc;
    doc.name = fast ? "ccz_factory_fast" : "ccz_factory";
    add_register(doc, "a", 1);
    add_register(doc, "b", 1);
    add_register(doc, "c", 1);
    doc.io.push_back({"a", ir::IoDir::Out});
    doc.io.push_back({"b", ir::IoDir::Out});
    doc.io.push_back({"c", ir::IoDir::Out});
    doc.gates.push_back(g("prep_plus", {"a"}));
    doc.gates.push_back(g("prep_plus", {"b"}));
    doc.gates.push_back(g("prep_plus", {"c"}));
    if (fast) {
        // Four lower-level CCZ states drive the distillation round.
        add_register(doc, "anc", 2);
        doc.gates.push_back(g("prep_plus", {idx("anc", 0)}));
        doc.gates.push_back(g("prep_plus", {idx("anc", 1)}));
        doc.gates.push_back(g("ccz", {"a", "b", "c"}));
        doc.gates.push_back(g("ccz", {"a", "b", idx("anc", 0)}));
        doc.gates.push_back(g("ccz", {"a", idx("anc", 0), idx("anc", 1)}));
        doc.gates.push_back(g("ccz", {"b", "c", idx("anc", 1)}));
        doc.gates.push_back(g("meas_x", {idx("anc", 0)}));
        doc.gates.push_back(g("meas_x", {idx("anc", 1)}));
    } else {
        // Eight T consumptions distributed over the three legs and scratch.
        add_register(doc, "anc", 2);
        doc.gates.push_back(g("prep_plus", {idx("anc", 0)}));
        doc.gates.push_back(g("prep_plus", {idx("anc", 1)}));
        const std::vector<std::string> targets = {"a", "b", "c", idx("anc", 0),
                                                  idx("anc", 1), "a", "b", "c"};
        for (size_t k = 0; k < targets.size(); ++k) {
            doc.gates.push_back(g("t", {targets[k]}));
            if (k + 1 < targets.size() && targets[k] != targets[k + 1])
                doc.gates.push_back(g("cnot", {targets[k], targets[k + 1]}));
        }
        doc.gates.push_back(g("meas_x", {idx("anc", 0)}));
        doc.gates.push_back(g("meas_x", {idx("anc", 1)}));
    }
    return doc;
}

io::CircuitDoc gen_toffoli(ToffoliStrategy strategy) {
    CircuitDoc doc;
    doc.name = "toffoli";
    add_register(doc, "a", 1);
    add_register(doc, "b", 1);
    add_register(doc, "c", 1);
    declare_toffoli(doc, strategy);
    doc.gates.push_back(g("toffoli", {"a", "b", "c"}));
    return doc;
}

io::CircuitDoc gen_toffoli_network(int gates, int registers, ToffoliStrategy strategy,
                                   std::uint64_t seed) {
    if (registers < 3) throw ParseError("toffoli network needs at least three registers");
    CircuitDoc doc;
    doc.name = "toffoli_network_g" + std::to_string(gates) + "_q" + std::to_string(registers);
    add_register(doc, "q", registers);
    declare_toffoli(doc, strategy);
    std::mt19937_64 rng(seed);
    std::vector<int> pool(registers);
    for (int i = 0; i < registers; ++i) pool[i] = i;
    for (int k = 0; k < gates; ++k) {
        std::shuffle(pool.begin(), pool.end(), rng);
        doc.gates.push_back(
            g("toffoli", {idx("q", pool[0]), idx("q", pool[1]), idx("q", pool[2])}));
    }
    return doc;
}

namespace {

// Balanced multi-controlled X: split the controls, compute each half into an
// ancilla, combine, uncompute. No ancilla reuse across the recursion.
void emit_mcx(CircuitDoc& doc, std::vector<std::string> controls, const std::string& target,
              int& fresh_anc) {
    if (controls.size() == 1) {
        doc.gates.push_back(g("cnot", {controls[0], target}));
        return;
    }
    if (controls.size() == 2) {
        doc.gates.push_back(g("toffoli", {controls[0], controls[1], target}));
        return;
    }
    int a = static_cast<int>((controls.size() + 1) / 2);
    std::vector<std::string> left(controls.begin(), controls.begin() + a);
    std::vector<std::string> right(controls.begin() + a, controls.end());
    std::string anc_l = idx("anc", fresh_anc++);
    std::string anc_r = idx("anc", fresh_anc++);
    doc.gates.push_back(g("prep_0", {anc_l}));
    doc.gates.push_back(g("prep_0", {anc_r}));
    size_t l0 = doc.gates.size();
    emit_mcx(doc, left, anc_l, fresh_anc);
    size_t l1 = doc.gates.size();
    emit_mcx(doc, right, anc_r, fresh_anc);
    size_t r1 = doc.gates.size();
    doc.gates.push_back(g("toffoli", {anc_l, anc_r, target}));
    // Each half block is an involution on its ancilla; replaying it is the
    // uncompute.
    std::vector<GateCall> lblk(doc.gates.begin() + l0, doc.gates.begin() + l1);
    std::vector<GateCall> rblk(doc.gates.begin() + l1, doc.gates.begin() + r1);
    doc.gates.insert(doc.gates.end(), rblk.begin(), rblk.end());
    doc.gates.insert(doc.gates.end(), lblk.begin(), lblk.end());
}

int mcx_ancilla_count(int n) {
    if (n <= 2) return 0;
    int a = (n + 1) / 2;
    return 2 + mcx_ancilla_count(a) + mcx_ancilla_count(n - a);
}

}  // namespace

io::CircuitDoc gen_mcx(int n_controls, ToffoliStrategy strategy) {
    if (n_controls < 1) throw ParseError("mcx needs at least one control");
    CircuitDoc doc;
    doc.name = "mcx_" + std::to_string(n_controls);
    add_register(doc, "c", n_controls);
    add_register(doc, "t", 1);
    int ancillae = mcx_ancilla_count(n_controls);
    if (ancillae > 0) add_register(doc, "anc", ancillae);
    declare_toffoli(doc, strategy);
    std::vector<std::string> controls;
    for (int i = 0; i < n_controls; ++i) controls.push_back(idx("c", i));
    int fresh = 0;
    emit_mcx(doc, controls, "t", fresh);
    return doc;
}

io::CircuitDoc gen_qft(int n, bool use_externs) {
    if (n < 1) throw ParseError("qft needs at least one qubit");
    CircuitDoc doc;
    doc.name = "qft_" + std::to_string(n);
    add_register(doc, "q", n);

    int crz_count = n * (n - 1) / 2;
    // Aggregate precision budget, split evenly over the synthesized angles.
    double epsilon = crz_count > 0 ? 1e-3 / (3.0 * crz_count) : 1e-3;

    if (use_externs && crz_count > 0) {
        ir::ExternTemplate t;
        t.name = "CRZ";
        t.width = 4;
        t.height = 3;
        t.ops.push_back({"call", 2, 0, 20});
        doc.externs.push_back(t);
    }
    for (int i = 0; i < n; ++i) {
        doc.gates.push_back(g("h", {idx("q", i)}));
        for (int j = i + 1; j < n; ++j) {
            double theta = std::numbers::pi / std::pow(2.0, j - i);
            if (use_externs) {
                doc.gates.push_back(g("CRZ.call", {idx("q", j), idx("q", i)}));
            } else {
                GateCall half = g("rz", {idx("q", i)});
                half.params = {{"theta", theta / 2}, {"epsilon", epsilon}};
                GateCall neg = g("rz", {idx("q", i)});
                neg.params = {{"theta", -theta / 2}, {"epsilon", epsilon}};
                GateCall ctrl = g("rz", {idx("q", j)});
                ctrl.params = {{"theta", theta / 2}, {"epsilon", epsilon}};
                doc.gates.push_back(half);
                doc.gates.push_back(g("cnot", {idx("q", j), idx("q", i)}));
                doc.gates.push_back(neg);
                doc.gates.push_back(g("cnot", {idx("q", j), idx("q", i)}));
                doc.gates.push_back(ctrl);
            }
        }
    }
    return doc;
}

io::CircuitDoc gen_rz(double theta, double epsilon) {
    CircuitDoc doc;
    doc.name = "rz";
    add_register(doc, "q", 1);
    GateCall call = g("rz", {"q"});
    call.params = {{"theta", theta}, {"epsilon", epsilon}};
    doc.gates.push_back(call);
    return doc;
}

// --- arithmetic -----------------------------------------------------------------

io::CircuitDoc gen_adder(int n, ToffoliStrategy strategy) {
    if (n < 1) throw ParseError("adder needs at least one bit");
    CircuitDoc doc;
    doc.name = "adder_" + std::to_string(n);
    add_register(doc, "a", n);
    add_register(doc, "b", n + 1);
    add_register(doc, "carry", 1);
    declare_toffoli(doc, strategy);
    std::vector<std::string> xs, ys;
    for (int i = 0; i < n; ++i) xs.push_back(idx("a", i));
    for (int i = 0; i <= n; ++i) ys.push_back(idx("b", i));
    emit_cuccaro(doc, xs, ys, "carry");
    return doc;
}

io::CircuitDoc gen_multiplier(int a_bits, int b_bits, ToffoliStrategy strategy) {
    if (a_bits < 1 || b_bits < 1) throw ParseError("multiplier operands need at least one bit");
    CircuitDoc doc;
    doc.name = "multiplier_" + std::to_string(a_bits) + "x" + std::to_string(b_bits);
    add_register(doc, "a", a_bits);
    add_register(doc, "b", b_bits);
    add_register(doc, "out", a_bits + b_bits + 1);
    add_register(doc, "tmp", a_bits);
    add_register(doc, "carry", 1);
    declare_toffoli(doc, strategy);

    for (int round = 0; round < b_bits; ++round) {
        // Conditionally copy the multiplicand, add it into the shifted output
        // window, then uncompute the copy.
        for (int j = 0; j < a_bits; ++j)
            doc.gates.push_back(g("toffoli", {idx("b", round), idx("a", j), idx("tmp", j)}));
        std::vector<std::string> xs, ys;
        for (int j = 0; j < a_bits; ++j) xs.push_back(idx("tmp", j));
        for (int j = 0; j <= a_bits; ++j) ys.push_back(idx("out", round + j));
        emit_cuccaro(doc, xs, ys, "carry");
        for (int j = 0; j < a_bits; ++j)
            doc.gates.push_back(g("toffoli", {idx("b", round), idx("a", j), idx("tmp", j)}));
    }
    return doc;
}

// Exact whenever the true quotient fits its a-b+1 bit register, i.e. for
// divisors v >= 2^(b-1), and for smaller divisors while d < v * 2^(a-b+1).
io::CircuitDoc gen_divider(int a_bits, int b_bits, ToffoliStrategy strategy) {
    if (b_bits < 1 || a_bits < b_bits)
        throw ParseError("divider needs dividend at least as wide as the divisor");
    CircuitDoc doc;
    doc.name = "divider_" + std::to_string(a_bits) + "by" + std::to_string(b_bits);
    add_register(doc, "d", a_bits);
    add_register(doc, "v", b_bits);
    add_register(doc, "r", a_bits + 1);
    add_register(doc, "q", a_bits - b_bits + 1);
    add_register(doc, "s", 1);
    add_register(doc, "tmp", b_bits);
    add_register(doc, "carry", 1);
    declare_toffoli(doc, strategy);

    for (int j = 0; j < a_bits; ++j) doc.gates.push_back(g("cnot", {idx("d", j), idx("r", j)}));

    auto window = [&](int i) {
        std::vector<std::string> ys;
        for (int j = 0; j <= b_bits; ++j) ys.push_back(idx("r", i + j));
        return ys;
    };
    std::vector<std::string> vs;
    for (int j = 0; j < b_bits; ++j) vs.push_back(idx("v", j));

    // Trial division: subtract, inspect the borrow, conditionally restore.
    for (int i = a_bits - b_bits; i >= 0; --i) {
        auto ys = window(i);
        for (const auto& y : ys) doc.gates.push_back(g("x", {y}));
        emit_cuccaro(doc, vs, ys, "carry");
        for (const auto& y : ys) doc.gates.push_back(g("x", {y}));

        doc.gates.push_back(g("cnot", {idx("r", i + b_bits), "s"}));
        // Restore by adding back the divisor, gated through a copy.
        for (int j = 0; j < b_bits; ++j)
            doc.gates.push_back(g("toffoli", {"s", idx("v", j), idx("tmp", j)}));
        std::vector<std::string> ts;
        for (int j = 0; j < b_bits; ++j) ts.push_back(idx("tmp", j));
        emit_cuccaro(doc, ts, ys, "carry");
        for (int j = 0; j < b_bits; ++j)
            doc.gates.push_back(g("toffoli", {"s", idx("v", j), idx("tmp", j)}));

        doc.gates.push_back(g("x", {idx("q", i)}));
        doc.gates.push_back(g("cnot", {"s", idx("q", i)}));
        doc.gates.push_back(g("cnot", {idx("q", i), "s"}));
        doc.gates.push_back(g("x", {"s"}));
    }
    return doc;
}

// --- memory ---------------------------------------------------------------------

io::CircuitDoc gen_qram_bb(int addr_bits, int word_bits, bool use_externs) {
    if (addr_bits < 1) throw ParseError("qram needs at least one address bit");
    if (word_bits < 1) throw ParseError("qram word must be at least one bit");
    CircuitDoc doc;
    doc.name = "qram_bb_a" + std::to_string(addr_bits) + "_w" + std::to_string(word_bits);
    int leaves = 1 << addr_bits;
    int nodes = leaves - 1;  // heap-ordered binary tree of routers
    add_register(doc, "addr", addr_bits);
    add_register(doc, "m", leaves * word_bits);
    add_register(doc, "rt", nodes);
    add_register(doc, "lane", nodes);
    add_register(doc, "bus", nodes * word_bits);
    add_register(doc, "out", word_bits);
    doc.macros.push_back(toffoli_macro(ToffoliStrategy::TDag));
    doc.macros.push_back(swap_macro());
    doc.macros.push_back(cswap_macro());
    doc.macros.push_back(bb_gadget_macro());
    if (use_externs) {
        ir::ExternTemplate t;
        t.name = "BB";
        t.width = 4;
        t.height = 2;
        t.ops.push_back({"call", 4, 0, 24});
        doc.externs.push_back(t);
    }
    auto gadget = [&](const std::string& c, const std::string& p, const std::string& l,
                      const std::string& r) {
        if (use_externs)
            doc.gates.push_back(g("BB.call", {c, p, l, r}));
        else
            doc.gates.push_back(g("bb_gadget", {c, p, l, r}));
    };
    auto mem = [&](int leaf, int w) { return idx("m", leaf * word_bits + w); };
    auto bus = [&](int node, int w) { return idx("bus", node * word_bits + w); };

    std::vector<GateCall> forward;
    auto record = [&](size_t from) {
        std::vector<GateCall> tail(doc.gates.begin() + from, doc.gates.end());
        forward.insert(forward.end(), tail.begin(), tail.end());
    };

    // Address delivery: carry each bit down the already-set routers, then
    // deposit it at its level. Level L steers path weight 2^(n-1-L).
    size_t mark = doc.gates.size();
    for (int bit = 0; bit < addr_bits; ++bit) {
        doc.gates.push_back(
            g("cnot", {idx("addr", addr_bits - 1 - bit), idx("lane", 0)}));
        for (int level = 0; level < bit; ++level) {
            int first = (1 << level) - 1;
            for (int p = first; p < (1 << (level + 1)) - 1; ++p)
                gadget(idx("rt", p), idx("lane", p), idx("lane", 2 * p + 1),
                       idx("lane", 2 * p + 2));
        }
        int first = (1 << bit) - 1;
        for (int p = first; p < (1 << (bit + 1)) - 1; ++p)
            doc.gates.push_back(g("swap2", {idx("lane", p), idx("rt", p)}));
    }
    // Data routing: swap the addressed word up the bus, read it out, swap it
    // back. The routing network is uncomputed afterwards.
    for (int level = addr_bits - 1; level >= 0; --level) {
        int first = (1 << level) - 1;
        bool bottom = level == addr_bits - 1;
        for (int p = first; p < (1 << (level + 1)) - 1; ++p) {
            for (int w = 0; w < word_bits; ++w) {
                std::string left = bottom ? mem(2 * (p - first), w) : bus(2 * p + 1, w);
                std::string right = bottom ? mem(2 * (p - first) + 1, w) : bus(2 * p + 2, w);
                gadget(idx("rt", p), bus(p, w), left, right);
            }
        }
    }
    record(mark);
    for (int w = 0; w < word_bits; ++w)
        doc.gates.push_back(g("cnot", {bus(0, w), idx("out", w)}));
    // Uncompute by replaying the forward network in reverse (each gadget is
    // self-inverse).
    for (auto it = forward.rbegin(); it != forward.rend(); ++it) doc.gates.push_back(*it);
    return doc;
}

io::CircuitDoc gen_qram_fanout_swap(int addr_bits, int word_bits, ToffoliStrategy strategy) {
    if (addr_bits < 1) throw ParseError("qram needs at least one address bit");
    if (word_bits < 1) throw ParseError("qram word must be at least one bit");
    CircuitDoc doc;
    doc.name = "qram_fs_a" + std::to_string(addr_bits) + "_w" + std::to_string(word_bits);
    int leaves = 1 << addr_bits;
    add_register(doc, "addr", addr_bits);
    add_register(doc, "m", leaves * word_bits);
    add_register(doc, "out", word_bits);
    declare_toffoli(doc, strategy);
    doc.macros.push_back(cswap_macro());

    // One gadget per layer: a controlled swap of two banks of k registers,
    // performed in place on the memory block.
    std::vector<ir::MacroDef> gadgets;
    auto gadget_for = [&](int k) -> std::string {
        std::string name = "fs_gadget_" + std::to_string(k);
        for (const auto& m : gadgets)
            if (m.name == name) return name;
        ir::MacroDef m;
        m.name = name;
        m.formals.push_back("c");
        for (int j = 0; j < k * word_bits; ++j) {
            m.formals.push_back("u" + std::to_string(j));
            m.formals.push_back("v" + std::to_string(j));
        }
        for (int j = 0; j < k * word_bits; ++j) {
            ir::MacroDef::BodyGate bg;
            bg.op = "cswap";
            bg.args = {ir::parse_symbol("c"), ir::parse_symbol("u" + std::to_string(j)),
                       ir::parse_symbol("v" + std::to_string(j))};
            m.body.push_back(std::move(bg));
        }
        gadgets.push_back(m);
        return name;
    };

    auto emit_layer = [&](int bit) {
        // Bank size matches the weight of the steering address bit.
        int k = 1 << (addr_bits - 1 - bit);
        std::vector<std::string> args{idx("addr", addr_bits - 1 - bit)};
        for (int j = 0; j < k; ++j)
            for (int w = 0; w < word_bits; ++w) {
                args.push_back(idx("m", j * word_bits + w));
                args.push_back(idx("m", (j + k) * word_bits + w));
            }
        doc.gates.push_back(g(gadget_for(k), args));
    };

    for (int bit = 0; bit < addr_bits; ++bit) emit_layer(bit);
    for (int w = 0; w < word_bits; ++w)
        doc.gates.push_back(g("cnot", {idx("m", w), idx("out", w)}));
    for (int bit = addr_bits - 1; bit >= 0; --bit) emit_layer(bit);

    for (const auto& m : gadgets) doc.macros.push_back(m);
    return doc;
}

// --- registry -------------------------------------------------------------------

namespace {

int param_int(const std::map<std::string, std::string>& p, const std::string& key, int def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    return std::stoi(it->second);
}

double param_double(const std::map<std::string, std::string>& p, const std::string& key,
                    double def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    return std::stod(it->second);
}

std::uint64_t param_seed(const std::map<std::string, std::string>& p) {
    auto it = p.find("seed");
    if (it == p.end()) return 1;
    return std::stoull(it->second);
}

ToffoliStrategy param_strategy(const std::map<std::string, std::string>& p) {
    auto it = p.find("strategy");
    if (it == p.end()) return ToffoliStrategy::TDag;
    return strategy_from_string(it->second);
}

}  // namespace

std::vector<std::string> family_names() {
    return {"cnot-network", "t-factory-15-1", "t-factory-slice", "ccz-factory",
            "toffoli",      "toffoli-network", "mcx",            "qft",
            "rz",           "adder",           "multiplier",     "divider",
            "qram-bb",      "qram-fanout-swap"};
}

io::CircuitDoc generate(const std::string& family,
                        const std::map<std::string, std::string>& params) {
    if (family == "cnot-network")
        return gen_cnot_network(param_int(params, "n", 8), param_int(params, "rounds", 20),
                                param_seed(params));
    if (family == "t-factory-15-1")
        return gen_t_factory(param_int(params, "level", 1), FactoryStyle::Parallel15);
    if (family == "t-factory-slice")
        return gen_t_factory(param_int(params, "level", 1), FactoryStyle::Slice);
    if (family == "ccz-factory") return gen_ccz_factory(param_int(params, "fast", 0) != 0);
    if (family == "toffoli") return gen_toffoli(param_strategy(params));
    if (family == "toffoli-network")
        return gen_toffoli_network(param_int(params, "gates", 18),
                                   param_int(params, "registers", 6), param_strategy(params),
                                   param_seed(params));
    if (family == "mcx") return gen_mcx(param_int(params, "n", 4), param_strategy(params));
    if (family == "qft")
        return gen_qft(param_int(params, "n", 4), param_int(params, "externs", 0) != 0);
    if (family == "rz")
        return gen_rz(param_double(params, "theta", 0.3),
                      param_double(params, "epsilon", 1e-10));
    if (family == "adder") return gen_adder(param_int(params, "n", 4), param_strategy(params));
    if (family == "multiplier")
        return gen_multiplier(param_int(params, "a", 3), param_int(params, "b", 3),
                              param_strategy(params));
    if (family == "divider")
        return gen_divider(param_int(params, "a", 4), param_int(params, "b", 2),
                           param_strategy(params));
    if (family == "qram-bb")
        return gen_qram_bb(param_int(params, "addr", 2), param_int(params, "word", 1),
                           param_int(params, "externs", 0) != 0);
    if (family == "qram-fanout-swap")
        return gen_qram_fanout_swap(param_int(params, "addr", 2), param_int(params, "word", 1),
                                    param_strategy(params));
    throw ParseError("unknown generator family '" + family + "'");
}

// --- classical simulator ----------------------------------------------------------

int BitVectorState::at(const ir::RegisterSymbol& sym) const {
    auto it = bits.find(sym);
    return it == bits.end() ? 0 : it->second;
}

BitVectorState classical_simulate(const ir::CircuitDag& dag,
                                  const std::map<ir::RegisterSymbol, int>& inputs) {
    // Expand every macro except `toffoli`, which the simulator handles
    // natively as a classical AND.
    std::vector<ir::MacroDef> defs;
    for (const auto& m : dag.macros)
        if (m.name != "toffoli") defs.push_back(m);
    ir::CircuitDag flat = ir::expand_macros(dag, defs);

    BitVectorState state;
    for (const auto& sym : flat.symbols) state.bits[sym] = 0;
    for (const auto& [sym, value] : inputs) state.bits[sym] = value ? 1 : 0;

    for (const auto& node : flat.nodes) {
        const auto& ops = node.operands;
        if (node.kind == ir::NodeKind::MacroCall && node.opcode == "toffoli") {
            state.bits[ops[2]] ^= state.bits[ops[0]] & state.bits[ops[1]];
        } else if (node.opcode == "x") {
            state.bits[ops[0]] ^= 1;
        } else if (node.opcode == "cnot") {
            for (size_t k = 1; k < ops.size(); ++k)
                state.bits[ops[k]] ^= state.bits[ops[0]];
        } else if (node.opcode == "prep_0") {
            state.bits[ops[0]] = 0;
        } else if (node.opcode == "meas_z") {
            // Reads the bit; no state change.
        } else {
            throw ParseError("non-classical-gate: '" + node.opcode + "'");
        }
        ++state.gates_applied;
    }
    return state;
}

void set_uint(std::map<ir::RegisterSymbol, int>& bits, const std::string& reg, int width,
              std::uint64_t value) {
    for (int i = 0; i < width; ++i)
        bits[{reg, static_cast<std::uint32_t>(i)}] = static_cast<int>((value >> i) & 1);
}

std::uint64_t read_uint(const BitVectorState& state, const std::string& reg, int width) {
    std::uint64_t value = 0;
    for (int i = 0; i < width; ++i)
        value |= static_cast<std::uint64_t>(state.at({reg, static_cast<std::uint32_t>(i)})) << i;
    return value;
}

}  // namespace lsc::gen
