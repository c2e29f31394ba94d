#pragma once

#include <random>
#include <string>
#include <vector>

#include "lsc/ir.hpp"
#include "lsc/json_io.hpp"

namespace lsc::test {

inline io::GateCall call(const std::string& op, std::vector<std::string> args) {
    return {op, std::move(args), {}, ""};
}

inline io::CircuitDoc doc_with_register(const std::string& name, int size) {
    io::CircuitDoc doc;
    doc.registers.push_back({name, static_cast<std::uint32_t>(size)});
    return doc;
}

inline ir::CircuitDag parse(const io::CircuitDoc& doc) {
    return io::parse_circuit(doc);
}

inline ir::CircuitDag parse_expanded(const io::CircuitDoc& doc) {
    auto dag = io::parse_circuit(doc);
    return ir::expand_macros(dag, dag.macros);
}

// Random circuit over `n` registers mixing local and non-local gates;
// `t_fraction` controls how often a magic-state consumption appears.
inline io::CircuitDoc random_circuit(int n, int gates, std::uint64_t seed,
                                     double t_fraction = 0.2) {
    io::CircuitDoc doc;
    doc.name = "random_" + std::to_string(seed);
    doc.registers.push_back({"q", static_cast<std::uint32_t>(n)});
    std::mt19937_64 rng(seed);
    auto q = [&](int i) { return "q[" + std::to_string(i) + "]"; };
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < gates; ++k) {
        double roll = unit(rng);
        int a = static_cast<int>(rng() % n);
        if (roll < t_fraction) {
            doc.gates.push_back(call("t", {q(a)}));
        } else if (roll < t_fraction + 0.35) {
            int b = static_cast<int>(rng() % n);
            if (b == a) b = (a + 1) % n;
            doc.gates.push_back(call("cnot", {q(a), q(b)}));
        } else if (roll < t_fraction + 0.55) {
            doc.gates.push_back(call("h", {q(a)}));
        } else if (roll < t_fraction + 0.75) {
            doc.gates.push_back(call("s", {q(a)}));
        } else {
            doc.gates.push_back(call(roll < t_fraction + 0.9 ? "x" : "prep_0", {q(a)}));
        }
    }
    return doc;
}

}  // namespace lsc::test
