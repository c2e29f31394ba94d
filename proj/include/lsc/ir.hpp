#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lsc/device.hpp"

namespace lsc::ir {

// A symbolic register: one logical qubit named by the circuit.
struct RegisterSymbol {
    std::string name;
    std::uint32_t index = 0;

    auto operator<=>(const RegisterSymbol&) const = default;
    std::string str() const;          // "a[3]", or "a" when the register has size 1
};

RegisterSymbol parse_symbol(const std::string& text);

enum class NodeKind { Native, RotationInjected, ExternOp, MacroCall };

enum class IoDir { In, Out, InOut };

struct ExternOpSig {
    std::string name;
    int inputs = 0;
    int outputs = 0;
    int cycles = 1;
};

// Interface of an externally compiled board: footprint, named operations and
// their cycle counts. IO is presented along the bottom edge, inputs first,
// left to right.
struct ExternTemplate {
    std::string name;
    int width = 1;
    int height = 1;
    std::vector<ExternOpSig> ops;
    bool resettable = true;

    const ExternOpSig* find_op(const std::string& op_name) const;
    // The production op of factory-style externs: first op with no inputs.
    const ExternOpSig* production_op() const;
};

// One live instance of an extern template within a circuit. Distinct gates
// referencing the same instance are resolved to the same allocation.
struct ExternInstance {
    std::string type;
    std::string label;
    int first_node = -1;   // allocation point: first node touching the instance
};

struct ExternRef {
    std::string type;
    int instance = -1;     // index into CircuitDag::instances
    std::string op;        // extern op name; empty for magic-state sugar deps
};

struct GateNode {
    NodeKind kind = NodeKind::Native;
    std::string opcode;
    std::vector<RegisterSymbol> operands;
    int cycles = 0;
    std::vector<Boundary> boundary;           // per operand
    std::optional<ExternRef> extern_dep;
    int slack = 0;
    bool nonlocal = false;
    bool is_reset = false;                    // releases extern_dep's slot
};

struct MacroDef {
    std::string name;
    std::vector<std::string> formals;
    std::vector<std::pair<std::string, std::uint32_t>> locals;  // (name, size)
    // Body entries reference formals (by name, index 0) or locals.
    struct BodyGate {
        std::string op;
        std::vector<RegisterSymbol> args;
        std::map<std::string, double> params;
    };
    std::vector<BodyGate> body;
};

struct BarrierEdge {
    int src = -1;       // gate that consumes the prior allocation
    int dst = -1;       // allocation point (first node) of the blocked instance
    int instance = -1;  // the blocked instance
};

// Partially ordered gates over symbolic registers.
//
// `edges` is derived from the source order: for each register, consecutive
// users are chained producer -> consumer. Node indices are a topological
// order by construction.
struct CircuitDag {
    std::string name;
    std::vector<GateNode> nodes;
    std::vector<std::pair<int, int>> edges;
    std::vector<BarrierEdge> barriers;
    std::vector<RegisterSymbol> symbols;             // declaration order
    std::vector<RegisterSymbol> io_symbols;          // ordered IO channel
    std::vector<IoDir> io_dirs;
    std::map<std::string, ExternTemplate> extern_templates;
    std::vector<ExternInstance> instances;
    std::vector<MacroDef> macros;

    int add_node(GateNode node);
    void rebuild_edges();
    bool is_acyclic_with_barriers() const;

    // Register symbols that need a storage patch (declared minus IO).
    std::vector<RegisterSymbol> storage_symbols() const;
    // Extern types referenced by at least one node.
    std::set<std::string> used_extern_types() const;
    std::vector<int> consumers_of_instance(int instance) const;
    // Successor/predecessor views over `edges` only (no barriers).
    std::vector<std::vector<int>> successors() const;
    std::vector<std::vector<int>> predecessors() const;

    long long critical_path_length() const;          // resource-unlimited makespan
};

// Nominal footprints for magic-state opcodes used without an explicit extern
// declaration ("T" and "CCZ").
ExternTemplate default_extern_template(const std::string& type);

// --- operations ------------------------------------------------------------

// Substitutes macro bodies for macro-call nodes. Locals get fresh symbols per
// expansion; nested macros are expanded recursively (recursive cycles are an
// error). Dependency edges are rebuilt afterwards.
CircuitDag expand_macros(const CircuitDag& dag, const std::vector<MacroDef>& defs);

// For each extern type, blocks allocation k (0-based, k >= slots) until every
// consumer of allocation k - slots has completed. Keeps the graph acyclic.
CircuitDag attach_extern_barriers(const CircuitDag& dag, const std::map<std::string, int>& slots);

// Longest-path slack, ignoring resource limits and barriers. Critical-path
// nodes end up with slack 0.
CircuitDag compute_slack(const CircuitDag& dag);

}  // namespace lsc::ir
