#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lsc {

// Which boundary of a patch an operand must expose to the bus.
enum class Boundary { X, Z, Either };

// Static description of one native opcode.
struct GateInfo {
    std::string opcode;
    int cycles = 0;           // tocs
    int min_arity = 1;
    int max_arity = 1;        // -1: unbounded (multi-target merges)
    bool nonlocal = false;    // consumes one routing channel while active
    Boundary first = Boundary::Either;   // boundary of operand 0
    Boundary rest = Boundary::Either;    // boundary of operands 1..n
    std::string extern_type;  // non-empty: each use depends on a fresh instance of this extern
};

// Device description: board dimensions, code distance and the gate cost table.
// Costs are defaults overridable through the device document's `gate_costs`.
class DeviceSpec {
public:
    DeviceSpec();
    DeviceSpec(int width, int height, int code_distance = 1);

    int width = 16;
    int height = 16;
    int code_distance = 1;
    // Default patch layout: Z boundaries face up/down, X left/right. The
    // device document may flip this convention.
    bool x_boundaries_vertical = false;

    const GateInfo* find_gate(const std::string& opcode) const;
    const GateInfo& gate(const std::string& opcode) const;  // throws ParseError if unknown
    void override_cost(const std::string& opcode, int cycles);

    const std::map<std::string, GateInfo>& gate_table() const { return table_; }

private:
    std::map<std::string, GateInfo> table_;
};

}  // namespace lsc
