#include "lsc/device.hpp"

#include "lsc/errors.hpp"

namespace lsc {

namespace {

std::map<std::string, GateInfo> default_table() {
    std::map<std::string, GateInfo> t;
    auto add = [&t](GateInfo g) { t[g.opcode] = std::move(g); };

    // Local unary operations.
    add({"prep_0", 1, 1, 1, false});
    add({"prep_plus", 1, 1, 1, false});
    add({"meas_x", 1, 1, 1, false});
    add({"meas_z", 1, 1, 1, false});
    // Pauli frame updates are free.
    add({"x", 0, 1, 1, false});
    add({"z", 0, 1, 1, false});
    // Hadamard is a boundary rotation: patch plus one adjacent ancilla.
    add({"h", 3, 1, 1, true, Boundary::Either});
    // Rotation injected by edge tracking; same footprint as h.
    add({"rotate", 3, 1, 1, true, Boundary::Either});
    // Phase gates consume a |Y> state through an adjacent merge.
    add({"s", 2, 1, 1, true, Boundary::Z});
    add({"sdg", 2, 1, 1, true, Boundary::Z});
    // T gates consume the output of a magic state source.
    add({"t", 2, 1, 1, true, Boundary::Z, Boundary::Z, "T"});
    add({"tdg", 2, 1, 1, true, Boundary::Z, Boundary::Z, "T"});
    // Merge/split pairs; extra operands act as additional targets of one joint
    // measurement gadget at the same cost.
    add({"cnot", 2, 2, -1, true, Boundary::Z, Boundary::X});
    add({"cz", 2, 2, -1, true, Boundary::Z, Boundary::Z});
    // Toffoli from a CCZ resource state (plus local Hadamards at the call site).
    add({"ccz", 2, 3, 3, true, Boundary::Z, Boundary::Z, "CCZ"});
    return t;
}

}  // namespace

DeviceSpec::DeviceSpec() : table_(default_table()) {}

DeviceSpec::DeviceSpec(int w, int h, int d)
    : width(w), height(h), code_distance(d), table_(default_table()) {}

const GateInfo* DeviceSpec::find_gate(const std::string& opcode) const {
    auto it = table_.find(opcode);
    return it == table_.end() ? nullptr : &it->second;
}

const GateInfo& DeviceSpec::gate(const std::string& opcode) const {
    const GateInfo* g = find_gate(opcode);
    if (!g) throw ParseError("unknown-opcode: " + opcode);
    return *g;
}

void DeviceSpec::override_cost(const std::string& opcode, int cycles) {
    auto it = table_.find(opcode);
    if (it == table_.end()) throw ParseError("unknown-opcode in gate_costs: " + opcode);
    if (cycles < 0) throw ParseError("gate cost must be non-negative: " + opcode);
    it->second.cycles = cycles;
}

}  // namespace lsc
