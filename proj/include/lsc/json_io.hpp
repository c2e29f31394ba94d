#pragma once

#include <map>
#include <string>
#include <vector>

#include "lsc/device.hpp"
#include "lsc/ir.hpp"
#include "lsc/mapper.hpp"
#include "lsc/qcb.hpp"
#include "lsc/router.hpp"
#include "lsc/sched.hpp"
#include "lsc/synth.hpp"

namespace lsc::io {

// Source-level circuit document. This is the wire format consumed by
// `parse_circuit` and produced by the stdlib generators.
struct GateCall {
    std::string op;
    std::vector<std::string> args;
    std::map<std::string, double> params;
    std::string instance;  // extern reference matching; empty = fresh
};

struct RegisterDecl {
    std::string name;
    std::uint32_t size = 1;
};

struct IoEntry {
    std::string symbol;
    ir::IoDir dir = ir::IoDir::InOut;
};

struct CircuitDoc {
    std::string name;
    std::vector<RegisterDecl> registers;
    std::vector<IoEntry> io;
    std::vector<ir::MacroDef> macros;
    std::vector<ir::ExternTemplate> externs;
    std::vector<GateCall> gates;
};

// Builds the dependency DAG from a circuit document: every topological order
// refines the source's per-register time order. Unknown opcodes resolve
// against macro and extern declarations; rz gates synthesize to Clifford+T
// through the given provider. Macro calls stay as macro-call nodes until
// ir::expand_macros runs.
ir::CircuitDag parse_circuit(const CircuitDoc& doc, const DeviceSpec& device = DeviceSpec(),
                             const synth::Provider& rz_provider = synth::stub_provider);

// Document round trips. Parsers reject unknown fields.
CircuitDoc doc_from_json(const std::string& text);
std::string doc_to_json(const CircuitDoc& doc);

DeviceSpec device_from_json(const std::string& text);
std::string device_to_json(const DeviceSpec& device);

// Artifacts.
std::string stream_to_jsonl(const std::vector<router::Instruction>& stream);
std::vector<router::Instruction> stream_from_jsonl(const std::string& text);

std::string layout_to_json(const qcb::Qcb& board);
qcb::Qcb layout_from_json(const std::string& text);

std::string report_to_json(const router::CostReport& report);
std::string map_to_json(const mapper::QubitMap& map);
std::string trace_to_json(const sched::ScheduleTrace& trace);  // debugging dump

std::string template_to_json(const ir::ExternTemplate& tmpl);
ir::ExternTemplate template_from_json(const std::string& text);

}  // namespace lsc::io
