#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "lsc/cli.hpp"
#include "lsc/errors.hpp"
#include "lsc/json_io.hpp"
#include "lsc/mapper.hpp"
#include "lsc/qcb.hpp"
#include "lsc/render.hpp"
#include "lsc/router.hpp"
#include "lsc/sched.hpp"
#include "lsc/stdlib.hpp"
#include "lsc/synth.hpp"

namespace py = pybind11;
using namespace lsc;

namespace {

router::Policy policy_from(const std::string& name) {
    if (name == "heuristic") return router::Policy::HeuristicLocked;
    if (name == "fifo") return router::Policy::FifoPerType;
    if (name == "shared") return router::Policy::SharedPool;
    throw ParseError("unknown policy '" + name + "'");
}

struct CompileOutput {
    long long total_cycles = 0;
    long long spacetime_volume = 0;
    long long instruction_count = 0;
    std::string stream_jsonl;
    std::string report_json;
    std::string layout_json;
    std::string layout_ascii;
    std::string map_json;
    std::string extern_json;  // empty when the circuit has no IO
};

CompileOutput compile_circuit(const std::string& circuit_json, const std::string& device_json,
                              const std::string& policy, bool disjoint, bool optimize) {
    DeviceSpec device = io::device_from_json(device_json);
    auto doc = io::doc_from_json(circuit_json);
    auto dag = io::parse_circuit(doc, device);
    dag = ir::expand_macros(dag, dag.macros);
    auto board = qcb::initial_placement(dag, device.width, device.height);
    if (optimize) board = qcb::optimize_placement(board, dag, sched::make_estimator(dag));
    auto violations = qcb::validate_qcb(board, dag);
    if (!violations.empty()) throw ValidationError("board violations: " + violations.front());
    auto map = mapper::map_circuit(board, dag);

    router::RouterOptions opts;
    opts.policy = policy_from(policy);
    opts.disjoint = disjoint;
    auto result = router::compile(dag, board, map, device, opts);

    CompileOutput out;
    out.total_cycles = result.total_cycles;
    out.spacetime_volume = result.spacetime_volume;
    out.instruction_count = static_cast<long long>(result.instructions.size());
    out.stream_jsonl = io::stream_to_jsonl(result.instructions);
    out.report_json = io::report_to_json(router::cost_report(result, device));
    out.layout_json = io::layout_to_json(board);
    out.layout_ascii = render::ascii_board(board);
    out.map_json = io::map_to_json(map);
    if (!dag.io_symbols.empty())
        out.extern_json = io::template_to_json(
            router::package_as_extern(result, dag.name.empty() ? "compiled" : dag.name));
    return out;
}

long long estimate_cycles_py(const std::string& circuit_json, int routing_channels,
                             const std::map<std::string, std::vector<std::pair<int, int>>>&
                                 extern_slots) {
    auto doc = io::doc_from_json(circuit_json);
    auto dag = io::parse_circuit(doc);
    dag = ir::expand_macros(dag, dag.macros);
    sched::HeuristicConfig cfg;
    cfg.routing_channels = routing_channels;
    cfg.extern_slots = extern_slots;
    return sched::estimate(dag, cfg).makespan;
}

std::map<std::string, int> classical_simulate_py(const std::string& circuit_json,
                                                 const std::map<std::string, int>& inputs) {
    auto doc = io::doc_from_json(circuit_json);
    auto dag = io::parse_circuit(doc);
    std::map<ir::RegisterSymbol, int> in;
    for (const auto& [name, value] : inputs) in[ir::parse_symbol(name)] = value;
    auto state = gen::classical_simulate(dag, in);
    std::map<std::string, int> out;
    for (const auto& [sym, bit] : state.bits) out[sym.str()] = bit;
    return out;
}

std::vector<std::string> validate_stream_py(const std::string& stream_jsonl,
                                            const std::string& layout_json,
                                            const std::string& circuit_json) {
    auto stream = io::stream_from_jsonl(stream_jsonl);
    auto board = io::layout_from_json(layout_json);
    ir::CircuitDag dag;
    if (!circuit_json.empty()) {
        auto doc = io::doc_from_json(circuit_json);
        dag = io::parse_circuit(doc);
        dag = ir::expand_macros(dag, dag.macros);
    }
    return router::validate_stream(stream, board, dag);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lattice surgery compiler: circuit documents in, cycle-exact "
              "instruction streams and cost reports out.";

    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<AllocationError>(m, "AllocationError");
    py::register_exception<RoutingError>(m, "RoutingError");
    py::register_exception<ValidationError>(m, "ValidationError");

    py::class_<CompileOutput>(m, "CompileOutput")
        .def_readonly("total_cycles", &CompileOutput::total_cycles)
        .def_readonly("spacetime_volume", &CompileOutput::spacetime_volume)
        .def_readonly("instruction_count", &CompileOutput::instruction_count)
        .def_readonly("stream_jsonl", &CompileOutput::stream_jsonl)
        .def_readonly("report_json", &CompileOutput::report_json)
        .def_readonly("layout_json", &CompileOutput::layout_json)
        .def_readonly("layout_ascii", &CompileOutput::layout_ascii)
        .def_readonly("map_json", &CompileOutput::map_json)
        .def_readonly("extern_json", &CompileOutput::extern_json)
        .def("__repr__", [](const CompileOutput& c) {
            return "<CompileOutput cycles=" + std::to_string(c.total_cycles) +
                   " volume=" + std::to_string(c.spacetime_volume) + ">";
        });

    m.def("compile_circuit", &compile_circuit, py::arg("circuit_json"),
          py::arg("device_json"), py::arg("policy") = "heuristic",
          py::arg("disjoint") = false, py::arg("optimize") = true,
          "Run the full pipeline: parse, place, map and route a circuit "
          "document onto a device, returning the instruction stream and cost "
          "report.");

    m.def(
        "generate",
        [](const std::string& family, const std::map<std::string, std::string>& params) {
            return io::doc_to_json(gen::generate(family, params));
        },
        py::arg("family"), py::arg("params") = std::map<std::string, std::string>{},
        "Emit a benchmark circuit document by family name.");

    m.def("families", [] { return gen::family_names(); },
          "Available generator family names.");

    m.def("estimate_cycles", &estimate_cycles_py, py::arg("circuit_json"),
          py::arg("routing_channels"), py::arg("extern_slots"),
          "Cycle estimate under a routing-channel semaphore and per-type "
          "extern slot footprints.");

    m.def("classical_simulate", &classical_simulate_py, py::arg("circuit_json"),
          py::arg("inputs") = std::map<std::string, int>{},
          "Exact bit-vector evolution of an X/CNOT/Toffoli circuit.");

    m.def("validate_stream", &validate_stream_py, py::arg("stream_jsonl"),
          py::arg("layout_json"), py::arg("circuit_json") = std::string(),
          "Lock, dependency and route-legality scans over an instruction "
          "stream.");

    m.def(
        "synthesize_rz",
        [](double theta, double epsilon) { return synth::synthesize_rz(theta, epsilon); },
        py::arg("theta"), py::arg("epsilon"),
        "Clifford+T opcode sequence for an Rz rotation at the given precision.");

    m.def(
        "render_svg",
        [](const std::string& layout_json) {
            return render::svg_board(io::layout_from_json(layout_json));
        },
        py::arg("layout_json"), "SVG rendering of a board layout document.");

    m.attr("__version__") = "0.1.0";
}
