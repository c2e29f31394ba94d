#include "lsc/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lsc/errors.hpp"
#include "lsc/json_io.hpp"
#include "lsc/render.hpp"
#include "lsc/stdlib.hpp"

namespace lsc::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << content;
}

struct Pipeline {
    DeviceSpec device;
    ir::CircuitDag dag;
    qcb::Qcb board{2, 2};
    mapper::QubitMap map;
    router::CompilationResult result;
};

// LSC_LOG=debug traces the pipeline stages on stderr.
bool log_debug() {
    const char* level = std::getenv("LSC_LOG");
    return level && std::string(level) == "debug";
}

void log_stage(const std::string& what) {
    if (log_debug()) std::cerr << "[lsc] " << what << "\n";
}

// Parse, expand, place, map and route one circuit on one device.
Pipeline run_pipeline(const io::CircuitDoc& doc, const DeviceSpec& device,
                      const RunConfig& config) {
    Pipeline p;
    p.device = device;
    p.dag = io::parse_circuit(doc, device);
    p.dag = ir::expand_macros(p.dag, p.dag.macros);
    log_stage("parsed " + doc.name + ": " + std::to_string(p.dag.nodes.size()) + " nodes");
    p.board = qcb::initial_placement(p.dag, device.width, device.height);
    log_stage("initial placement done");
    if (config.optimize) {
        p.board = qcb::optimize_placement(p.board, p.dag, sched::make_estimator(p.dag));
        log_stage("optimisation placement done");
    }

    auto violations = qcb::validate_qcb(p.board, p.dag);
    if (!violations.empty()) {
        std::string msg = "placement violates board constraints:";
        for (const auto& v : violations) msg += " " + v + ";";
        throw ValidationError(msg);
    }
    p.map = mapper::map_circuit(p.board, p.dag);
    log_stage("mapping done: " + std::to_string(p.map.where.size()) + " symbols");

    router::RouterOptions opts;
    opts.policy = config.policy;
    opts.disjoint = config.disjoint;
    p.result = router::compile(p.dag, p.board, p.map, device, opts);
    log_stage("routing done: " + std::to_string(p.result.total_cycles) + " cycles");
    return p;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
            case ErrorKind::Parse: return kExitParse;
            case ErrorKind::Allocation: return kExitAllocation;
            case ErrorKind::Routing: return kExitRouting;
            case ErrorKind::Validation: return kExitValidation;
        }
    }
    return kExitParse;
}

int cmd_compile(const RunConfig& config) {
    try {
        DeviceSpec device = io::device_from_json(read_file(config.device_path));
        io::CircuitDoc doc;
        if (!config.family.empty())
            doc = gen::generate(config.family, config.params);
        else
            doc = io::doc_from_json(read_file(config.circuit_path));

        Pipeline p = run_pipeline(doc, device, config);

        fs::path out(config.out_dir);
        write_file(out / "stream.jsonl", io::stream_to_jsonl(p.result.instructions));
        write_file(out / "report.json",
                   io::report_to_json(router::cost_report(p.result, device)));
        write_file(out / "layout.json", io::layout_to_json(p.board));
        write_file(out / "layout.txt", render::ascii_board(p.board));
        write_file(out / "layout.svg", render::svg_board(p.board));
        write_file(out / "map.json", io::map_to_json(p.map));
        if (!p.dag.io_symbols.empty()) {
            auto tmpl = router::package_as_extern(
                p.result, p.dag.name.empty() ? "compiled" : p.dag.name);
            write_file(out / "extern.json", io::template_to_json(tmpl));
        }
        std::cout << "compiled " << (doc.name.empty() ? "circuit" : doc.name) << ": "
                  << p.result.total_cycles << " cycles, volume "
                  << p.result.spacetime_volume << ", " << p.result.instructions.size()
                  << " instructions\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "compile failed: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int cmd_bench(const RunConfig& config) {
    try {
        if (config.family.empty()) throw ParseError("bench requires --family");
        if (config.sweep.empty()) {
            std::cout << "size,cycles,volume,status\n";
            return kExitOk;
        }
        std::ostringstream csv;
        csv << "size,cycles,volume,status\n";
        std::ostringstream jslines;
        for (const auto& [w, h] : config.sweep) {
            std::string size = std::to_string(w) + "x" + std::to_string(h);
            try {
                io::CircuitDoc doc = gen::generate(config.family, config.params);
                DeviceSpec device(w, h);
                Pipeline p = run_pipeline(doc, device, config);
                csv << size << "," << p.result.total_cycles << ","
                    << p.result.spacetime_volume << ",ok\n";
                jslines << "{\"size\": \"" << size << "\", \"cycles\": "
                        << p.result.total_cycles << ", \"volume\": "
                        << p.result.spacetime_volume << ", \"status\": \"ok\"}\n";
            } catch (const std::exception& e) {
                csv << size << ",,," << "error\n";
                jslines << "{\"size\": \"" << size << "\", \"status\": \"error\", "
                        << "\"detail\": \"" << e.what() << "\"}\n";
            }
        }
        fs::path out(config.out_dir);
        write_file(out / "bench.csv", csv.str());
        write_file(out / "bench.jsonl", jslines.str());
        std::cout << csv.str();
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "bench failed: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int cmd_validate(const RunConfig& config) {
    try {
        auto stream = io::stream_from_jsonl(read_file(config.stream_path));
        qcb::Qcb board = io::layout_from_json(read_file(config.layout_path));
        ir::CircuitDag dag;
        if (!config.circuit_path.empty()) {
            auto doc = io::doc_from_json(read_file(config.circuit_path));
            dag = io::parse_circuit(doc);
            dag = ir::expand_macros(dag, dag.macros);
        }
        auto violations = router::validate_stream(stream, board, dag);
        for (const auto& v : violations) std::cout << v << "\n";
        if (violations.empty()) {
            std::cout << "ok\n";
            return kExitOk;
        }
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "validate failed: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int cmd_render(const RunConfig& config) {
    try {
        qcb::Qcb board = io::layout_from_json(read_file(config.layout_path));
        fs::path out(config.out_dir);
        write_file(out / "board.txt", render::ascii_board(board));
        write_file(out / "board.svg", render::svg_board(board));
        if (!config.stream_path.empty()) {
            auto stream = io::stream_from_jsonl(read_file(config.stream_path));
            auto frames = render::ascii_frames(board, stream);
            std::ostringstream os;
            for (const auto& f : frames) os << f << "\n";
            write_file(out / "frames.txt", os.str());
            std::cout << frames.size() << " frames\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "render failed: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int cmd_gen(const RunConfig& config) {
    try {
        if (config.family.empty()) throw ParseError("gen requires --family");
        auto params = config.params;
        if (!params.count("seed")) params["seed"] = std::to_string(config.seed);
        io::CircuitDoc doc = gen::generate(config.family, params);
        std::string text = io::doc_to_json(doc);
        if (config.circuit_path.empty())
            std::cout << text;
        else
            write_file(config.circuit_path, text);
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "gen failed: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace lsc::cli
