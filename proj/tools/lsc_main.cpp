#include <CLI11.hpp>
#include <string>
#include <vector>

#include "lsc/cli.hpp"
#include "lsc/stdlib.hpp"

namespace {

// "key=value,key=value" parameter lists.
void parse_params(const std::vector<std::string>& raw,
                  std::map<std::string, std::string>& out) {
    for (const auto& entry : raw) {
        auto eq = entry.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("expected key=value: " + entry);
        out[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
}

std::vector<std::pair<int, int>> parse_sweep(const std::vector<std::string>& raw) {
    std::vector<std::pair<int, int>> out;
    for (const auto& entry : raw) {
        auto x = entry.find('x');
        if (x == std::string::npos) throw CLI::ValidationError("expected WxH: " + entry);
        out.push_back({std::stoi(entry.substr(0, x)), std::stoi(entry.substr(x + 1))});
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lattice surgery compiler"};
    app.require_subcommand(1);

    lsc::cli::RunConfig config;
    std::vector<std::string> raw_params, raw_sweep;
    std::string policy = "heuristic";
    bool no_optimize = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--policy", policy, "extern allocation policy: heuristic|fifo|shared");
        cmd->add_flag("--disjoint", config.disjoint, "enable disjoint path routing");
        cmd->add_flag("--no-optimize", no_optimize, "skip the optimisation placement round");
        cmd->add_option("--seed", config.seed, "generator seed");
        cmd->add_option("--out", config.out_dir, "output directory");
    };

    auto* compile = app.add_subcommand("compile", "compile a circuit onto a device");
    compile->add_option("--device", config.device_path, "device spec JSON")->required();
    compile->add_option("--circuit", config.circuit_path, "circuit document JSON");
    compile->add_option("--family", config.family, "generate the input circuit instead");
    compile->add_option("--param", raw_params, "generator parameter key=value");
    add_common(compile);

    auto* bench = app.add_subcommand("bench", "sweep a generator family over board sizes");
    bench->add_option("--family", config.family, "generator family")->required();
    bench->add_option("--param", raw_params, "generator parameter key=value");
    bench->add_option("--sweep", raw_sweep, "board sizes, e.g. 8x8 12x12")->required();
    add_common(bench);

    auto* validate = app.add_subcommand("validate", "check an instruction stream");
    validate->add_option("--stream", config.stream_path, "stream JSONL")->required();
    validate->add_option("--layout", config.layout_path, "board layout JSON")->required();
    validate->add_option("--circuit", config.circuit_path,
                         "circuit document (enables dependency checks)");

    auto* render = app.add_subcommand("render", "render a board and optional stream");
    render->add_option("--layout", config.layout_path, "board layout JSON")->required();
    render->add_option("--stream", config.stream_path, "stream JSONL for per-cycle frames");
    render->add_option("--out", config.out_dir, "output directory");

    auto* gen = app.add_subcommand("gen", "emit a benchmark circuit document");
    gen->add_option("--family", config.family, "generator family")->required();
    gen->add_option("--param", raw_params, "generator parameter key=value");
    gen->add_option("--out-file", config.circuit_path, "write here instead of stdout");
    gen->add_option("--seed", config.seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        parse_params(raw_params, config.params);
        config.sweep = parse_sweep(raw_sweep);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return lsc::cli::kExitParse;
    }
    config.optimize = !no_optimize;
    if (policy == "heuristic")
        config.policy = lsc::router::Policy::HeuristicLocked;
    else if (policy == "fifo")
        config.policy = lsc::router::Policy::FifoPerType;
    else if (policy == "shared")
        config.policy = lsc::router::Policy::SharedPool;
    else {
        std::cerr << "unknown policy '" << policy << "'\n";
        return lsc::cli::kExitParse;
    }

    if (compile->parsed()) return lsc::cli::cmd_compile(config);
    if (bench->parsed()) return lsc::cli::cmd_bench(config);
    if (validate->parsed()) return lsc::cli::cmd_validate(config);
    if (render->parsed()) return lsc::cli::cmd_render(config);
    if (gen->parsed()) return lsc::cli::cmd_gen(config);
    return lsc::cli::kExitParse;
}
