#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsc/cli.hpp"
#include "lsc/errors.hpp"
#include "lsc/json_io.hpp"
#include "lsc/render.hpp"
#include "lsc/stdlib.hpp"
#include "test_util.hpp"

using namespace lsc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string device_json(int w, int h) {
    return "{\"width\": " + std::to_string(w) + ", \"height\": " + std::to_string(h) +
           ", \"code_distance\": 3}";
}

}  // namespace

TEST_CASE("compile writes the full artifact set and round trips") {
    TempDir dir("lsc_cli_compile");
    write(dir.file("device.json"), device_json(12, 12));
    write(dir.file("circuit.json"), io::doc_to_json(gen::gen_adder(2)));

    cli::RunConfig config;
    config.device_path = dir.file("device.json");
    config.circuit_path = dir.file("circuit.json");
    config.out_dir = dir.file("out");
    CHECK(cli::cmd_compile(config) == cli::kExitOk);

    for (const auto& name : {"stream.jsonl", "report.json", "layout.json", "layout.txt",
                             "layout.svg", "map.json"})
        CHECK(fs::exists(fs::path(config.out_dir) / name));

    // Emitted documents re-parse to equal values.
    auto stream_text = slurp((fs::path(config.out_dir) / "stream.jsonl").string());
    auto stream = io::stream_from_jsonl(stream_text);
    CHECK(io::stream_to_jsonl(stream) == stream_text);
    auto layout_text = slurp((fs::path(config.out_dir) / "layout.json").string());
    auto board = io::layout_from_json(layout_text);
    CHECK(io::layout_to_json(board) == layout_text);
}

TEST_CASE("compilation is byte deterministic") {
    TempDir dir("lsc_cli_determinism");
    write(dir.file("device.json"), device_json(12, 12));
    write(dir.file("circuit.json"),
          io::doc_to_json(gen::gen_cnot_network(4, 6, 9)));

    cli::RunConfig config;
    config.device_path = dir.file("device.json");
    config.circuit_path = dir.file("circuit.json");
    config.out_dir = dir.file("a");
    REQUIRE(cli::cmd_compile(config) == cli::kExitOk);
    config.out_dir = dir.file("b");
    REQUIRE(cli::cmd_compile(config) == cli::kExitOk);
    CHECK(slurp(dir.file("a/stream.jsonl")) == slurp(dir.file("b/stream.jsonl")));
    CHECK(slurp(dir.file("a/report.json")) == slurp(dir.file("b/report.json")));
}

TEST_CASE("malformed json exits with the parse code") {
    TempDir dir("lsc_cli_badjson");
    write(dir.file("device.json"), device_json(8, 8));
    write(dir.file("circuit.json"), "{not json");
    cli::RunConfig config;
    config.device_path = dir.file("device.json");
    config.circuit_path = dir.file("circuit.json");
    config.out_dir = dir.file("out");
    CHECK(cli::cmd_compile(config) == cli::kExitParse);
}

TEST_CASE("unknown circuit fields are rejected") {
    CHECK_THROWS_AS(io::doc_from_json("{\"gates\": [], \"bogus\": 1}"), ParseError);
    CHECK_THROWS_AS(io::device_from_json("{\"width\": 4, \"height\": 4, \"extra\": 0}"),
                    ParseError);
}

TEST_CASE("insufficient boards exit with the allocation code") {
    TempDir dir("lsc_cli_alloc");
    write(dir.file("device.json"), device_json(10, 10));
    auto doc = gen::gen_adder(14);
    ir::ExternTemplate big;
    big.name = "T";
    big.width = 6;
    big.height = 6;
    big.ops.push_back({"call", 0, 1, 30});
    doc.externs.push_back(big);
    write(dir.file("circuit.json"), io::doc_to_json(doc));
    cli::RunConfig config;
    config.device_path = dir.file("device.json");
    config.circuit_path = dir.file("circuit.json");
    config.out_dir = dir.file("out");
    CHECK(cli::cmd_compile(config) == cli::kExitAllocation);
}

TEST_CASE("validate accepts fresh streams and flags mutated ones") {
    TempDir dir("lsc_cli_validate");
    write(dir.file("device.json"), device_json(12, 12));
    write(dir.file("circuit.json"), io::doc_to_json(gen::gen_adder(2)));
    cli::RunConfig compile_cfg;
    compile_cfg.device_path = dir.file("device.json");
    compile_cfg.circuit_path = dir.file("circuit.json");
    compile_cfg.out_dir = dir.file("out");
    REQUIRE(cli::cmd_compile(compile_cfg) == cli::kExitOk);

    cli::RunConfig vcfg;
    vcfg.stream_path = dir.file("out/stream.jsonl");
    vcfg.layout_path = dir.file("out/layout.json");
    vcfg.circuit_path = dir.file("circuit.json");
    CHECK(cli::cmd_validate(vcfg) == cli::kExitOk);

    // Swap two dependent instructions' cycles.
    auto stream = io::stream_from_jsonl(slurp(vcfg.stream_path));
    REQUIRE(stream.size() > 4);
    auto mutated = stream;
    bool swapped = false;
    for (size_t i = 0; i + 1 < mutated.size() && !swapped; ++i) {
        for (size_t j = i + 1; j < mutated.size() && !swapped; ++j) {
            if (mutated[i].node >= 0 && mutated[j].node >= 0 &&
                mutated[i].node != mutated[j].node &&
                mutated[j].cycle > mutated[i].cycle + mutated[i].duration) {
                std::swap(mutated[i].cycle, mutated[j].cycle);
                swapped = true;
            }
        }
    }
    REQUIRE(swapped);
    write(dir.file("mutated.jsonl"), io::stream_to_jsonl(mutated));
    cli::RunConfig mcfg = vcfg;
    mcfg.stream_path = dir.file("mutated.jsonl");
    CHECK(cli::cmd_validate(mcfg) == cli::kExitValidation);
}

TEST_CASE("render emits glyph grids and per cycle frames") {
    TempDir dir("lsc_cli_render");
    write(dir.file("device.json"), device_json(12, 12));
    write(dir.file("circuit.json"), io::doc_to_json(gen::gen_adder(2)));
    cli::RunConfig compile_cfg;
    compile_cfg.device_path = dir.file("device.json");
    compile_cfg.circuit_path = dir.file("circuit.json");
    compile_cfg.out_dir = dir.file("out");
    REQUIRE(cli::cmd_compile(compile_cfg) == cli::kExitOk);

    cli::RunConfig rcfg;
    rcfg.layout_path = dir.file("out/layout.json");
    rcfg.stream_path = dir.file("out/stream.jsonl");
    rcfg.out_dir = dir.file("render");
    CHECK(cli::cmd_render(rcfg) == cli::kExitOk);
    auto board_txt = slurp(dir.file("render/board.txt"));
    CHECK(board_txt.find('R') != std::string::npos);
    CHECK(board_txt.find('B') != std::string::npos);
    CHECK(board_txt.find('E') != std::string::npos);
    CHECK(fs::exists(dir.file("render/board.svg")));
    CHECK(fs::exists(dir.file("render/frames.txt")));
}

TEST_CASE("three cycle streams render three frames") {
    auto board = qcb::Qcb::from_ascii({
        "RR",
        "BB",
    });
    std::vector<router::Instruction> stream;
    stream.push_back({0, router::InstrKind::Merge, {{1, 0}, {1, 1}}, 0, 1});
    stream.push_back({1, router::InstrKind::Split, {{1, 0}}, 0, 2});
    auto frames = render::ascii_frames(board, stream);
    CHECK(frames.size() == 3);
    CHECK(frames[0].find('#') != std::string::npos);
}

TEST_CASE("an empty board renders a uniform grid") {
    qcb::Qcb board(3, 3);
    auto text = render::ascii_board(board);
    CHECK(text == "...\n...\n...\n");
}

TEST_CASE("bench sweeps record failures without aborting") {
    TempDir dir("lsc_cli_bench");
    cli::RunConfig config;
    config.family = "cnot-network";
    config.params = {{"n", "4"}, {"rounds", "3"}};
    config.sweep = {{8, 8}, {2, 2}};  // the 2x2 row fails
    config.out_dir = dir.file("bench");
    CHECK(cli::cmd_bench(config) == cli::kExitOk);
    auto csv = slurp(dir.file("bench/bench.csv"));
    CHECK(csv.find("8x8") != std::string::npos);
    CHECK(csv.find("error") != std::string::npos);
}

TEST_CASE("gen emits circuits addressable by family and parameters") {
    TempDir dir("lsc_cli_gen");
    cli::RunConfig config;
    config.family = "mcx";
    config.params = {{"n", "3"}};
    config.circuit_path = dir.file("mcx.json");
    CHECK(cli::cmd_gen(config) == cli::kExitOk);
    auto doc = io::doc_from_json(slurp(dir.file("mcx.json")));
    CHECK(doc.name == "mcx_3");
}
