#include <doctest.h>

#include "lsc/errors.hpp"
#include "lsc/json_io.hpp"
#include "lsc/mapper.hpp"
#include "lsc/router.hpp"
#include "lsc/stdlib.hpp"
#include "test_util.hpp"

using namespace lsc;
using qcb::Coord;
using qcb::PatchType;
using qcb::Qcb;
using test::call;

namespace {

struct Fixture {
    ir::CircuitDag dag;
    Qcb board{2, 2};
    mapper::QubitMap map;
    DeviceSpec device;
};

// Hand-mapped fixture: callers place symbols explicitly.
Fixture fixture(const io::CircuitDoc& doc, const std::vector<std::string>& rows,
                const std::map<std::string, Coord>& where) {
    Fixture f;
    f.dag = test::parse_expanded(doc);
    f.board = Qcb::from_ascii(rows);
    for (const auto& [name, at] : where) {
        f.map.where[ir::parse_symbol(name)] = at;
        f.map.pref[ir::parse_symbol(name)] = mapper::OrientPref::Rotate;
    }
    return f;
}

router::CompilationResult run(Fixture& f, router::RouterOptions opts = {}) {
    return router::compile(f.dag, f.board, f.map, f.device, opts);
}

long long node_end(const router::CompilationResult& r, int node) {
    long long end = 0;
    for (const auto& i : r.instructions)
        if (i.node == node) end = std::max(end, i.cycle + i.duration);
    return end;
}

long long node_start(const router::CompilationResult& r, int node) {
    long long start = -1;
    for (const auto& i : r.instructions)
        if (i.node == node && (start < 0 || i.cycle < start)) start = i.cycle;
    return start;
}

}  // namespace

TEST_CASE("operands sharing an adjacent route patch produce a length one path") {
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    auto f = fixture(doc, {
        "R.",
        "B.",
        "R.",
        "BB",
    }, {{"a", {0, 0}}, {"b", {2, 0}}});
    router::BoardState state(f.board);
    auto path = router::route_operation(state, f.dag.nodes[0], f.map, 0);
    REQUIRE(path.has_value());
    CHECK(path->cells.size() == 1);
    CHECK(path->cells[0] == Coord{1, 0});
}

TEST_CASE("a straight corridor routes along its five patches") {
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    auto f = fixture(doc, {
        "R...R",
        "BBBBB",
    }, {{"a", {0, 0}}, {"b", {0, 4}}});
    router::BoardState state(f.board);
    auto path = router::route_operation(state, f.dag.nodes[0], f.map, 0);
    REQUIRE(path.has_value());
    CHECK(path->cells.size() == 5);
}

TEST_CASE("a locked corridor delays the second operation") {
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.registers.push_back({"c", 1});
    doc.registers.push_back({"d", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    doc.gates.push_back(call("cz", {"c", "d"}));
    // All four registers hang off one corridor; the two merges contend.
    auto f = fixture(doc, {
        "RR..",
        "BBBB",
        "RR..",
        "BBBB",
    }, {{"a", {0, 0}}, {"b", {0, 1}}, {"c", {2, 0}}, {"d", {2, 1}}});
    // Both merges want the same two route patches above their operands.
    auto result = run(f);
    CHECK(result.total_cycles >= 2);
    auto violations = router::validate_stream(result.instructions, f.board, f.dag);
    CHECK(violations.empty());
}

TEST_CASE("edge tracking: exposed boundary routes without injection") {
    auto doc = test::doc_with_register("a", 1);
    doc.gates.push_back(call("s", {"a"}));
    auto f = fixture(doc, {
        "R.",
        "BB",
    }, {{"a", {0, 0}}});
    auto result = run(f);
    for (const auto& i : result.instructions) CHECK(i.kind != router::InstrKind::Rotate);
    CHECK(result.total_cycles == 2);
}

TEST_CASE("edge tracking: a buried boundary on a rotate preferred patch injects a rotation") {
    // cnot target needs an X boundary; the target's only bus contact is
    // vertical (a Z side), so a three toc rotation goes in first.
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.gates.push_back(call("cnot", {"a", "b"}));
    auto f = fixture(doc, {
        "R.R",
        "BBB",
    }, {{"a", {0, 0}}, {"b", {0, 2}}});
    auto result = run(f);
    bool rotated = false;
    for (const auto& i : result.instructions)
        if (i.kind == router::InstrKind::Rotate) {
            rotated = true;
            CHECK(i.duration == 3);
        }
    CHECK(rotated);
    CHECK(result.total_cycles >= 5);  // rotation then the merge
}

TEST_CASE("edge tracking: route preferred patches wait for the busy side") {
    // Two merges need b's only exposed side; the second waits for the first
    // to release the ancilla instead of injecting a rotation.
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.registers.push_back({"c", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    doc.gates.push_back(call("cz", {"c", "b"}));
    auto f = fixture(doc, {
        "R.R.R",
        "BBBBB",
    }, {{"a", {0, 0}}, {"b", {0, 2}}, {"c", {0, 4}}});
    f.map.pref[ir::parse_symbol("b")] = mapper::OrientPref::Route;
    auto result = run(f);
    for (const auto& i : result.instructions) CHECK(i.kind != router::InstrKind::Rotate);
    CHECK(node_start(result, 1) >= node_end(result, 0));
    auto violations = router::validate_stream(result.instructions, f.board, f.dag);
    CHECK(violations.empty());
}

namespace {

Fixture t_fixture(int t_count, int slots) {
    io::CircuitDoc doc;
    doc.registers.push_back({"q", static_cast<std::uint32_t>(t_count)});
    for (int i = 0; i < t_count; ++i)
        doc.gates.push_back(call("t", {"q[" + std::to_string(i) + "]"}));
    Fixture f;
    f.dag = test::parse_expanded(doc);
    // Board with `slots` 2x2 extern segments across the top.
    int width = std::max(2 * slots, t_count + 1);
    std::vector<std::string> rows;
    std::string extern_row(width, '.');
    for (int s = 0; s < slots * 2; ++s) extern_row[s] = 'E';
    rows.push_back(extern_row);
    rows.push_back(extern_row);
    rows.push_back(std::string(width, 'B'));
    std::string reg_row(width, '.');
    for (int i = 0; i < t_count; ++i) reg_row[i] = 'R';
    rows.push_back(reg_row);
    rows.push_back(std::string(width, 'B'));
    f.board = Qcb::from_ascii(rows);
    for (int s = 0; s < slots; ++s)
        f.board.add_segment({-1, 0, 2 * s, 2, 2, PatchType::Extern, "T"});
    for (int i = 0; i < t_count; ++i) {
        f.map.where[{"q", static_cast<std::uint32_t>(i)}] = {3, i};
        f.map.pref[{"q", static_cast<std::uint32_t>(i)}] = mapper::OrientPref::Rotate;
    }
    return f;
}

}  // namespace

TEST_CASE("a single consumption binds under every policy") {
    for (auto policy : {router::Policy::HeuristicLocked, router::Policy::FifoPerType,
                        router::Policy::SharedPool}) {
        auto f = t_fixture(1, 1);
        router::RouterOptions opts;
        opts.policy = policy;
        auto result = run(f, opts);
        int invokes = 0;
        for (const auto& i : result.instructions)
            if (i.kind == router::InstrKind::ExternInvoke) ++invokes;
        CHECK(invokes == 1);
        CHECK(result.total_cycles >= 8 + 2);  // production then the merge
    }
}

TEST_CASE("fifo: the third request waits for the first release") {
    auto f = t_fixture(3, 2);
    router::RouterOptions opts;
    opts.policy = router::Policy::FifoPerType;
    auto result = run(f, opts);
    std::vector<long long> invoke_cycles;
    for (const auto& i : result.instructions)
        if (i.kind == router::InstrKind::ExternInvoke) invoke_cycles.push_back(i.cycle);
    REQUIRE(invoke_cycles.size() == 3);
    std::sort(invoke_cycles.begin(), invoke_cycles.end());
    CHECK(invoke_cycles[0] == 0);
    CHECK(invoke_cycles[1] == 0);
    CHECK(invoke_cycles[2] >= 8);  // after one production plus consumption
    auto violations = router::validate_stream(result.instructions, f.board, f.dag);
    CHECK(violations.empty());
}

TEST_CASE("shared pool equals fifo when all slots share one type") {
    auto fa = t_fixture(4, 2);
    auto fb = t_fixture(4, 2);
    router::RouterOptions fifo{router::Policy::FifoPerType, false};
    router::RouterOptions shared{router::Policy::SharedPool, false};
    auto a = run(fa, fifo);
    auto b = run(fb, shared);
    CHECK(io::stream_to_jsonl(a.instructions) == io::stream_to_jsonl(b.instructions));
}

TEST_CASE("disjoint conversion needs at least three idle adjacent ancillae") {
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    auto f = fixture(doc, {
        "R...R",
        "BBBBB",
    }, {{"a", {0, 0}}, {"b", {0, 4}}});
    router::BoardState state(f.board);
    auto path = router::route_operation(state, f.dag.nodes[0], f.map, 4);
    REQUIRE(path.has_value());

    // Fresh board, interior idle since the start: three of five convert.
    auto converted = router::apply_disjoint_paths(state, *path, 4);
    CHECK(converted.disjoint);
    CHECK(converted.converted.size() == 3);
    CHECK(converted.establish_cycles == 2);

    // Freshly used interior: no conversion.
    router::BoardState busy(f.board);
    for (int c = 1; c <= 3; ++c) busy.lock({1, c}, 3, 4);
    auto direct = router::apply_disjoint_paths(busy, *path, 4);
    CHECK_FALSE(direct.disjoint);
    CHECK(direct.converted.empty());
    CHECK(direct.establish_cycles == 1);
}

TEST_CASE("two adjacent candidates stay direct") {
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    auto f = fixture(doc, {
        "R..R",
        "BBBB",
    }, {{"a", {0, 0}}, {"b", {0, 3}}});
    router::BoardState state(f.board);
    auto path = router::route_operation(state, f.dag.nodes[0], f.map, 4);
    REQUIRE(path.has_value());
    CHECK(path->cells.size() == 4);  // interior of two
    auto converted = router::apply_disjoint_paths(state, *path, 4);
    CHECK_FALSE(converted.disjoint);
}

TEST_CASE("an empty dag compiles to an empty stream") {
    auto doc = test::doc_with_register("q", 1);
    auto f = fixture(doc, {
        "R.",
        "BB",
    }, {{"q", {0, 0}}});
    auto result = run(f);
    CHECK(result.instructions.empty());
    CHECK(result.total_cycles == 0);
}

TEST_CASE("a single merge costs its declared cycles and accounts its volume") {
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    auto f = fixture(doc, {
        "R.",
        "B.",
        "R.",
        "BB",
    }, {{"a", {0, 0}}, {"b", {2, 0}}});
    auto result = run(f);
    CHECK(result.total_cycles == 2);
    // Two mapped registers for two cycles, one route patch locked for two.
    CHECK(result.spacetime_volume == 2 * 2 + 2);
    CHECK(result.breakdown.routing == 2);
    CHECK(result.breakdown.register_busy == 4);
    CHECK(result.breakdown.register_idle == 0);
}

TEST_CASE("dependency order and lock exclusivity hold on compiled streams") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto doc = test::random_circuit(4, 25, seed, 0.25);
        auto dag = test::parse_expanded(doc);
        auto board = qcb::initial_placement(dag, 10, 10);
        board = qcb::optimize_placement(board, dag, sched::make_estimator(dag));
        auto map = mapper::map_circuit(board, dag);
        auto result = router::compile(dag, board, map, DeviceSpec(10, 10));
        auto violations = router::validate_stream(result.instructions, board, dag);
        CHECK(violations.empty());
        CHECK(result.spacetime_volume >=
              result.total_cycles * static_cast<long long>(result.mapped_registers));
    }
}

TEST_CASE("lower slack wins a contended resource") {
    // Two merges share one corridor; the second in source order lies on the
    // critical path (longer downstream chain) and must start first.
    io::CircuitDoc doc;
    doc.registers.push_back({"a", 1});
    doc.registers.push_back({"b", 1});
    doc.registers.push_back({"c", 1});
    doc.registers.push_back({"d", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    doc.gates.push_back(call("cz", {"c", "d"}));
    doc.gates.push_back(call("h", {"c"}));
    doc.gates.push_back(call("h", {"c"}));
    doc.gates.push_back(call("h", {"c"}));
    // Both merges contend for the single corridor row.
    auto f = fixture(doc, {
        "R.R.",
        "BBBB",
        "R.R.",
    }, {{"a", {0, 0}}, {"b", {0, 2}}, {"c", {2, 0}}, {"d", {2, 2}}});
    auto result = run(f);
    CHECK(node_start(result, 1) == 0);
    CHECK(node_start(result, 0) >= node_end(result, 1));
}

TEST_CASE("packaging requires io") {
    auto doc = test::doc_with_register("a", 1);
    doc.gates.push_back(call("h", {"a"}));
    auto f = fixture(doc, {
        "R.",
        "BB",
    }, {{"a", {0, 0}}});
    auto result = run(f);
    CHECK_THROWS_AS(router::package_as_extern(result, "x"), RoutingError);
}

TEST_CASE("a packaged result carries footprint, io signature and cycles") {
    auto doc = gen::gen_t_factory(1, gen::FactoryStyle::Parallel15);
    auto dag = test::parse_expanded(doc);
    auto board = qcb::initial_placement(dag, 12, 12);
    board = qcb::optimize_placement(board, dag, sched::make_estimator(dag));
    auto map = mapper::map_circuit(board, dag);
    auto result = router::compile(dag, board, map, DeviceSpec(12, 12));
    auto tmpl = router::package_as_extern(result, "T_L1");
    CHECK(tmpl.width == 12);
    CHECK(tmpl.height == 12);
    REQUIRE(tmpl.ops.size() == 1);
    CHECK(tmpl.ops[0].outputs == 1);
    CHECK(tmpl.ops[0].inputs == 0);
    CHECK(tmpl.ops[0].cycles == result.total_cycles);
}

TEST_CASE("cost report scales physical estimates by the code distance") {
    auto doc = test::doc_with_register("a", 1);
    doc.registers.push_back({"b", 1});
    doc.gates.push_back(call("cz", {"a", "b"}));
    auto f = fixture(doc, {
        "R.",
        "B.",
        "R.",
        "BB",
    }, {{"a", {0, 0}}, {"b", {2, 0}}});
    f.device = DeviceSpec(2, 4, 11);
    auto result = run(f);
    auto report = router::cost_report(result, f.device);
    CHECK(report.total_cycles == result.total_cycles);
    CHECK(report.physical_patch_area == 2LL * 4 * 11 * 11);
    CHECK(report.physical_cycles == result.total_cycles * 11);
    CHECK(report.breakdown.register_idle >= 0);
}

TEST_CASE("empty result reports zeros") {
    router::CompilationResult empty;
    auto report = router::cost_report(empty, DeviceSpec(4, 4, 3));
    CHECK(report.total_cycles == 0);
    CHECK(report.spacetime_volume == 0);
    CHECK(report.instruction_count == 0);
}

TEST_CASE("validator catches constructed violations") {
    auto f = t_fixture(2, 1);
    auto result = run(f);
    auto clean = router::validate_stream(result.instructions, f.board, f.dag);
    CHECK(clean.empty());

    // Overlapping locks.
    auto overlapped = result.instructions;
    bool shifted = false;
    for (size_t i = 0; i < overlapped.size() && !shifted; ++i) {
        if (overlapped[i].duration == 0) continue;
        for (size_t j = i + 1; j < overlapped.size() && !shifted; ++j) {
            if (overlapped[j].duration == 0 || overlapped[j].patches.empty()) continue;
            if (overlapped[j].cycle >= overlapped[i].cycle + overlapped[i].duration &&
                overlapped[j].patches == overlapped[i].patches) {
                overlapped[j].cycle = overlapped[i].cycle;
                shifted = true;
            }
        }
    }
    if (shifted) {
        auto violations = router::validate_stream(overlapped, f.board, f.dag);
        CHECK(!violations.empty());
    }

    // Off-route merge.
    auto off = result.instructions;
    for (auto& i : off)
        if (i.kind == router::InstrKind::Merge) {
            for (auto& p : i.patches)
                if (f.board.at(p.row, p.col) == PatchType::Route) {
                    // Point the merge at an unallocated patch.
                    for (int r = 0; r < f.board.height(); ++r)
                        for (int c = 0; c < f.board.width(); ++c)
                            if (f.board.at(r, c) == PatchType::Unallocated) p = {r, c};
                }
            break;
        }
    auto off_violations = router::validate_stream(off, f.board, f.dag);
    CHECK(!off_violations.empty());
}

TEST_CASE("track_edges distinguishes ready, rotate and delay") {
    auto board = Qcb::from_ascii({
        "R.R",
        "BBB",
    });
    router::BoardState state(board);
    mapper::QubitMap map;
    map.where[{"a", 0}] = {0, 0};
    map.where[{"b", 0}] = {0, 2};
    map.pref[{"a", 0}] = mapper::OrientPref::Rotate;
    map.pref[{"b", 0}] = mapper::OrientPref::Rotate;

    // Z boundaries face the bus below: nothing to do.
    ir::GateNode cz;
    cz.opcode = "cz";
    cz.operands = {{"a", 0}, {"b", 0}};
    cz.boundary = {Boundary::Z, Boundary::Z};
    auto ready = router::track_edges(state, cz, map);
    CHECK(ready.ready);
    CHECK_FALSE(ready.rotation.has_value());

    // The target's X boundary is buried; a rotation gets injected.
    ir::GateNode cx;
    cx.opcode = "cnot";
    cx.operands = {{"a", 0}, {"b", 0}};
    cx.boundary = {Boundary::Z, Boundary::X};
    auto rotate = router::track_edges(state, cx, map);
    CHECK_FALSE(rotate.ready);
    REQUIRE(rotate.rotation.has_value());
    CHECK(rotate.rotation->opcode == "rotate");
    CHECK(rotate.rotation->cycles == 3);
    CHECK(rotate.rotation->operands[0] == ir::RegisterSymbol{"b", 0});

    // A route-preferred patch waits instead.
    map.pref[{"b", 0}] = mapper::OrientPref::Route;
    auto delayed = router::track_edges(state, cx, map);
    CHECK_FALSE(delayed.ready);
    CHECK_FALSE(delayed.rotation.has_value());
}

TEST_CASE("explicit reset releases the slot for the next instance") {
    io::CircuitDoc doc;
    doc.registers.push_back({"q", 2});
    ir::ExternTemplate acc;
    acc.name = "Acc";
    acc.width = 2;
    acc.height = 2;
    acc.ops.push_back({"bump", 1, 0, 4});
    doc.externs.push_back(acc);
    io::GateCall bump1{"Acc.bump", {"q[0]"}, {}, "first"};
    io::GateCall reset1{"reset", {}, {}, "first"};
    io::GateCall bump2{"Acc.bump", {"q[1]"}, {}, "second"};
    doc.gates.push_back(bump1);
    doc.gates.push_back(reset1);
    doc.gates.push_back(bump2);

    Fixture f;
    f.dag = test::parse_expanded(doc);
    f.board = Qcb::from_ascii({
        "EE.",
        "EE.",
        "BBB",
        "RR.",
        "BBB",
    });
    f.board.add_segment({-1, 0, 0, 2, 2, PatchType::Extern, "Acc"});
    f.map.where[{"q", 0}] = {3, 0};
    f.map.where[{"q", 1}] = {3, 1};
    auto result = run(f);
    int invokes = 0, resets = 0;
    for (const auto& i : result.instructions) {
        if (i.kind == router::InstrKind::ExternInvoke) ++invokes;
        if (i.kind == router::InstrKind::ExternReset) ++resets;
    }
    CHECK(invokes == 2);
    CHECK(resets == 2);  // the explicit release plus the implicit final one
    CHECK(router::validate_stream(result.instructions, f.board, f.dag).empty());
}

TEST_CASE("flipping the boundary convention swaps the exposed sides") {
    auto board = Qcb::from_ascii({
        "R.R",
        "BBB",
    });
    router::BoardState flipped(board, /*x_boundaries_vertical=*/true);
    mapper::QubitMap map;
    map.where[{"a", 0}] = {0, 0};
    map.where[{"b", 0}] = {0, 2};
    map.pref[{"a", 0}] = mapper::OrientPref::Rotate;
    map.pref[{"b", 0}] = mapper::OrientPref::Rotate;

    // Under x-top-bottom the target's X edge faces the bus below, while the
    // control's Z edge is now the buried one.
    ir::GateNode cx;
    cx.opcode = "cnot";
    cx.operands = {{"a", 0}, {"b", 0}};
    cx.boundary = {Boundary::Z, Boundary::X};
    auto check = router::track_edges(flipped, cx, map);
    CHECK_FALSE(check.ready);
    REQUIRE(check.rotation.has_value());
    CHECK(check.rotation->operands[0] == ir::RegisterSymbol{"a", 0});
}
