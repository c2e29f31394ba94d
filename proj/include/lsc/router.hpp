#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lsc/device.hpp"
#include "lsc/ir.hpp"
#include "lsc/mapper.hpp"
#include "lsc/qcb.hpp"
#include "lsc/sched.hpp"

namespace lsc::router {

enum class Policy { HeuristicLocked, FifoPerType, SharedPool };

struct RouterOptions {
    Policy policy = Policy::HeuristicLocked;
    bool disjoint = false;
};

enum class InstrKind {
    Prep,
    Measure,
    Merge,
    Split,
    Rotate,
    Pauli,
    IdleLock,
    ExternInvoke,
    ExternReset,
};

std::string kind_name(InstrKind k);
std::optional<InstrKind> kind_from_name(const std::string& name);

struct Instruction {
    long long cycle = 0;
    InstrKind kind = InstrKind::Merge;
    std::vector<qcb::Coord> patches;
    int node = -1;       // source DAG node; -1 for extern lifecycle records
    int duration = 1;    // tocs
};

// Per-patch lock timelines plus boundary orientations during routing.
class BoardState {
public:
    explicit BoardState(const qcb::Qcb& board, bool x_boundaries_vertical = false);

    const qcb::Qcb& board() const { return *board_; }
    bool x_boundaries_vertical() const { return x_vertical_; }
    bool is_free(const qcb::Coord& p, long long start, long long end) const;
    void lock(const qcb::Coord& p, long long start, long long end);
    // End (exclusive) of the last lock interval at or before `t`; -1 if none.
    long long last_used_before(const qcb::Coord& p, long long t) const;

    bool rotated(const qcb::Coord& p) const;
    void toggle_rotation(const qcb::Coord& p);

private:
    const qcb::Qcb* board_;
    bool x_vertical_ = false;
    std::map<qcb::Coord, std::vector<std::pair<long long, long long>>> locks_;
    std::set<qcb::Coord> rotated_;
};

struct RoutePath {
    std::vector<qcb::Coord> cells;       // route patches, source adjacent first
    long long start = 0;
    int duration = 0;
    bool disjoint = false;
    std::vector<qcb::Coord> converted;   // Bell-pair pre-established segment
    int establish_cycles = 1;            // 2x on converted segments
};

// Shortest available connection over unlocked route patches between the
// operand boundaries of `node` at the given cycle (A*, Manhattan heuristic,
// lower row then lower column tie-break). Terminals beyond the second are
// attached incrementally. Does not lock; returns nullopt when no path exists
// this cycle.
std::optional<RoutePath> route_operation(const BoardState& state, const ir::GateNode& node,
                                         const mapper::QubitMap& map, long long cycle,
                                         const std::vector<qcb::Coord>& extra_terminals = {});

// Boundary check ahead of routing. When every required boundary already
// faces a route ancilla nothing changes; a buried boundary on a
// rotate-preferred patch yields the rotation to inject first; otherwise the
// gate waits for the edge.
struct EdgeCheck {
    bool ready = true;
    std::optional<ir::GateNode> rotation;
};
EdgeCheck track_edges(const BoardState& state, const ir::GateNode& node,
                      const mapper::QubitMap& map);

// Converts idle sub-paths into Bell-pair pre-established segments: interior
// ancillae unused for more than two cycles are candidates; runs of at least
// three adjacent candidates are back-propagated, doubling the establishment
// cycles on the converted segment while freeing it during the operation.
RoutePath apply_disjoint_paths(const BoardState& state, const RoutePath& path, long long cycle);

struct CostBreakdown {
    long long register_idle = 0;
    long long register_busy = 0;
    long long routing = 0;
    long long extern_patches = 0;
};

struct CompilationResult {
    std::vector<Instruction> instructions;
    long long total_cycles = 0;
    long long spacetime_volume = 0;
    CostBreakdown breakdown;
    int board_width = 0;
    int board_height = 0;
    int mapped_registers = 0;
    int disjoint_segments = 0;
    // IO signature carried through from the circuit for extern packaging.
    std::vector<ir::IoDir> io_dirs;
    std::string circuit_name;
};

// Event-driven routing loop: ready operations are attempted in ascending
// slack order; blocked operations retry as locks release. Extern instances
// bind to board slots under the configured policy.
CompilationResult compile(const ir::CircuitDag& dag, const qcb::Qcb& board,
                          const mapper::QubitMap& map, const DeviceSpec& device,
                          const RouterOptions& options = {});

// Re-packages a compiled board as a single-operation extern template.
ir::ExternTemplate package_as_extern(const CompilationResult& result, const std::string& name);

struct CostReport {
    long long total_cycles = 0;
    long long spacetime_volume = 0;
    long long instruction_count = 0;
    int board_width = 0;
    int board_height = 0;
    int code_distance = 1;
    CostBreakdown breakdown;
    long long physical_patch_area = 0;   // patches * d^2
    long long physical_cycles = 0;       // cycles * d
    int disjoint_segments = 0;
    std::string note;
};

CostReport cost_report(const CompilationResult& result, const DeviceSpec& device);

// Stream validation scans used by `lsc validate` and the test suites:
// lock-disjointness, dependency order and route legality.
std::vector<std::string> validate_stream(const std::vector<Instruction>& stream,
                                         const qcb::Qcb& board, const ir::CircuitDag& dag);

}  // namespace lsc::router
