#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lsc/ir.hpp"

namespace lsc::qcb {

enum class PatchType : std::uint8_t { Unallocated, Register, Route, LocalRoute, Extern, IO };

char glyph(PatchType t);

struct Coord {
    int row = 0;
    int col = 0;
    auto operator<=>(const Coord&) const = default;
};

struct Segment {
    int id = -1;
    int row = 0;
    int col = 0;
    int width = 1;
    int height = 1;
    PatchType kind = PatchType::Unallocated;
    std::string extern_type;  // bound template name for Extern segments

    int area() const { return width * height; }
    bool contains(int r, int c) const {
        return r >= row && r < row + height && c >= col && c < col + width;
    }
};

struct PlacementResult {
    Segment segment;  // the register/extern/io segment that was placed
    int rule = 0;     // 1-based index of the rule that fired
};

// A width x height grid of surface code patches partitioned into typed
// segments. Placement follows the rule tables: each request tries the rules
// in order and commits the first legal claim, which keeps the board
// invariants (connected bus, registers routed from above or below, extern
// bottom edges fully covered) after every step.
class Qcb {
public:
    Qcb(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(int r, int c) const {
        return r >= 0 && r < height_ && c >= 0 && c < width_;
    }
    PatchType at(int r, int c) const { return grid_[r * width_ + c]; }
    void set(int r, int c, PatchType t) { grid_[r * width_ + c] = t; }

    // Confirmed bus membership (Route patches minus IO routes pending join).
    bool is_bus(int r, int c) const;
    bool bus_empty() const;
    int count(PatchType t) const;
    int bus_components() const;

    const std::vector<Segment>& segments() const { return segments_; }
    std::vector<Segment> segments_of(PatchType kind) const;
    Segment& add_segment(Segment s);  // manual registration (tests, hand boards)
    void retype_segment(int id, PatchType kind);
    void remove_segment(int id);

    int io_count() const { return io_count_; }
    bool io_joined() const { return pending_io_.empty(); }

    PlacementResult place_register(int length);
    PlacementResult place_extern(const ir::ExternTemplate& tmpl);
    std::optional<Segment> place_io(int count);
    void join_io();

    // Route lanes: maximal horizontal runs of bus patches of length >= 2.
    // Used as the routing-channel proxy for the evaluation heuristic.
    int route_lane_count() const;
    std::map<std::string, std::vector<std::pair<int, int>>> extern_slot_footprints() const;

    std::string ascii() const;
    static Qcb from_ascii(const std::vector<std::string>& rows, int io_count = 0);

private:
    friend struct Placer;
    int width_;
    int height_;
    std::vector<PatchType> grid_;
    std::vector<Segment> segments_;
    std::set<Coord> pending_io_;  // IO routes not yet joined to the bus
    int io_count_ = 0;
    int next_segment_id_ = 0;

    bool free_cell(int r, int c) const {
        return in_bounds(r, c) && at(r, c) == PatchType::Unallocated;
    }
    bool adjacent_to_bus(int r, int c) const;
    void confirm_pending_if_touched();
};

// Estimator injected by the caller: cycles for the DAG under a routing
// channel count and per-type extern slot footprints.
using CycleEstimator = std::function<long long(
    int routing_channels,
    const std::map<std::string, std::vector<std::pair<int, int>>>& extern_slots)>;

// Minimal working allocation: externs (sorted by width then height, largest
// first), IO, registers, IO join. Throws AllocationError naming the first
// element that cannot be placed.
Qcb initial_placement(const ir::CircuitDag& dag, int width, int height);

// Greedy speculative additions: scores an extra extern of each used type and
// an extra bus lane (splitting the largest register segment), commits the
// best improving placement until none helps, then fills residual space with
// registers and converts leftovers to local routes.
Qcb optimize_placement(const Qcb& board, const ir::CircuitDag& dag, const CycleEstimator& estimate);

// Empty when the board satisfies every placement constraint for the circuit.
std::vector<std::string> validate_qcb(const Qcb& board, const ir::CircuitDag& dag);

}  // namespace lsc::qcb
