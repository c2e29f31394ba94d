#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lsc/ir.hpp"
#include "lsc/qcb.hpp"

namespace lsc::sched {

// Abstract resource view of a board: an integer routing-channel semaphore and
// per-type extern slot footprints (width, height).
struct HeuristicConfig {
    int routing_channels = 1;
    std::map<std::string, std::vector<std::pair<int, int>>> extern_slots;

    static HeuristicConfig from_board(const qcb::Qcb& board);
};

struct SlotOccupancy {
    int slot = -1;  // global slot index (types sorted by name, then placement order)
    std::string type;
    int instance = -1;
    long long start = 0;
    long long end = 0;  // exclusive; LLONG_MAX-ish sentinel for never-released
};

struct ScheduleTrace {
    std::vector<long long> start;
    std::vector<long long> end;
    std::vector<SlotOccupancy> occupancy;
    std::map<int, int> instance_slot;  // instance -> global slot index
    long long makespan = 0;
};

// Global slot table derived from a config: types in sorted order, slots in
// declaration order. The router uses the same indexing when replaying the
// heuristic's slot assignment.
struct SlotInfo {
    std::string type;
    int width = 1;
    int height = 1;
};
std::vector<SlotInfo> slot_table(const HeuristicConfig& config);

// List schedule: ready operations are attempted in ascending slack order,
// ties broken by DAG position; non-local operations hold one routing channel
// for their duration; extern instances occupy a covering slot from allocation
// until release. Expects slack to be computed already. The reported schedule
// is the best attempt over the downward-closed capacity box (barriers are
// re-derived per capacity level), which makes the makespan non-increasing in
// the channel count and in every slot count.
ScheduleTrace estimate_cycles(const ir::CircuitDag& dag, const HeuristicConfig& config);

// Convenience: computes slack, then runs estimate_cycles.
ScheduleTrace estimate(const ir::CircuitDag& dag, const HeuristicConfig& config);

// Single scheduling pass at exactly this capacity (no box search); the cheap
// speculative scorer behind make_estimator.
ScheduleTrace estimate_once(const ir::CircuitDag& dag, const HeuristicConfig& config);

struct CandidateDelta {
    bool add_channel = false;
    std::string extern_type;            // set when adding a slot
    std::pair<int, int> footprint = {1, 1};
};

// estimate(base) - estimate(base + delta): positive when the addition helps.
long long score_candidate(const ir::CircuitDag& dag, const HeuristicConfig& base,
                          const CandidateDelta& delta);

// Estimator closure for qcb::optimize_placement.
qcb::CycleEstimator make_estimator(const ir::CircuitDag& dag);

}  // namespace lsc::sched
