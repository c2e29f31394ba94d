#include "lsc/sched.hpp"

#include <algorithm>
#include <climits>
#include <functional>

#include "lsc/errors.hpp"

namespace lsc::sched {

namespace {
constexpr long long kNever = LLONG_MAX / 4;
}

HeuristicConfig HeuristicConfig::from_board(const qcb::Qcb& board) {
    HeuristicConfig cfg;
    cfg.routing_channels = board.route_lane_count();
    cfg.extern_slots = board.extern_slot_footprints();
    return cfg;
}

std::vector<SlotInfo> slot_table(const HeuristicConfig& config) {
    std::vector<SlotInfo> slots;
    for (const auto& [type, prints] : config.extern_slots)
        for (const auto& [w, h] : prints) slots.push_back({type, w, h});
    return slots;
}

namespace {

// One parallel list-scheduling pass at exactly this capacity level.
ScheduleTrace raw_estimate(const ir::CircuitDag& dag, const HeuristicConfig& config) {
    const int n = static_cast<int>(dag.nodes.size());
    ScheduleTrace trace;
    trace.start.assign(n, 0);
    trace.end.assign(n, 0);
    if (n == 0) return trace;

    auto slots = slot_table(config);
    std::vector<char> slot_busy(slots.size(), 0);
    std::map<std::string, std::vector<int>> slots_of_type;
    for (size_t s = 0; s < slots.size(); ++s)
        slots_of_type[slots[s].type].push_back(static_cast<int>(s));

    const int ni = static_cast<int>(dag.instances.size());
    struct InstState {
        int tmpl_w = 1, tmpl_h = 1;
        int production = 0;
        bool resettable = true;
        bool on_slot = false;
        bool has_explicit_reset = false;
        int slot = -1;
        long long production_end = -1;
        long long slot_busy_until = 0;
        int remaining_consumers = 0;
        int remaining_barriers = 0;
    };
    std::vector<InstState> inst(ni);
    for (int i = 0; i < ni; ++i) {
        auto it = dag.extern_templates.find(dag.instances[i].type);
        if (it == dag.extern_templates.end())
            throw RoutingError("unschedulable: extern type " + dag.instances[i].type +
                               " has no template");
        inst[i].tmpl_w = it->second.width;
        inst[i].tmpl_h = it->second.height;
        inst[i].resettable = it->second.resettable;
        if (const auto* prod = it->second.production_op())
            inst[i].production = prod->cycles;
    }
    for (int v = 0; v < n; ++v) {
        if (!dag.nodes[v].extern_dep) continue;
        int i = dag.nodes[v].extern_dep->instance;
        ++inst[i].remaining_consumers;
        if (!dag.nodes[v].extern_dep->op.empty()) inst[i].on_slot = true;
        if (dag.nodes[v].is_reset) inst[i].has_explicit_reset = true;
    }
    for (const auto& bar : dag.barriers) ++inst[bar.instance].remaining_barriers;

    // Instances allocate strictly in first-use order within each type.
    std::map<std::string, std::vector<int>> insts_of_type;
    for (int i = 0; i < ni; ++i)
        if (inst[i].remaining_consumers > 0)
            insts_of_type[dag.instances[i].type].push_back(i);
    for (auto& [type, list] : insts_of_type) {
        std::sort(list.begin(), list.end(), [&](int a, int b) {
            return dag.instances[a].first_node < dag.instances[b].first_node;
        });
        for (int i : list) {
            bool fits = false;
            for (int s : slots_of_type[type])
                if (slots[s].width >= inst[i].tmpl_w && slots[s].height >= inst[i].tmpl_h)
                    fits = true;
            if (!fits)
                throw RoutingError("unschedulable: no slot fits extern " +
                                   dag.instances[i].type + " (" +
                                   std::to_string(inst[i].tmpl_w) + "x" +
                                   std::to_string(inst[i].tmpl_h) + ")");
        }
    }
    std::map<std::string, size_t> next_inst;  // per-type allocation cursor

    auto succ = dag.successors();
    std::vector<int> pending_preds(n, 0);
    for (auto [a, b] : dag.edges) ++pending_preds[b];
    std::vector<std::vector<int>> barrier_release(n);
    for (const auto& bar : dag.barriers) barrier_release[bar.src].push_back(bar.instance);

    std::vector<char> started(n, 0);
    int channels_in_use = 0;
    int finished = 0;
    long long t = 0;

    std::vector<int> ready;  // pending_preds==0, not yet started
    for (int v = 0; v < n; ++v)
        if (pending_preds[v] == 0) ready.push_back(v);
    std::vector<int> running;

    auto complete = [&](int v) {
        ++finished;
        for (int s : succ[v])
            if (--pending_preds[s] == 0) ready.push_back(s);
        for (int i : barrier_release[v]) --inst[i].remaining_barriers;
        if (dag.nodes[v].extern_dep) {
            int i = dag.nodes[v].extern_dep->instance;
            --inst[i].remaining_consumers;
            bool release = dag.nodes[v].is_reset ||
                           (inst[i].remaining_consumers == 0 && inst[i].resettable &&
                            !inst[i].has_explicit_reset);
            if (release && inst[i].slot >= 0 && slot_busy[inst[i].slot]) {
                slot_busy[inst[i].slot] = 0;
                for (auto& occ : trace.occupancy)
                    if (occ.instance == i && occ.end == kNever) occ.end = trace.end[v];
            }
        }
    };

    auto try_allocate = [&]() {
        for (auto& [type, list] : insts_of_type) {
            auto& cursor = next_inst[type];
            while (cursor < list.size()) {
                int i = list[cursor];
                if (inst[i].remaining_barriers > 0) break;
                int chosen = -1;
                for (int s : slots_of_type[type]) {
                    if (slot_busy[s]) continue;
                    if (slots[s].width < inst[i].tmpl_w || slots[s].height < inst[i].tmpl_h)
                        continue;
                    chosen = s;
                    break;
                }
                if (chosen < 0) break;
                slot_busy[chosen] = 1;
                inst[i].slot = chosen;
                inst[i].production_end = inst[i].on_slot ? t : t + inst[i].production;
                inst[i].slot_busy_until = inst[i].production_end;
                trace.instance_slot[i] = chosen;
                trace.occupancy.push_back({chosen, type, i, t, kNever});
                ++cursor;
            }
        }
    };

    while (finished < n) {
        bool progress = true;
        while (progress) {
            progress = false;
            try_allocate();
            std::vector<int> pool;
            pool.swap(ready);  // complete() appends newly released nodes to `ready`
            std::sort(pool.begin(), pool.end(), [&](int a, int b) {
                return std::tie(dag.nodes[a].slack, a) < std::tie(dag.nodes[b].slack, b);
            });
            std::vector<int> blocked;
            for (int v : pool) {
                const auto& node = dag.nodes[v];
                bool can_start = true;
                if (node.nonlocal && channels_in_use >= config.routing_channels)
                    can_start = false;
                if (can_start && node.extern_dep) {
                    auto& is = inst[node.extern_dep->instance];
                    if (is.production_end < 0 || is.production_end > t) can_start = false;
                    else if (is.on_slot && is.slot_busy_until > t) can_start = false;
                }
                if (!can_start) {
                    blocked.push_back(v);
                    continue;
                }
                if (node.extern_dep && dag.nodes[v].extern_dep->op.size())
                    inst[node.extern_dep->instance].slot_busy_until = t + node.cycles;
                started[v] = 1;
                trace.start[v] = t;
                trace.end[v] = t + node.cycles;
                if (node.cycles == 0) {
                    complete(v);
                    progress = true;
                } else {
                    if (node.nonlocal) ++channels_in_use;
                    running.push_back(v);
                }
            }
            ready.insert(ready.end(), blocked.begin(), blocked.end());
        }
        if (finished == n) break;

        long long next_t = kNever;
        for (int v : running) next_t = std::min(next_t, trace.end[v]);
        for (int i = 0; i < ni; ++i)
            if (inst[i].production_end > t && inst[i].production_end < kNever &&
                inst[i].remaining_consumers > 0)
                next_t = std::min(next_t, inst[i].production_end);
        if (next_t == kNever || next_t <= t)
            throw RoutingError("unschedulable: no progress at cycle " + std::to_string(t));
        t = next_t;

        std::vector<int> still;
        for (int v : running) {
            if (trace.end[v] <= t) {
                if (dag.nodes[v].nonlocal) --channels_in_use;
                complete(v);
            } else {
                still.push_back(v);
            }
        }
        running = std::move(still);
    }

    for (int v = 0; v < n; ++v) trace.makespan = std::max(trace.makespan, trace.end[v]);
    for (auto& occ : trace.occupancy)
        if (occ.end == kNever) occ.end = trace.makespan;
    return trace;
}

}  // namespace

// List scheduling with extra capacity can come out slower (a freshly ready
// high-slack operation may grab a channel that a critical one needed one
// cycle later). A schedule that uses fewer channels or slots stays feasible
// on the bigger board, so the estimate takes the best attempt over the
// downward-closed capacity box. That keeps the makespan non-increasing in
// every resource axis.
ScheduleTrace estimate_cycles(const ir::CircuitDag& dag, const HeuristicConfig& config) {
    if (dag.nodes.empty()) return raw_estimate(dag, config);

    // Clamp each axis at its useful level: more channels than non-local
    // operations or more slots than instances cannot change any schedule.
    int nonlocal = 0;
    for (const auto& node : dag.nodes)
        if (node.nonlocal) ++nonlocal;
    std::map<std::string, int> instances_of_type;
    for (const auto& inst : dag.instances) ++instances_of_type[inst.type];

    int ch_cap = std::max(1, std::min(config.routing_channels, std::max(1, nonlocal)));
    std::vector<std::string> types;
    std::vector<int> slot_cap;
    for (const auto& [type, prints] : config.extern_slots) {
        types.push_back(type);
        int useful = instances_of_type.count(type) ? instances_of_type[type] : 1;
        slot_cap.push_back(
            std::max(1, std::min(static_cast<int>(prints.size()), useful)));
    }

    long long lower_bound = dag.critical_path_length();
    ScheduleTrace best;
    best.makespan = -1;
    std::vector<int> best_levels;

    // Enumerate the box of capacity levels, largest first.
    std::vector<int> levels(1 + types.size());
    auto run_cell = [&](const std::vector<int>& cell) {
        HeuristicConfig sub;
        sub.routing_channels = cell[0];
        std::map<std::string, int> counts;
        for (size_t i = 0; i < types.size(); ++i) {
            auto prints = config.extern_slots.at(types[i]);
            prints.resize(cell[1 + i]);
            sub.extern_slots[types[i]] = prints;
            counts[types[i]] = cell[1 + i];
        }
        ir::CircuitDag prepared = ir::attach_extern_barriers(dag, counts);
        for (size_t v = 0; v < prepared.nodes.size(); ++v)
            prepared.nodes[v].slack = dag.nodes[v].slack;
        ScheduleTrace t = raw_estimate(prepared, sub);
        if (best.makespan < 0 || t.makespan < best.makespan) {
            best = std::move(t);
            best_levels = cell;
        }
    };

    std::function<void(size_t)> walk = [&](size_t axis) {
        if (best.makespan == lower_bound && best.makespan >= 0) return;
        if (axis == levels.size()) {
            run_cell(levels);
            return;
        }
        int cap = axis == 0 ? ch_cap : slot_cap[axis - 1];
        for (int v = cap; v >= 1; --v) {
            levels[axis] = v;
            walk(axis + 1);
            if (best.makespan == lower_bound && best.makespan >= 0) return;
        }
    };
    walk(0);

    // Slot indices in the winning trace refer to the truncated table; remap
    // them onto the requested configuration (per-type order is unchanged).
    if (!best_levels.empty()) {
        HeuristicConfig sub;
        sub.routing_channels = best_levels[0];
        for (size_t i = 0; i < types.size(); ++i) {
            auto prints = config.extern_slots.at(types[i]);
            prints.resize(best_levels[1 + i]);
            sub.extern_slots[types[i]] = prints;
        }
        auto sub_table = slot_table(sub);
        auto full_table = slot_table(config);
        std::vector<int> sub_to_full(sub_table.size(), -1);
        std::map<std::string, int> seen_sub, seen_full;
        std::map<std::pair<std::string, int>, int> full_index;
        {
            std::map<std::string, int> k;
            for (size_t s = 0; s < full_table.size(); ++s)
                full_index[{full_table[s].type, k[full_table[s].type]++}] =
                    static_cast<int>(s);
        }
        {
            std::map<std::string, int> k;
            for (size_t s = 0; s < sub_table.size(); ++s)
                sub_to_full[s] = full_index.at({sub_table[s].type, k[sub_table[s].type]++});
        }
        for (auto& [inst, slot] : best.instance_slot) slot = sub_to_full[slot];
        for (auto& occ : best.occupancy) occ.slot = sub_to_full[occ.slot];
    }
    return best;
}

ScheduleTrace estimate(const ir::CircuitDag& dag, const HeuristicConfig& config) {
    ir::CircuitDag prepared = ir::compute_slack(dag);
    return estimate_cycles(prepared, config);
}

ScheduleTrace estimate_once(const ir::CircuitDag& dag, const HeuristicConfig& config) {
    std::map<std::string, int> counts;
    for (const auto& [type, prints] : config.extern_slots)
        counts[type] = static_cast<int>(prints.size());
    ir::CircuitDag prepared = ir::compute_slack(ir::attach_extern_barriers(dag, counts));
    return raw_estimate(prepared, config);
}

long long score_candidate(const ir::CircuitDag& dag, const HeuristicConfig& base,
                          const CandidateDelta& delta) {
    HeuristicConfig with = base;
    if (delta.add_channel) {
        ++with.routing_channels;
    } else {
        with.extern_slots[delta.extern_type].push_back(delta.footprint);
    }
    return estimate(dag, base).makespan - estimate(dag, with).makespan;
}

qcb::CycleEstimator make_estimator(const ir::CircuitDag& dag) {
    // Placement scoring wants many cheap comparisons: a single scheduling
    // pass per candidate. Harmful additions may score negative here; the
    // optimiser treats anything non-positive as not worth committing.
    return [dag](int channels,
                 const std::map<std::string, std::vector<std::pair<int, int>>>& slots) {
        HeuristicConfig cfg;
        cfg.routing_channels = std::max(1, channels);
        cfg.extern_slots = slots;
        return estimate_once(dag, cfg).makespan;
    };
}

}  // namespace lsc::sched
