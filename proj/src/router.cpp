#include "lsc/router.hpp"

#include <algorithm>
#include <climits>
#include <deque>
#include <queue>

#include "lsc/errors.hpp"

namespace lsc::router {

using qcb::Coord;
using qcb::PatchType;

std::string kind_name(InstrKind k) {
    switch (k) {
        case InstrKind::Prep: return "prep";
        case InstrKind::Measure: return "measure";
        case InstrKind::Merge: return "merge";
        case InstrKind::Split: return "split";
        case InstrKind::Rotate: return "rotate";
        case InstrKind::Pauli: return "pauli";
        case InstrKind::IdleLock: return "idle-lock";
        case InstrKind::ExternInvoke: return "extern-invoke";
        case InstrKind::ExternReset: return "extern-reset";
    }
    return "?";
}

std::optional<InstrKind> kind_from_name(const std::string& name) {
    static const std::map<std::string, InstrKind> table = {
        {"prep", InstrKind::Prep},           {"measure", InstrKind::Measure},
        {"merge", InstrKind::Merge},         {"split", InstrKind::Split},
        {"rotate", InstrKind::Rotate},       {"pauli", InstrKind::Pauli},
        {"idle-lock", InstrKind::IdleLock},  {"extern-invoke", InstrKind::ExternInvoke},
        {"extern-reset", InstrKind::ExternReset},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

// --- BoardState ---------------------------------------------------------------

BoardState::BoardState(const qcb::Qcb& board, bool x_boundaries_vertical)
    : board_(&board), x_vertical_(x_boundaries_vertical) {}

bool BoardState::is_free(const Coord& p, long long start, long long end) const {
    auto it = locks_.find(p);
    if (it == locks_.end()) return true;
    for (const auto& [s, e] : it->second)
        if (s < end && start < e) return false;
    return true;
}

void BoardState::lock(const Coord& p, long long start, long long end) {
    auto& v = locks_[p];
    v.push_back({start, end});
    std::sort(v.begin(), v.end());
}

long long BoardState::last_used_before(const Coord& p, long long t) const {
    auto it = locks_.find(p);
    if (it == locks_.end()) return -1;
    long long last = -1;
    for (const auto& [s, e] : it->second)
        if (s < t) last = std::max(last, std::min(e, t));
    return last;
}

bool BoardState::rotated(const Coord& p) const { return rotated_.count(p) > 0; }

void BoardState::toggle_rotation(const Coord& p) {
    if (!rotated_.insert(p).second) rotated_.erase(p);
}

// --- attach cells and A* -------------------------------------------------------

namespace {

// Route patches adjacent to `p` on the sides exposing the required boundary.
// Default layout: Z faces up/down, X faces left/right; rotation swaps them.
std::vector<Coord> attach_cells(const qcb::Qcb& board, const BoardState& state, Coord p,
                                Boundary b) {
    bool swap = state.rotated(p) != state.x_boundaries_vertical();
    bool use_vertical, use_horizontal;
    if (b == Boundary::Either) {
        use_vertical = use_horizontal = true;
    } else {
        bool z = (b == Boundary::Z);
        use_vertical = swap ? !z : z;
        use_horizontal = !use_vertical;
    }
    std::vector<Coord> out;
    auto add = [&](int r, int c) {
        if (board.in_bounds(r, c) && board.at(r, c) == PatchType::Route) out.push_back({r, c});
    };
    if (use_vertical) {
        add(p.row - 1, p.col);
        add(p.row + 1, p.col);
    }
    if (use_horizontal) {
        add(p.row, p.col - 1);
        add(p.row, p.col + 1);
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct AStar {
    const qcb::Qcb& board;
    const BoardState& state;
    long long t0, t1;
    const std::set<Coord>* claimed;  // cells already claimed by this operation

    bool passable(const Coord& p) const {
        if (!board.in_bounds(p.row, p.col) || board.at(p.row, p.col) != PatchType::Route)
            return false;
        if (claimed && claimed->count(p)) return true;
        return state.is_free(p, t0, t1);
    }

    // Multi-source / multi-target shortest path. Sources enter with cost
    // `source_g` (0 when extending an existing tree, 1 when the source cell
    // itself must be claimed). Returns the new cells, source side first.
    std::optional<std::vector<Coord>> run(const std::vector<Coord>& sources,
                                          const std::vector<Coord>& targets,
                                          int source_g) const {
        if (sources.empty() || targets.empty()) return std::nullopt;
        std::set<Coord> target_set(targets.begin(), targets.end());
        auto h = [&](const Coord& p) {
            int best = INT_MAX;
            for (const auto& q : targets)
                best = std::min(best, std::abs(p.row - q.row) + std::abs(p.col - q.col));
            return best;
        };
        using Entry = std::tuple<int, int, int, int>;  // f, row, col, g
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
        std::map<Coord, int> g_of;
        std::map<Coord, Coord> parent;
        for (const auto& s : sources) {
            if (!passable(s)) continue;
            g_of[s] = source_g;
            open.push({source_g + h(s), s.row, s.col, source_g});
        }
        while (!open.empty()) {
            auto [f, row, col, g] = open.top();
            open.pop();
            Coord p{row, col};
            auto it = g_of.find(p);
            if (it == g_of.end() || it->second != g) continue;
            if (target_set.count(p)) {
                std::vector<Coord> path;
                Coord cur = p;
                while (true) {
                    path.push_back(cur);
                    auto pit = parent.find(cur);
                    if (pit == parent.end()) break;
                    cur = pit->second;
                }
                std::reverse(path.begin(), path.end());
                if (source_g == 0 && !path.empty()) path.erase(path.begin());
                return path;
            }
            const int dr[] = {-1, 0, 0, 1};
            const int dc[] = {0, -1, 1, 0};
            for (int k = 0; k < 4; ++k) {
                Coord n{p.row + dr[k], p.col + dc[k]};
                if (!passable(n)) continue;
                int ng = g + 1;
                auto git = g_of.find(n);
                if (git != g_of.end() && git->second <= ng) continue;
                g_of[n] = ng;
                parent[n] = p;
                open.push({ng + h(n), n.row, n.col, ng});
            }
        }
        return std::nullopt;
    }
};

}  // namespace

std::optional<RoutePath> route_operation(const BoardState& state, const ir::GateNode& node,
                                         const mapper::QubitMap& map, long long cycle,
                                         const std::vector<Coord>& extra_terminals) {
    const qcb::Qcb& board = state.board();
    int duration = std::max(node.cycles, 1);
    long long t0 = cycle, t1 = cycle + duration;

    // Terminal attach sets: one per operand, plus one for the extra cells.
    std::vector<std::vector<Coord>> terminals;
    for (size_t i = 0; i < node.operands.size(); ++i) {
        auto it = map.where.find(node.operands[i]);
        if (it == map.where.end()) return std::nullopt;
        Boundary b = i < node.boundary.size() ? node.boundary[i] : Boundary::Either;
        auto cells = attach_cells(board, state, it->second, b);
        if (cells.empty()) return std::nullopt;
        terminals.push_back(std::move(cells));
    }
    if (!extra_terminals.empty()) terminals.push_back(extra_terminals);
    if (terminals.empty()) return std::nullopt;

    std::set<Coord> claimed;
    AStar astar{board, state, t0, t1, &claimed};
    RoutePath path;
    path.start = cycle;
    path.duration = duration;

    if (terminals.size() == 1) {
        // Single-operand ancilla-supported op: claim one adjacent route cell.
        for (const auto& c : terminals[0])
            if (astar.passable(c)) {
                path.cells.push_back(c);
                return path;
            }
        return std::nullopt;
    }

    auto first = astar.run(terminals[0], terminals[1], 1);
    if (!first) return std::nullopt;
    for (const auto& c : *first) {
        path.cells.push_back(c);
        claimed.insert(c);
    }
    for (size_t i = 2; i < terminals.size(); ++i) {
        std::vector<Coord> tree(claimed.begin(), claimed.end());
        auto ext = astar.run(tree, terminals[i], 0);
        if (!ext) return std::nullopt;
        for (const auto& c : *ext) {
            path.cells.push_back(c);
            claimed.insert(c);
        }
    }
    return path;
}

EdgeCheck track_edges(const BoardState& state, const ir::GateNode& node,
                      const mapper::QubitMap& map) {
    EdgeCheck check;
    for (size_t i = 0; i < node.operands.size(); ++i) {
        Boundary b = i < node.boundary.size() ? node.boundary[i] : Boundary::Either;
        auto it = map.where.find(node.operands[i]);
        if (it == map.where.end()) continue;
        if (!attach_cells(state.board(), state, it->second, b).empty()) continue;
        check.ready = false;
        auto pref = map.pref.count(node.operands[i]) ? map.pref.at(node.operands[i])
                                                     : mapper::OrientPref::Rotate;
        if (pref == mapper::OrientPref::Rotate && !check.rotation) {
            ir::GateNode rotate;
            rotate.kind = ir::NodeKind::RotationInjected;
            rotate.opcode = "rotate";
            rotate.operands = {node.operands[i]};
            rotate.cycles = 3;
            rotate.nonlocal = true;
            rotate.boundary = {Boundary::Either};
            check.rotation = std::move(rotate);
        }
    }
    return check;
}

RoutePath apply_disjoint_paths(const BoardState& state, const RoutePath& path, long long cycle) {
    RoutePath out = path;
    if (out.cells.size() < 3) return out;

    // Terminating ancillae are adjacent to a non-route patch endpoint (the
    // operand registers); interior cells qualify as candidates when idle for
    // more than two cycles.
    const qcb::Qcb& board = state.board();
    auto terminating = [&](const Coord& p) {
        const int dr[] = {-1, 1, 0, 0};
        const int dc[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            int r = p.row + dr[k], c = p.col + dc[k];
            if (board.in_bounds(r, c) && (board.at(r, c) == PatchType::Register ||
                                          board.at(r, c) == PatchType::IO ||
                                          board.at(r, c) == PatchType::Extern))
                return true;
        }
        return false;
    };
    std::vector<char> candidate(out.cells.size(), 0);
    for (size_t i = 0; i < out.cells.size(); ++i) {
        if (terminating(out.cells[i])) continue;
        long long last = state.last_used_before(out.cells[i], cycle);
        if (last <= cycle - 3 || last < 0) {
            // Also needs the back-propagation window to be free.
            if (state.is_free(out.cells[i], cycle - 2, cycle)) candidate[i] = 1;
        }
    }
    // Runs of at least three adjacent candidates convert.
    for (size_t i = 0; i < out.cells.size();) {
        if (!candidate[i]) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < out.cells.size() && candidate[j + 1]) {
            int dr = std::abs(out.cells[j + 1].row - out.cells[j].row);
            int dc = std::abs(out.cells[j + 1].col - out.cells[j].col);
            if (dr + dc != 1) break;
            ++j;
        }
        if (j - i + 1 >= 3)
            for (size_t k = i; k <= j; ++k) out.converted.push_back(out.cells[k]);
        i = j + 1;
    }
    if (!out.converted.empty()) {
        out.disjoint = true;
        out.establish_cycles = 2;
    }
    return out;
}

// --- compiler ---------------------------------------------------------------

namespace {

constexpr long long kNever = LLONG_MAX / 4;

struct Slot {
    std::string type;
    qcb::Segment seg;
    int holder = -1;
    long long free_at = 0;
    long long busy_until = 0;
    long long bound_at = 0;
    long long bound_total = 0;
};

struct InstanceState {
    int tmpl_w = 1, tmpl_h = 1;
    int production = 0;
    int outputs = 1;
    bool resettable = true;
    bool on_slot = false;
    bool has_explicit_reset = false;
    int slot = -1;
    long long production_end = -1;
    int remaining_consumers = 0;
    int remaining_barriers = 0;
    bool queued = false;
};

struct Compiler {
    const ir::CircuitDag& dag;
    const qcb::Qcb& board;
    const mapper::QubitMap& map;
    const DeviceSpec& device;
    RouterOptions options;

    BoardState state;
    std::vector<Instruction> out;
    std::vector<Slot> slots;
    std::vector<InstanceState> inst;
    std::map<int, int> heuristic_slot;
    std::deque<int> shared_queue;
    std::map<std::string, std::deque<int>> fifo_queues;

    std::vector<char> started, done;
    std::vector<int> pending_preds;
    std::vector<std::vector<int>> succ, barrier_release;
    std::vector<long long> node_start, node_end;
    std::map<std::pair<int, int>, long long> rotation_until;  // (node, operand) -> end
    std::vector<int> running;
    std::vector<int> ready;
    std::map<std::string, std::vector<int>> insts_of_type;  // first-use order
    std::map<std::string, size_t> alloc_cursor;
    long long t = 0;
    int finished = 0;
    int disjoint_segments = 0;

    Compiler(const ir::CircuitDag& d, const qcb::Qcb& b, const mapper::QubitMap& m,
             const DeviceSpec& dev, const RouterOptions& opt)
        : dag(d), board(b), map(m), device(dev), options(opt),
          state(b, dev.x_boundaries_vertical) {}

    std::vector<Coord> slot_cells(const Slot& s) const {
        std::vector<Coord> cells;
        for (int r = s.seg.row; r < s.seg.row + s.seg.height; ++r)
            for (int c = s.seg.col; c < s.seg.col + s.seg.width; ++c) cells.push_back({r, c});
        return cells;
    }

    void emit(Instruction i) { out.push_back(std::move(i)); }

    void setup() {
        // Slot table ordering matches sched::slot_table for the replay policy.
        auto prints = board.extern_slot_footprints();
        std::map<std::string, std::vector<qcb::Segment>> segs_by_type;
        for (const auto& s : board.segments_of(PatchType::Extern))
            segs_by_type[s.extern_type].push_back(s);
        for (const auto& [type, segs] : segs_by_type)
            for (const auto& seg : segs) slots.push_back({type, seg});

        int ni = static_cast<int>(dag.instances.size());
        inst.assign(ni, {});
        for (int i = 0; i < ni; ++i) {
            auto it = dag.extern_templates.find(dag.instances[i].type);
            if (it == dag.extern_templates.end())
                throw RoutingError("footprint-unsatisfiable: no template for " +
                                   dag.instances[i].type);
            inst[i].tmpl_w = it->second.width;
            inst[i].tmpl_h = it->second.height;
            inst[i].resettable = it->second.resettable;
            if (const auto* prod = it->second.production_op()) {
                inst[i].production = prod->cycles;
                inst[i].outputs = std::max(1, prod->outputs);
            }
        }
        int n = static_cast<int>(dag.nodes.size());
        for (int v = 0; v < n; ++v) {
            if (!dag.nodes[v].extern_dep) continue;
            int i = dag.nodes[v].extern_dep->instance;
            ++inst[i].remaining_consumers;
            if (!dag.nodes[v].extern_dep->op.empty()) inst[i].on_slot = true;
            if (dag.nodes[v].is_reset) inst[i].has_explicit_reset = true;
        }
        for (const auto& bar : dag.barriers) ++inst[bar.instance].remaining_barriers;

        for (int i = 0; i < ni; ++i) {
            if (inst[i].remaining_consumers == 0) continue;
            bool fits = false;
            for (const auto& s : slots)
                if (s.type == dag.instances[i].type && s.seg.width >= inst[i].tmpl_w &&
                    s.seg.height >= inst[i].tmpl_h)
                    fits = true;
            bool fits_any = false;
            for (const auto& s : slots)
                if (s.seg.width >= inst[i].tmpl_w && s.seg.height >= inst[i].tmpl_h)
                    fits_any = true;
            bool ok = options.policy == Policy::SharedPool ? fits_any : fits;
            if (!ok)
                throw RoutingError("footprint-unsatisfiable: extern " + dag.instances[i].type);
        }

        if (options.policy == Policy::HeuristicLocked) {
            sched::HeuristicConfig cfg = sched::HeuristicConfig::from_board(board);
            heuristic_slot = sched::estimate_cycles(dag, cfg).instance_slot;
        }

        for (int i = 0; i < ni; ++i)
            if (inst[i].remaining_consumers > 0)
                insts_of_type[dag.instances[i].type].push_back(i);
        for (auto& [type, list] : insts_of_type)
            std::sort(list.begin(), list.end(), [&](int a, int b) {
                return dag.instances[a].first_node < dag.instances[b].first_node;
            });

        succ = dag.successors();
        pending_preds.assign(n, 0);
        for (auto [a, b] : dag.edges) ++pending_preds[b];
        barrier_release.assign(n, {});
        for (const auto& bar : dag.barriers) barrier_release[bar.src].push_back(bar.instance);
        started.assign(n, 0);
        done.assign(n, 0);
        node_start.assign(n, 0);
        node_end.assign(n, 0);
        for (int v = 0; v < n; ++v)
            if (pending_preds[v] == 0) ready.push_back(v);
    }

    void bind(int i, int s) {
        inst[i].slot = s;
        slots[s].holder = i;
        slots[s].bound_at = t;
        inst[i].production_end = inst[i].on_slot ? t : t + inst[i].production;
        if (!inst[i].on_slot && inst[i].production > 0)
            emit({t, InstrKind::ExternInvoke, slot_cells(slots[s]), -1, inst[i].production});
    }

    bool slot_free(int s) const { return slots[s].holder < 0 && slots[s].free_at <= t; }

    void allocate_instances() {
        switch (options.policy) {
            case Policy::HeuristicLocked:
                // Replay the heuristic's slot assignment, in first-use order
                // per type (the order the heuristic allocated in).
                for (auto& [type, list] : insts_of_type) {
                    auto& cursor = alloc_cursor[type];
                    while (cursor < list.size()) {
                        int i = list[cursor];
                        if (inst[i].remaining_barriers > 0) break;
                        auto it = heuristic_slot.find(i);
                        if (it == heuristic_slot.end() || !slot_free(it->second)) break;
                        bind(i, it->second);
                        ++cursor;
                    }
                }
                break;
            case Policy::FifoPerType: {
                for (auto& [type, list] : insts_of_type) {
                    auto& cursor = alloc_cursor[type];
                    while (cursor < list.size() &&
                           inst[list[cursor]].remaining_barriers == 0) {
                        fifo_queues[type].push_back(list[cursor]);
                        inst[list[cursor]].queued = true;
                        ++cursor;
                    }
                }
                for (auto& [type, queue] : fifo_queues) {
                    while (!queue.empty()) {
                        int i = queue.front();
                        int chosen = -1;
                        for (int s = 0; s < static_cast<int>(slots.size()); ++s)
                            if (slots[s].type == type && slot_free(s) &&
                                slots[s].seg.width >= inst[i].tmpl_w &&
                                slots[s].seg.height >= inst[i].tmpl_h) {
                                chosen = s;
                                break;
                            }
                        if (chosen < 0) break;
                        bind(i, chosen);
                        queue.pop_front();
                    }
                }
                break;
            }
            case Policy::SharedPool: {
                for (auto& [type, list] : insts_of_type) {
                    auto& cursor = alloc_cursor[type];
                    while (cursor < list.size() &&
                           inst[list[cursor]].remaining_barriers == 0) {
                        shared_queue.push_back(list[cursor]);
                        inst[list[cursor]].queued = true;
                        ++cursor;
                    }
                }
                // Keep the queue in first-use order regardless of arrival.
                std::sort(shared_queue.begin(), shared_queue.end(), [&](int a, int b) {
                    return dag.instances[a].first_node < dag.instances[b].first_node;
                });
                bool bound = true;
                while (bound) {
                    bound = false;
                    for (auto it = shared_queue.begin(); it != shared_queue.end(); ++it) {
                        int i = *it;
                        int chosen = -1;
                        for (int s = 0; s < static_cast<int>(slots.size()); ++s)
                            if (slot_free(s) && slots[s].seg.width >= inst[i].tmpl_w &&
                                slots[s].seg.height >= inst[i].tmpl_h) {
                                chosen = s;
                                break;
                            }
                        if (chosen < 0) continue;
                        bind(i, chosen);
                        shared_queue.erase(it);
                        bound = true;
                        break;
                    }
                }
                break;
            }
        }
    }

    void release_slot(int i, long long when) {
        int s = inst[i].slot;
        if (s < 0 || slots[s].holder != i) return;
        slots[s].holder = -1;
        slots[s].free_at = when;
        slots[s].bound_total += when - slots[s].bound_at;
        emit({when, InstrKind::ExternReset, slot_cells(slots[s]), -1, 0});
    }

    void complete(int v) {
        done[v] = 1;
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
            if (release) release_slot(i, node_end[v]);
        }
    }

    // Boundary availability for one operand; may inject a rotation. Returns
    // true when the required edge faces a route patch right now.
    bool ensure_edge(int v, int operand_idx) {
        const auto& node = dag.nodes[v];
        Boundary b = operand_idx < static_cast<int>(node.boundary.size())
                         ? node.boundary[operand_idx]
                         : Boundary::Either;
        Coord p = map.where.at(node.operands[operand_idx]);
        if (!attach_cells(board, state, p, b).empty()) return true;

        auto key = std::make_pair(v, operand_idx);
        auto it = rotation_until.find(key);
        if (it != rotation_until.end()) return t >= it->second;  // rotation in flight

        auto pref = map.pref.count(node.operands[operand_idx])
                        ? map.pref.at(node.operands[operand_idx])
                        : mapper::OrientPref::Rotate;
        if (pref == mapper::OrientPref::Route) return false;  // wait for the edge

        // Inject a rotation: patch plus one adjacent route ancilla for 3 tocs.
        int dur = device.gate("rotate").cycles;
        if (!state.is_free(p, t, t + dur)) return false;
        for (const auto& anc : attach_cells(board, state, p, Boundary::Either)) {
            if (!state.is_free(anc, t, t + dur)) continue;
            state.lock(p, t, t + dur);
            state.lock(anc, t, t + dur);
            state.toggle_rotation(p);
            emit({t, InstrKind::Rotate, {p, anc}, v, dur});
            rotation_until[key] = t + dur;
            return false;
        }
        return false;
    }

    bool try_start(int v) {
        const auto& node = dag.nodes[v];
        int dur = node.cycles;

        if (node.is_reset) {
            if (node.extern_dep) {
                int i = node.extern_dep->instance;
                if (inst[i].production_end < 0) return false;
                if (inst[i].on_slot && inst[i].slot >= 0 &&
                    slots[inst[i].slot].busy_until > t)
                    return false;
            }
            node_start[v] = node_end[v] = t;
            started[v] = 1;
            return true;
        }

        // Instant frame updates.
        if (dur == 0 && !node.nonlocal) {
            std::vector<Coord> patches;
            for (const auto& opnd : node.operands) patches.push_back(map.where.at(opnd));
            emit({t, InstrKind::Pauli, patches, v, 0});
            node_start[v] = node_end[v] = t;
            started[v] = 1;
            return true;
        }

        // Local preparation and measurement.
        if (!node.nonlocal) {
            Coord p = map.where.at(node.operands.at(0));
            if (!state.is_free(p, t, t + dur)) return false;
            state.lock(p, t, t + dur);
            InstrKind k = node.opcode.rfind("prep", 0) == 0 ? InstrKind::Prep
                                                            : InstrKind::Measure;
            emit({t, k, {p}, v, dur});
            start_running(v, dur);
            return true;
        }

        // Rotation-style single patch deformations.
        if (node.opcode == "h" || node.opcode == "rotate") {
            Coord p = map.where.at(node.operands.at(0));
            if (!state.is_free(p, t, t + dur)) return false;
            for (const auto& anc : attach_cells(board, state, p, Boundary::Either)) {
                if (!state.is_free(anc, t, t + dur)) continue;
                state.lock(p, t, t + dur);
                state.lock(anc, t, t + dur);
                state.toggle_rotation(p);
                emit({t, InstrKind::Rotate, {p, anc}, v, dur});
                start_running(v, dur);
                return true;
            }
            return false;
        }

        // Everything else routes over the bus.
        if (node.extern_dep) {
            int i = node.extern_dep->instance;
            if (inst[i].production_end < 0 || inst[i].production_end > t) return false;
            if (inst[i].on_slot && slots[inst[i].slot].busy_until > t) return false;
        }
        bool edges_ok = true;
        for (size_t i = 0; i < node.operands.size(); ++i)
            if (!ensure_edge(v, static_cast<int>(i))) edges_ok = false;
        if (!edges_ok) return false;

        if (node.kind == ir::NodeKind::ExternOp) return start_extern_op(v);

        std::vector<Coord> extra;
        if (node.extern_dep) {
            // Consume from the slot's output positions along its bottom edge.
            const Slot& s = slots[inst[node.extern_dep->instance].slot];
            int below = s.seg.row + s.seg.height;
            for (int j = 0; j < inst[node.extern_dep->instance].outputs &&
                            j < s.seg.width; ++j)
                extra.push_back({below, s.seg.col + j});
        }
        auto path = route_operation(state, node, map, t, extra);
        if (!path) return false;
        if (options.disjoint) {
            *path = apply_disjoint_paths(state, *path, t);
            if (path->disjoint) ++disjoint_segments;
        }

        std::vector<Coord> operand_patches;
        for (const auto& opnd : node.operands) operand_patches.push_back(map.where.at(opnd));
        for (const auto& p : operand_patches) {
            if (!state.is_free(p, t, t + dur)) return false;
        }
        for (const auto& p : operand_patches) state.lock(p, t, t + dur);

        std::set<Coord> converted(path->converted.begin(), path->converted.end());
        for (const auto& c : path->cells) {
            if (converted.count(c)) {
                state.lock(c, t - path->establish_cycles, t + 1);
            } else {
                state.lock(c, t, t + dur);
            }
        }
        if (!path->converted.empty())
            emit({t - path->establish_cycles, InstrKind::Merge, path->converted, -1,
                  path->establish_cycles});

        std::vector<Coord> merge_patches = operand_patches;
        merge_patches.insert(merge_patches.end(), path->cells.begin(), path->cells.end());
        emit({t, InstrKind::Merge, merge_patches, v, 1});
        if (dur >= 2) {
            std::vector<Coord> split_patches = operand_patches;
            for (const auto& c : path->cells)
                if (!converted.count(c)) split_patches.push_back(c);
            emit({t + 1, InstrKind::Split, split_patches, v, dur - 1});
        }
        start_running(v, dur);
        return true;
    }

    bool start_extern_op(int v) {
        const auto& node = dag.nodes[v];
        int dur = std::max(node.cycles, 1);
        int i = node.extern_dep->instance;
        Slot& slot = slots[inst[i].slot];
        const auto* tmpl_op =
            dag.extern_templates.at(node.extern_dep->type).find_op(node.extern_dep->op);
        int inputs = tmpl_op ? tmpl_op->inputs : static_cast<int>(node.operands.size());
        int window = std::min(2, dur);
        int below = slot.seg.row + slot.seg.height;

        // Transfer paths: inputs left to right, then outputs. Transfers are
        // staggered across the invocation so they do not contend for the
        // same feed cells at once.
        struct Claim {
            Coord cell;
            long long s, e;
        };
        std::vector<Claim> claims;
        std::vector<Instruction> pending;
        auto claim_path = [&](size_t arg_idx, int io_index, bool is_input) {
            Coord io_cell{below, slot.seg.col + std::min(io_index, slot.seg.width - 1)};
            int outputs = static_cast<int>(node.operands.size()) - inputs;
            long long s, e;
            if (is_input) {
                s = std::min<long long>(t + io_index * window, t + dur - window);
                e = s + window;
            } else {
                int out_pos = io_index - inputs;  // 0-based among outputs
                s = std::max<long long>(t, t + dur - (outputs - out_pos) * window);
                e = s + window;
            }
            // Temporary state view: claims already made must stay locked.
            for (const auto& c : claims)
                if (c.cell == io_cell && c.s < e && s < c.e) return false;
            ir::GateNode probe;
            probe.operands = {node.operands[arg_idx]};
            probe.boundary = {arg_idx < node.boundary.size() ? node.boundary[arg_idx]
                                                             : Boundary::Either};
            probe.cycles = window;
            BoardState scratch = state;
            for (const auto& c : claims) scratch.lock(c.cell, c.s, c.e);
            auto path = route_operation(scratch, probe, map, s, {io_cell});
            if (!path) return false;
            std::vector<Coord> patches{map.where.at(node.operands[arg_idx])};
            for (const auto& c : path->cells) {
                claims.push_back({c, s, e});
                patches.push_back(c);
            }
            pending.push_back({s, InstrKind::Merge, patches, v, window});
            return true;
        };

        for (size_t a = 0; a < node.operands.size(); ++a) {
            bool is_input = static_cast<int>(a) < inputs;
            int io_index = static_cast<int>(a);
            Coord p = map.where.at(node.operands[a]);
            if (!state.is_free(p, t, t + dur)) return false;
            if (!claim_path(a, io_index, is_input)) return false;
        }
        for (const auto& opnd : node.operands) state.lock(map.where.at(opnd), t, t + dur);
        for (const auto& c : claims) state.lock(c.cell, c.s, c.e);
        for (auto& instn : pending) emit(std::move(instn));
        emit({t, InstrKind::ExternInvoke, slot_cells(slot), v, dur});
        slot.busy_until = t + dur;
        start_running(v, dur);
        return true;
    }

    void start_running(int v, int dur) {
        started[v] = 1;
        node_start[v] = t;
        node_end[v] = t + dur;
        running.push_back(v);
    }

    void run() {
        setup();
        const int n = static_cast<int>(dag.nodes.size());
        while (finished < n) {
            bool progress = true;
            while (progress) {
                progress = false;
                allocate_instances();
                std::vector<int> pool;
                pool.swap(ready);  // complete() appends newly released nodes to `ready`
                std::sort(pool.begin(), pool.end(), [&](int a, int b) {
                    return std::tie(dag.nodes[a].slack, a) < std::tie(dag.nodes[b].slack, b);
                });
                std::vector<int> blocked;
                for (int v : pool) {
                    if (!try_start(v)) {
                        blocked.push_back(v);
                        continue;
                    }
                    if (node_end[v] <= t) {
                        complete(v);
                        progress = true;
                    }
                }
                ready.insert(ready.end(), blocked.begin(), blocked.end());
            }
            if (finished == n) break;

            long long next_t = kNever;
            for (int v : running) next_t = std::min(next_t, node_end[v]);
            for (size_t i = 0; i < inst.size(); ++i)
                if (inst[i].production_end > t && inst[i].production_end < kNever &&
                    inst[i].remaining_consumers > 0)
                    next_t = std::min(next_t, inst[i].production_end);
            for (const auto& [key, end] : rotation_until)
                if (end > t) next_t = std::min(next_t, end);
            if (next_t == kNever || next_t <= t)
                throw RoutingError("routing deadlock at cycle " + std::to_string(t) +
                                   " with " + std::to_string(n - finished) +
                                   " operations outstanding");
            t = next_t;

            std::vector<int> still;
            for (int v : running) {
                if (node_end[v] <= t)
                    complete(v);
                else
                    still.push_back(v);
            }
            running = std::move(still);
        }
    }

    CompilationResult finish() {
        CompilationResult result;
        std::stable_sort(out.begin(), out.end(), [](const Instruction& a, const Instruction& b) {
            return std::tie(a.cycle, a.node) < std::tie(b.cycle, b.node);
        });
        result.instructions = std::move(out);
        for (const auto& i : result.instructions)
            result.total_cycles = std::max(result.total_cycles, i.cycle + i.duration);

        // Slots that were never released stay bound to the end of the program.
        for (auto& s : slots)
            if (s.holder >= 0) s.bound_total += result.total_cycles - s.bound_at;

        std::set<Coord> registers;
        for (const auto& [sym, at] : map.where) registers.insert(at);
        result.mapped_registers = static_cast<int>(registers.size());
        long long register_total =
            static_cast<long long>(registers.size()) * result.total_cycles;
        long long register_busy = 0, routing = 0;
        for (const auto& i : result.instructions) {
            if (i.duration == 0) continue;
            for (const auto& p : i.patches) {
                if (registers.count(p))
                    register_busy += i.duration;
                else if (board.at(p.row, p.col) == PatchType::Route)
                    routing += i.duration;
            }
        }
        long long extern_vol = 0;
        for (const auto& s : slots) extern_vol += s.bound_total * s.seg.area();
        result.breakdown.register_busy = register_busy;
        result.breakdown.register_idle = register_total - register_busy;
        result.breakdown.routing = routing;
        result.breakdown.extern_patches = extern_vol;
        result.spacetime_volume = register_total + routing + extern_vol;
        result.board_width = board.width();
        result.board_height = board.height();
        result.disjoint_segments = disjoint_segments;
        result.io_dirs = dag.io_dirs;
        result.circuit_name = dag.name;
        return result;
    }
};

}  // namespace

CompilationResult compile(const ir::CircuitDag& dag, const qcb::Qcb& board,
                          const mapper::QubitMap& map, const DeviceSpec& device,
                          const RouterOptions& options) {
    std::map<std::string, int> counts;
    for (const auto& [type, prints] : board.extern_slot_footprints())
        counts[type] = static_cast<int>(prints.size());
    ir::CircuitDag prepared = ir::compute_slack(ir::attach_extern_barriers(dag, counts));
    Compiler c(prepared, board, map, device, options);
    c.run();
    return c.finish();
}

ir::ExternTemplate package_as_extern(const CompilationResult& result, const std::string& name) {
    if (result.io_dirs.empty())
        throw RoutingError("no-io: a closed circuit cannot be packaged as an extern");
    int inputs = 0, outputs = 0;
    for (auto d : result.io_dirs) {
        if (d != ir::IoDir::Out) ++inputs;
        if (d != ir::IoDir::In) ++outputs;
    }
    ir::ExternTemplate tmpl;
    tmpl.name = name;
    tmpl.width = result.board_width;
    tmpl.height = result.board_height;
    tmpl.resettable = true;
    tmpl.ops.push_back({"call", inputs, outputs, static_cast<int>(result.total_cycles)});
    return tmpl;
}

CostReport cost_report(const CompilationResult& result, const DeviceSpec& device) {
    CostReport r;
    r.total_cycles = result.total_cycles;
    r.spacetime_volume = result.spacetime_volume;
    r.instruction_count = static_cast<long long>(result.instructions.size());
    r.board_width = result.board_width;
    r.board_height = result.board_height;
    r.code_distance = device.code_distance;
    r.breakdown = result.breakdown;
    long long d = device.code_distance;
    r.physical_patch_area = static_cast<long long>(result.board_width) * result.board_height * d * d;
    r.physical_cycles = result.total_cycles * d;
    r.disjoint_segments = result.disjoint_segments;
    if (result.disjoint_segments > 0)
        r.note = "disjoint segments add O(log s) decoder rounds per merge; "
                 "reported, not simulated";
    return r;
}

std::vector<std::string> validate_stream(const std::vector<Instruction>& stream,
                                         const qcb::Qcb& board, const ir::CircuitDag& dag) {
    std::vector<std::string> violations;

    // Lock disjointness per patch.
    std::map<Coord, std::vector<std::pair<long long, long long>>> usage;
    for (const auto& i : stream) {
        if (i.duration == 0) continue;
        for (const auto& p : i.patches) usage[p].push_back({i.cycle, i.cycle + i.duration});
    }
    for (auto& [p, intervals] : usage) {
        std::sort(intervals.begin(), intervals.end());
        for (size_t k = 1; k < intervals.size(); ++k)
            if (intervals[k].first < intervals[k - 1].second) {
                violations.push_back("lock-overlap at (" + std::to_string(p.row) + "," +
                                     std::to_string(p.col) + ")");
                break;
            }
    }

    // Dependency preservation over the DAG edges.
    std::map<int, std::pair<long long, long long>> node_span;
    for (const auto& i : stream) {
        if (i.node < 0) continue;
        auto it = node_span.find(i.node);
        if (it == node_span.end())
            node_span[i.node] = {i.cycle, i.cycle + i.duration};
        else {
            it->second.first = std::min(it->second.first, i.cycle);
            it->second.second = std::max(it->second.second, i.cycle + i.duration);
        }
    }
    for (auto [a, b] : dag.edges) {
        auto ia = node_span.find(a), ib = node_span.find(b);
        if (ia == node_span.end() || ib == node_span.end()) continue;
        if (ia->second.second > ib->second.first)
            violations.push_back("dependency-violation: node " + std::to_string(a) +
                                 " ends after node " + std::to_string(b) + " starts");
    }

    // Route legality: merge instructions connect, and their non-storage
    // patches are routes.
    for (const auto& i : stream) {
        if (i.kind != InstrKind::Merge) continue;
        for (const auto& p : i.patches) {
            if (!board.in_bounds(p.row, p.col)) {
                violations.push_back("merge-out-of-bounds");
                continue;
            }
            PatchType type = board.at(p.row, p.col);
            if (type != PatchType::Route && type != PatchType::Register &&
                type != PatchType::IO)
                violations.push_back("off-route-merge at (" + std::to_string(p.row) + "," +
                                     std::to_string(p.col) + ")");
        }
        // Connectivity.
        if (i.patches.size() > 1) {
            std::set<Coord> cells(i.patches.begin(), i.patches.end());
            std::set<Coord> seen;
            std::deque<Coord> q{*cells.begin()};
            seen.insert(*cells.begin());
            while (!q.empty()) {
                Coord p = q.front();
                q.pop_front();
                const int dr[] = {-1, 1, 0, 0};
                const int dc[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    Coord nxt{p.row + dr[k], p.col + dc[k]};
                    if (cells.count(nxt) && !seen.count(nxt)) {
                        seen.insert(nxt);
                        q.push_back(nxt);
                    }
                }
            }
            if (seen.size() != cells.size())
                violations.push_back("merge-disconnected (node " + std::to_string(i.node) + ")");
        }
    }

    // Extern exclusivity: invokes on one footprint may not overlap and each
    // is eventually matched by a reset or runs to the end of the program.
    std::map<std::vector<Coord>, std::vector<const Instruction*>> by_slot;
    for (const auto& i : stream)
        if (i.kind == InstrKind::ExternInvoke || i.kind == InstrKind::ExternReset) {
            auto key = i.patches;
            std::sort(key.begin(), key.end());
            by_slot[key].push_back(&i);
        }
    for (auto& [cells, events] : by_slot) {
        long long last_end = -1;
        for (const auto* e : events) {
            if (e->kind == InstrKind::ExternInvoke) {
                if (e->cycle < last_end)
                    violations.push_back("extern-overlap");
                last_end = std::max(last_end, e->cycle + e->duration);
            }
        }
    }
    return violations;
}

}  // namespace lsc::router
