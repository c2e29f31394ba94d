#include "lsc/mapper.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "lsc/errors.hpp"

namespace lsc::mapper {

using qcb::Coord;
using qcb::PatchType;
using qcb::Qcb;
using qcb::Segment;

int RouteTree::leaf_allocatable_total() const {
    int total = 0;
    for (int l : leaves) total += nodes[l].allocatable;
    return total;
}

bool QubitMap::mapped(int row, int col) const {
    for (const auto& [sym, at] : where)
        if (at.row == row && at.col == col) return true;
    return false;
}

// --- build_tree ---------------------------------------------------------------

namespace {

struct BusUnits {
    std::vector<std::vector<Coord>> members;      // unit -> patches
    std::map<Coord, int> unit_of;                 // patch -> unit
    std::vector<std::set<int>> adjacent;          // unit -> neighbouring units
};

// Compress non-branching runs of the routing graph into single units.
BusUnits compress_bus(const Qcb& board) {
    BusUnits units;
    auto is_route = [&](int r, int c) {
        return board.in_bounds(r, c) && board.at(r, c) == PatchType::Route;
    };
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, -1, 1};
    auto degree = [&](int r, int c) {
        int d = 0;
        for (int k = 0; k < 4; ++k)
            if (is_route(r + dr[k], c + dc[k])) ++d;
        return d;
    };

    for (int r = 0; r < board.height(); ++r) {
        for (int c = 0; c < board.width(); ++c) {
            if (!is_route(r, c) || units.unit_of.count({r, c})) continue;
            int id = static_cast<int>(units.members.size());
            units.members.push_back({});
            if (degree(r, c) >= 3) {
                units.unit_of[{r, c}] = id;
                units.members[id].push_back({r, c});
            } else {
                // Flood over connected degree<=2 patches.
                std::deque<Coord> q{{r, c}};
                units.unit_of[{r, c}] = id;
                while (!q.empty()) {
                    Coord p = q.front();
                    q.pop_front();
                    units.members[id].push_back(p);
                    for (int k = 0; k < 4; ++k) {
                        int nr = p.row + dr[k], nc = p.col + dc[k];
                        if (is_route(nr, nc) && degree(nr, nc) <= 2 &&
                            !units.unit_of.count({nr, nc})) {
                            units.unit_of[{nr, nc}] = id;
                            q.push_back({nr, nc});
                        }
                    }
                }
                std::sort(units.members[id].begin(), units.members[id].end());
            }
        }
    }
    units.adjacent.assign(units.members.size(), {});
    for (const auto& [p, u] : units.unit_of) {
        for (int k = 0; k < 4; ++k) {
            auto it = units.unit_of.find({p.row + dr[k], p.col + dc[k]});
            if (it != units.unit_of.end() && it->second != u) {
                units.adjacent[u].insert(it->second);
                units.adjacent[it->second].insert(u);
            }
        }
    }
    return units;
}

struct TreeBuilder {
    RouteTree tree;

    int add_node(int segment_id, Coord anchor) {
        TreeNode n;
        n.id = static_cast<int>(tree.nodes.size());
        n.segment_id = segment_id;
        n.anchor = anchor;
        tree.nodes.push_back(n);
        return n.id;
    }

    // Distributes k down the subtree, k/n to each of n children.
    void propagate(int node, double k) {
        auto& n = tree.nodes[node];
        n.weight += k;
        if (n.children.empty()) return;
        double share = k / static_cast<double>(n.children.size());
        for (int c : n.children) propagate(c, share);
    }

    void finalize_values(int node) {
        auto& n = tree.nodes[node];
        if (n.children.empty()) {
            n.value = n.weight;
            return;
        }
        n.value = 0;
        n.allocatable = 0;
        for (int c : n.children) {
            finalize_values(c);
            n.value = std::max(n.value, tree.nodes[c].value);
            n.allocatable += tree.nodes[c].allocatable;
        }
    }
};

}  // namespace

RouteTree build_tree(const Qcb& board) {
    TreeBuilder tb;

    std::vector<Segment> segs;
    for (const auto& s : board.segments())
        if (s.kind == PatchType::Register || s.kind == PatchType::Extern ||
            s.kind == PatchType::IO)
            segs.push_back(s);
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
        return std::tie(a.row, a.col, a.id) < std::tie(b.row, b.col, b.id);
    });

    if (segs.empty()) return tb.tree;

    BusUnits units = compress_bus(board);

    // Subtree bookkeeping: one per segment; DSU-style current root.
    int ns = static_cast<int>(segs.size());
    std::vector<int> root_of(ns);
    std::vector<char> active(ns, 1);
    std::vector<std::set<int>> owned(ns);  // unit ids per original subtree index
    std::map<int, int> unit_owner;         // unit -> subtree index

    for (int i = 0; i < ns; ++i) {
        int leaf = tb.add_node(segs[i].id, {segs[i].row, segs[i].col});
        tb.tree.leaves.push_back(leaf);
        tb.tree.nodes[leaf].allocatable =
            segs[i].kind == PatchType::Register ? segs[i].area() : 0;
        root_of[i] = leaf;
    }

    auto find_root = [&](int s) { return root_of[s]; };
    auto subtree_units_adjacent = [&](int s) {
        std::set<int> frontier;
        const Segment& seg = segs[s];
        const int dr[] = {-1, 1, 0, 0};
        const int dc[] = {0, 0, -1, 1};
        for (int r = seg.row; r < seg.row + seg.height; ++r)
            for (int c = seg.col; c < seg.col + seg.width; ++c)
                for (int k = 0; k < 4; ++k) {
                    auto it = units.unit_of.find({r + dr[k], c + dc[k]});
                    if (it != units.unit_of.end()) frontier.insert(it->second);
                }
        for (int u : owned[s])
            for (int v : units.adjacent[u]) frontier.insert(v);
        for (int u : owned[s]) frontier.erase(u);
        return frontier;
    };

    int active_count = ns;
    int guard = static_cast<int>(units.members.size()) + ns + 4;
    while (active_count > 1 && guard-- > 0) {
        // Expansion proposals for this round, in segment order.
        std::map<int, std::vector<int>> claims;  // unit -> claiming subtrees
        for (int s = 0; s < ns; ++s) {
            if (!active[s]) continue;
            for (int u : subtree_units_adjacent(s)) claims[u].push_back(s);
        }
        if (claims.empty())
            throw ValidationError("disconnected-bus: tree growth stalled");

        bool merged_this_round = false;
        for (auto& [u, claimers] : claims) {
            // Resolve to current subtree identities; include a prior owner.
            std::set<int> groups;
            auto owner = unit_owner.find(u);
            if (owner != unit_owner.end()) groups.insert(owner->second);
            for (int s : claimers)
                if (active[s]) groups.insert(s);
            // Collapse subtrees merged earlier this round.
            std::set<int> live;
            for (int g : groups)
                if (active[g]) live.insert(g);
            if (owner != unit_owner.end() && live.count(owner->second) == 0) {
                // Prior owner already merged; route through its survivor.
                for (int g : groups) live.insert(g);
            }
            if (live.empty()) continue;

            if (live.size() >= 2) {
                // Shared node: merge the subtrees under a fresh root.
                int keep = *live.begin();
                int merged = tb.add_node(-1, tb.tree.nodes[find_root(keep)].anchor);
                for (int s : live) {
                    int r = find_root(s);
                    tb.tree.nodes[r].parent = merged;
                    tb.tree.nodes[merged].children.push_back(r);
                }
                for (int s : live) {
                    if (s == keep) continue;
                    active[s] = 0;
                    --active_count;
                    for (int uu : owned[s]) {
                        owned[keep].insert(uu);
                        unit_owner[uu] = keep;
                    }
                    owned[s].clear();
                }
                root_of[keep] = merged;
                if (owner == unit_owner.end()) {
                    owned[keep].insert(u);
                    unit_owner[u] = keep;
                }
                tb.propagate(merged, 1.0);
                merged_this_round = true;
            } else {
                int s = *live.begin();
                if (owner != unit_owner.end()) continue;  // already inside that subtree
                owned[s].insert(u);
                unit_owner[u] = s;
                tb.propagate(find_root(s), 1.0);
            }
        }
        (void)merged_this_round;
    }
    if (active_count > 1)
        throw ValidationError("disconnected-bus: multiple subtrees remain");

    for (int s = 0; s < ns; ++s)
        if (active[s]) tb.tree.root = find_root(s);
    tb.finalize_values(tb.tree.root);
    return tb.tree;
}

// --- allocation ----------------------------------------------------------------

std::map<std::pair<ir::RegisterSymbol, ir::RegisterSymbol>, int> contention_counts(
    const ir::CircuitDag& dag) {
    std::map<std::pair<ir::RegisterSymbol, ir::RegisterSymbol>, int> counts;
    for (const auto& node : dag.nodes) {
        for (size_t i = 0; i < node.operands.size(); ++i)
            for (size_t j = i + 1; j < node.operands.size(); ++j) {
                auto a = node.operands[i], b = node.operands[j];
                if (b < a) std::swap(a, b);
                ++counts[{a, b}];
            }
    }
    return counts;
}

std::vector<Coord> place_within_register(const Segment& segment, int count) {
    if (count > segment.width * segment.height)
        throw AllocationError("overflow: segment holds " + std::to_string(segment.area()) +
                              " patches, requested " + std::to_string(count));
    // Register segments are horizontal runs; bisect the largest free run.
    std::vector<Coord> out;
    std::vector<std::pair<int, int>> runs{{0, segment.width - 1}};
    for (int i = 0; i < count; ++i) {
        auto best = std::max_element(runs.begin(), runs.end(),
                                     [](const auto& a, const auto& b) {
                                         int la = a.second - a.first, lb = b.second - b.first;
                                         if (la != lb) return la < lb;
                                         return a.first > b.first;  // prefer leftmost
                                     });
        auto [lo, hi] = *best;
        runs.erase(best);
        int mid = (lo + hi) / 2;
        out.push_back({segment.row, segment.col + mid});
        if (mid - 1 >= lo) runs.push_back({lo, mid - 1});
        if (mid + 1 <= hi) runs.push_back({mid + 1, hi});
    }
    return out;
}

QubitMap allocate_symbols(RouteTree& tree, const ir::CircuitDag& dag, const Qcb& board) {
    QubitMap qmap;

    // IO symbols pin to the IO patches, ordered left to right.
    int io_row = board.height() - 1;
    for (size_t i = 0; i < dag.io_symbols.size(); ++i)
        qmap.where[dag.io_symbols[i]] = {io_row, static_cast<int>(i)};

    auto storage = dag.storage_symbols();
    if (storage.empty()) return qmap;
    if (tree.root < 0 || tree.leaf_allocatable_total() < static_cast<int>(storage.size()))
        throw AllocationError("tree capacity below symbol count");

    // Contention ordering: most-contended symbol first, then its partners by
    // pairwise contention.
    auto pairwise = contention_counts(dag);
    std::map<ir::RegisterSymbol, int> total;
    for (const auto& s : storage) total[s] = 0;
    for (const auto& [pair, n] : pairwise) {
        if (total.count(pair.first)) total[pair.first] += n;
        if (total.count(pair.second)) total[pair.second] += n;
    }
    std::set<ir::RegisterSymbol> remaining(storage.begin(), storage.end());
    std::vector<ir::RegisterSymbol> order;
    auto decl_pos = [&](const ir::RegisterSymbol& s) {
        for (size_t i = 0; i < storage.size(); ++i)
            if (storage[i] == s) return i;
        return storage.size();
    };
    while (!remaining.empty()) {
        const ir::RegisterSymbol* seed = nullptr;
        for (const auto& s : storage) {
            if (!remaining.count(s)) continue;
            if (!seed || total[s] > total[*seed]) seed = &s;
        }
        order.push_back(*seed);
        remaining.erase(*seed);
        std::vector<std::pair<int, ir::RegisterSymbol>> partners;
        for (const auto& s : storage) {
            if (!remaining.count(s)) continue;
            auto a = *seed, b = s;
            if (b < a) std::swap(a, b);
            auto it = pairwise.find({a, b});
            if (it != pairwise.end() && it->second > 0) partners.push_back({it->second, s});
        }
        std::stable_sort(partners.begin(), partners.end(),
                         [&](const auto& a, const auto& b) {
                             if (a.first != b.first) return a.first > b.first;
                             return decl_pos(a.second) < decl_pos(b.second);
                         });
        for (const auto& [n, s] : partners) {
            order.push_back(s);
            remaining.erase(s);
        }
    }

    // Round-robin descent. Children with exhausted capacity are pruned.
    std::map<int, std::vector<ir::RegisterSymbol>> leaf_symbols;
    for (const auto& sym : order) {
        int node = tree.root;
        while (!tree.nodes[node].children.empty()) {
            int pick = -1;
            for (int c : tree.nodes[node].children) {
                const auto& cn = tree.nodes[c];
                if (cn.allocatable - cn.allocated <= 0) continue;
                if (pick < 0) {
                    pick = c;
                    continue;
                }
                const auto& pn = tree.nodes[pick];
                auto key = [](const TreeNode& t) {
                    return std::make_tuple(t.allocated, -t.value, t.anchor.row, t.anchor.col);
                };
                if (key(cn) < key(pn)) pick = c;
            }
            if (pick < 0) throw AllocationError("tree descent found no capacity");
            ++tree.nodes[pick].allocated;
            node = pick;
        }
        leaf_symbols[node].push_back(sym);
    }

    // Intra-segment placement, in allocation order.
    for (const auto& [leaf, syms] : leaf_symbols) {
        const Segment* seg = nullptr;
        for (const auto& s : board.segments())
            if (s.id == tree.nodes[leaf].segment_id) seg = &s;
        if (!seg) throw AllocationError("tree leaf lost its segment");
        auto coords = place_within_register(*seg, static_cast<int>(syms.size()));
        for (size_t i = 0; i < syms.size(); ++i) qmap.where[syms[i]] = coords[i];
    }
    return qmap;
}

// --- cleanup and orientation ----------------------------------------------------

qcb::Qcb cleanup_qcb(const Qcb& board, const QubitMap& map) {
    Qcb out = board;
    std::set<Coord> mapped;
    for (const auto& [sym, at] : map.where) mapped.insert(at);

    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c) {
            if (out.at(r, c) == PatchType::Register && !mapped.count({r, c}))
                out.set(r, c, PatchType::Route);
            else if (out.at(r, c) == PatchType::Unallocated)
                out.set(r, c, PatchType::LocalRoute);
        }

    // Local routes touching the bus are absorbed, transitively.
    std::deque<Coord> frontier;
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            if (out.at(r, c) == PatchType::Route) frontier.push_back({r, c});
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, -1, 1};
    while (!frontier.empty()) {
        Coord p = frontier.front();
        frontier.pop_front();
        for (int k = 0; k < 4; ++k) {
            int nr = p.row + dr[k], nc = p.col + dc[k];
            if (out.in_bounds(nr, nc) && out.at(nr, nc) == PatchType::LocalRoute) {
                out.set(nr, nc, PatchType::Route);
                frontier.push_back({nr, nc});
            }
        }
    }

    // Register segment records follow the surviving patches.
    std::vector<int> stale;
    for (const auto& s : out.segments())
        if (s.kind == PatchType::Register) stale.push_back(s.id);
    for (int id : stale) out.remove_segment(id);
    for (int r = 0; r < out.height(); ++r) {
        for (int c = 0; c < out.width();) {
            if (out.at(r, c) == PatchType::Register) {
                int e = c;
                while (e < out.width() && out.at(r, e) == PatchType::Register) ++e;
                out.add_segment({-1, r, c, e - c, 1, PatchType::Register, ""});
                c = e;
            } else {
                ++c;
            }
        }
    }
    return out;
}

QubitMap tag_orientation(const Qcb& board, const QubitMap& map) {
    QubitMap out = map;
    auto is_route = [&](int r, int c) {
        return board.in_bounds(r, c) && board.at(r, c) == PatchType::Route;
    };
    for (const auto& [sym, at] : out.where) {
        // Default layout: Z boundaries face up/down, X boundaries left/right.
        bool z_exposed = is_route(at.row - 1, at.col) || is_route(at.row + 1, at.col);
        bool x_exposed = is_route(at.row, at.col - 1) || is_route(at.row, at.col + 1);
        out.pref[sym] = (z_exposed && x_exposed) ? OrientPref::Route : OrientPref::Rotate;
    }
    return out;
}

QubitMap map_circuit(Qcb& board, const ir::CircuitDag& dag) {
    RouteTree tree = build_tree(board);
    QubitMap map = allocate_symbols(tree, dag, board);
    board = cleanup_qcb(board, map);
    return tag_orientation(board, map);
}

}  // namespace lsc::mapper
