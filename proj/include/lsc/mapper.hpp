#pragma once

#include <map>
#include <string>
#include <vector>

#include "lsc/ir.hpp"
#include "lsc/qcb.hpp"

namespace lsc::mapper {

// Approximate Steiner tree over the bus. Leaves are the non-route segments;
// internal nodes are merge points created while growing subtrees over the
// routing graph. Child weights carry the routing-space score accumulated by
// the growth; a parent's value is the maximum of its children's values.
struct TreeNode {
    int id = -1;
    int parent = -1;
    std::vector<int> children;
    double weight = 0.0;
    double value = 0.0;
    int allocatable = 0;
    int allocated = 0;
    int segment_id = -1;   // leaf only
    qcb::Coord anchor;     // leftmost patch, used for deterministic ties
};

struct RouteTree {
    std::vector<TreeNode> nodes;
    int root = -1;
    std::vector<int> leaves;

    int leaf_allocatable_total() const;
};

enum class OrientPref { Route, Rotate };

struct QubitMap {
    std::map<ir::RegisterSymbol, qcb::Coord> where;
    std::map<ir::RegisterSymbol, OrientPref> pref;

    bool mapped(int row, int col) const;
};

// Prunes non-branching bus runs, grows one subtree per segment and merges at
// shared nodes, propagating weight 1 per consumed unit with k/n division at
// each n-child vertex.
RouteTree build_tree(const qcb::Qcb& board);

// Round-robin symbol allocation over the tree: symbols in descending DAG
// contention order, each descending into the least-allocated, highest-score
// branch. IO symbols map onto the IO patches left to right. Returns the
// patch assignment (orientation tagging happens after cleanup).
QubitMap allocate_symbols(RouteTree& tree, const ir::CircuitDag& dag, const qcb::Qcb& board);

// Greedy bisection of the largest free run within a register segment.
std::vector<qcb::Coord> place_within_register(const qcb::Segment& segment, int count);

// Unmapped register patches become routes; local routes touching the bus are
// absorbed into it; no unallocated patches remain.
qcb::Qcb cleanup_qcb(const qcb::Qcb& board, const QubitMap& map);

// Patches exposing both an X and a Z boundary to the bus prefer routing;
// everything else prefers rotation.
QubitMap tag_orientation(const qcb::Qcb& board, const QubitMap& map);

// Convenience pipeline: tree, allocation, cleanup, orientation. The board is
// replaced by its cleaned-up version.
QubitMap map_circuit(qcb::Qcb& board, const ir::CircuitDag& dag);

// Pairwise contention: number of DAG nodes in which both symbols appear.
std::map<std::pair<ir::RegisterSymbol, ir::RegisterSymbol>, int> contention_counts(
    const ir::CircuitDag& dag);

}  // namespace lsc::mapper
