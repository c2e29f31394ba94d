#include "lsc/qcb.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "lsc/errors.hpp"

namespace lsc::qcb {

char glyph(PatchType t) {
    switch (t) {
        case PatchType::Unallocated: return '.';
        case PatchType::Register: return 'R';
        case PatchType::Route: return 'B';
        case PatchType::LocalRoute: return 'L';
        case PatchType::Extern: return 'E';
        case PatchType::IO: return 'I';
    }
    return '?';
}

Qcb::Qcb(int width, int height) : width_(width), height_(height) {
    if (width < 2 || height < 2)
        throw AllocationError("board must be at least 2x2");
    grid_.assign(static_cast<size_t>(width) * height, PatchType::Unallocated);
}

bool Qcb::is_bus(int r, int c) const {
    return in_bounds(r, c) && at(r, c) == PatchType::Route && !pending_io_.count({r, c});
}

bool Qcb::bus_empty() const {
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c)
            if (is_bus(r, c)) return false;
    return true;
}

int Qcb::count(PatchType t) const {
    int n = 0;
    for (PatchType p : grid_)
        if (p == t) ++n;
    return n;
}

bool Qcb::adjacent_to_bus(int r, int c) const {
    return is_bus(r - 1, c) || is_bus(r + 1, c) || is_bus(r, c - 1) || is_bus(r, c + 1);
}

int Qcb::bus_components() const {
    std::set<Coord> seen;
    int components = 0;
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            if (!is_bus(r, c) || seen.count({r, c})) continue;
            ++components;
            std::deque<Coord> q{{r, c}};
            seen.insert({r, c});
            while (!q.empty()) {
                auto [cr, cc] = q.front();
                q.pop_front();
                const int dr[] = {-1, 1, 0, 0};
                const int dc[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    int nr = cr + dr[k], nc = cc + dc[k];
                    if (is_bus(nr, nc) && !seen.count({nr, nc})) {
                        seen.insert({nr, nc});
                        q.push_back({nr, nc});
                    }
                }
            }
        }
    }
    return components;
}

std::vector<Segment> Qcb::segments_of(PatchType kind) const {
    std::vector<Segment> out;
    for (const auto& s : segments_)
        if (s.kind == kind) out.push_back(s);
    return out;
}

Segment& Qcb::add_segment(Segment s) {
    s.id = next_segment_id_++;
    segments_.push_back(s);
    return segments_.back();
}

void Qcb::retype_segment(int id, PatchType kind) {
    for (auto& s : segments_)
        if (s.id == id) s.kind = kind;
}

void Qcb::remove_segment(int id) {
    std::erase_if(segments_, [id](const Segment& s) { return s.id == id; });
}

void Qcb::confirm_pending_if_touched() {
    if (pending_io_.empty()) return;
    bool touched = false;
    for (const auto& p : pending_io_) {
        const int dr[] = {-1, 1, 0, 0};
        const int dc[] = {0, 0, -1, 1};
        for (int k = 0; k < 4 && !touched; ++k)
            if (is_bus(p.row + dr[k], p.col + dc[k])) touched = true;
        if (touched) break;
    }
    if (touched) pending_io_.clear();
}

int Qcb::route_lane_count() const {
    int runs = 0;
    for (int r = 0; r < height_; ++r) {
        int len = 0;
        for (int c = 0; c <= width_; ++c) {
            if (c < width_ && is_bus(r, c)) {
                ++len;
            } else {
                if (len >= 2) ++runs;
                len = 0;
            }
        }
    }
    return std::max(1, runs);
}

std::map<std::string, std::vector<std::pair<int, int>>> Qcb::extern_slot_footprints() const {
    std::map<std::string, std::vector<std::pair<int, int>>> out;
    for (const auto& s : segments_)
        if (s.kind == PatchType::Extern) out[s.extern_type].push_back({s.width, s.height});
    return out;
}

std::string Qcb::ascii() const {
    std::ostringstream os;
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            char g = glyph(at(r, c));
            if (g == 'B' && pending_io_.count({r, c})) g = 'b';
            os << g;
        }
        os << '\n';
    }
    return os.str();
}

Qcb Qcb::from_ascii(const std::vector<std::string>& rows, int io_count) {
    if (rows.empty()) throw AllocationError("empty board description");
    Qcb q(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
    for (int r = 0; r < q.height(); ++r) {
        if (static_cast<int>(rows[r].size()) != q.width())
            throw AllocationError("ragged board description");
        for (int c = 0; c < q.width(); ++c) {
            switch (rows[r][c]) {
                case '.': q.set(r, c, PatchType::Unallocated); break;
                case 'R': q.set(r, c, PatchType::Register); break;
                case 'B': q.set(r, c, PatchType::Route); break;
                case 'L': q.set(r, c, PatchType::LocalRoute); break;
                case 'E': q.set(r, c, PatchType::Extern); break;
                case 'I': q.set(r, c, PatchType::IO); break;
                default: throw AllocationError("unknown glyph in board description");
            }
        }
    }
    // Synthesize register segments from maximal horizontal runs so mapping
    // passes can work with hand-built boards.
    for (int r = 0; r < q.height(); ++r) {
        for (int c = 0; c < q.width();) {
            if (q.at(r, c) == PatchType::Register) {
                int e = c;
                while (e < q.width() && q.at(r, e) == PatchType::Register) ++e;
                q.add_segment({-1, r, c, e - c, 1, PatchType::Register, ""});
                c = e;
            } else {
                ++c;
            }
        }
    }
    q.io_count_ = io_count;
    if (io_count > 0)
        q.add_segment({-1, q.height() - 1, 0, io_count, 1, PatchType::IO, ""});
    return q;
}

// --- placement rules ---------------------------------------------------------

namespace {

struct Claim {
    std::vector<Coord> element;  // register / extern / io cells
    std::vector<Coord> routes;   // supporting route cells
    int rule = 0;
};

// Cells of a horizontal run.
std::vector<Coord> row_cells(int r, int c0, int c1) {
    std::vector<Coord> v;
    for (int c = c0; c <= c1; ++c) v.push_back({r, c});
    return v;
}

}  // namespace

struct Placer {
    Qcb& q;

    bool free_run(int r, int c0, int c1) const {
        if (c0 > c1) return false;
        for (int c = c0; c <= c1; ++c)
            if (!q.free_cell(r, c)) return false;
        return true;
    }

    // Longest prefix length (up to `need`) where both rows are free.
    int paired_run(int reg_row, int route_row, int c, int need) const {
        int e = 0;
        while (e < need && q.free_cell(reg_row, c + e) && q.free_cell(route_row, c + e)) ++e;
        return e;
    }

    bool claim_adjacent_to_bus(const std::vector<Coord>& cells) const {
        for (const auto& p : cells)
            if (q.adjacent_to_bus(p.row, p.col)) return true;
        return false;
    }

    // Straight route connector at a fixed column, stepping by `dir`, claiming
    // free cells until one touches the bus. Empty result means no connection.
    std::optional<std::vector<Coord>> connector(int start_row, int col, int dir) const {
        std::vector<Coord> cells;
        for (int r = start_row; r >= 0 && r < q.height(); r += dir) {
            if (!q.free_cell(r, col)) {
                // Running into the bus itself also connects.
                if (q.is_bus(r, col) && !cells.empty()) return cells;
                return std::nullopt;
            }
            cells.push_back({r, col});
            if (q.adjacent_to_bus(r, col)) return cells;
        }
        return std::nullopt;
    }

    void commit(const Claim& claim, PatchType element_kind, const std::string& extern_type) {
        for (const auto& p : claim.routes) q.set(p.row, p.col, PatchType::Route);
        for (const auto& p : claim.element) q.set(p.row, p.col, element_kind);
        if (!claim.element.empty()) {
            int r0 = claim.element.front().row;
            int c0 = claim.element.front().col;
            int c1 = claim.element.back().col;
            int r1 = claim.element.back().row;
            q.add_segment({-1, r0, c0, c1 - c0 + 1, r1 - r0 + 1, element_kind, extern_type});
        }
        if (!claim.routes.empty()) {
            // Route bookkeeping: record each claimed route cell run as a segment.
            std::vector<Coord> cells = claim.routes;
            std::sort(cells.begin(), cells.end());
            for (size_t i = 0; i < cells.size();) {
                size_t j = i + 1;
                while (j < cells.size() && cells[j].row == cells[i].row &&
                       cells[j].col == cells[j - 1].col + 1)
                    ++j;
                q.add_segment({-1, cells[i].row, cells[i].col,
                               static_cast<int>(j - i), 1, PatchType::Route, ""});
                i = j;
            }
        }
        q.confirm_pending_if_touched();
    }

    // -- register rules, tried in order -----------------------------------

    std::optional<Claim> reg_rule1(int len) const {
        if (!q.free_cell(0, 0)) return std::nullopt;
        int e = paired_run(0, 1, 0, len);
        if (e < 1) return std::nullopt;
        Claim cl{row_cells(0, 0, e - 1), row_cells(1, 0, e - 1), 1};
        if (!q.bus_empty() && !claim_adjacent_to_bus(cl.routes)) return std::nullopt;
        return cl;
    }

    // Top row: register plus route row beneath; if the route row does not
    // already touch the bus, drop a route column from the patch left of the
    // register down to it.
    std::optional<Claim> reg_rule2(int len, int c) const {
        int e = paired_run(0, 1, c, len);
        if (e < 1) return std::nullopt;
        Claim cl{row_cells(0, c, c + e - 1), row_cells(1, c, c + e - 1), 2};
        if (claim_adjacent_to_bus(cl.routes)) return cl;
        if (c == 0) return std::nullopt;
        auto conn = connector(1, c - 1, +1);
        if (!conn) return std::nullopt;
        cl.routes.insert(cl.routes.end(), conn->begin(), conn->end());
        return cl;
    }

    // Bus directly above every register patch; leave a route at the left end
    // when it can join the bus.
    std::optional<Claim> reg_rule3(int len, int r, int c) const {
        if (r < 1) return std::nullopt;
        int route_col = (c == 0) ? 0 : c - 1;
        int reg_start = route_col + 1;
        bool claim_route = false;
        if (q.free_cell(r, route_col) && q.adjacent_to_bus(r, route_col))
            claim_route = true;
        else if (q.free_cell(r, route_col))
            claim_route = false;  // register keeps its bus contact from above
        else if (!q.is_bus(r, route_col))
            return std::nullopt;
        int e = 0;
        while (e < len && q.free_cell(r, reg_start + e) && q.is_bus(r - 1, reg_start + e)) ++e;
        if (e < 1) return std::nullopt;
        Claim cl{row_cells(r, reg_start, reg_start + e - 1), {}, 3};
        if (claim_route) cl.routes.push_back({r, route_col});
        return cl;
    }

    // Route to the left of and below the register; the claimed route L must
    // touch the existing bus at its top left.
    std::optional<Claim> reg_rule4(int len, int r, int c) const {
        if (r + 1 >= q.height()) return std::nullopt;
        int route_col = (c == 0) ? 0 : c - 1;
        int reg_start = route_col + 1;
        if (!q.free_cell(r, route_col) || !q.free_cell(r + 1, route_col)) return std::nullopt;
        int e = paired_run(r, r + 1, reg_start, len);
        if (e < 1) return std::nullopt;
        Claim cl{row_cells(r, reg_start, reg_start + e - 1),
                 row_cells(r + 1, route_col, reg_start + e - 1), 4};
        cl.routes.push_back({r, route_col});
        if (!claim_adjacent_to_bus(cl.routes)) return std::nullopt;
        return cl;
    }

    // Register plus route row beneath, connected up (rule 5) or down (rule 6)
    // the left hand side.
    std::optional<Claim> reg_rule56(int len, int r, int c, int dir) const {
        if (r + 1 >= q.height()) return std::nullopt;
        int e = paired_run(r, r + 1, c, len);
        if (e < 1) return std::nullopt;
        Claim cl{row_cells(r, c, c + e - 1), row_cells(r + 1, c, c + e - 1), dir < 0 ? 5 : 6};
        if (claim_adjacent_to_bus(cl.routes)) return cl;
        if (c == 0) return std::nullopt;
        if (!q.free_cell(r + 1, c - 1)) return std::nullopt;
        std::vector<Coord> conn{{r + 1, c - 1}};
        if (!q.adjacent_to_bus(r + 1, c - 1)) {
            auto more = connector(r + 1 + dir, c - 1, dir);
            if (!more) return std::nullopt;
            conn.insert(conn.end(), more->begin(), more->end());
        }
        cl.routes.insert(cl.routes.end(), conn.begin(), conn.end());
        return cl;
    }

    PlacementResult place_register(int length) {
        if (length < 1) throw AllocationError("register length must be positive");
        for (int rule = 1; rule <= 6; ++rule) {
            for (int r = 0; r < q.height(); ++r) {
                for (int c = 0; c < q.width(); ++c) {
                    std::optional<Claim> cl;
                    switch (rule) {
                        case 1:
                            if (r == 0 && c == 0) cl = reg_rule1(length);
                            break;
                        case 2:
                            if (r == 0) cl = reg_rule2(length, c);
                            break;
                        case 3: cl = reg_rule3(length, r, c); break;
                        case 4: cl = reg_rule4(length, r, c); break;
                        case 5: cl = reg_rule56(length, r, c, -1); break;
                        case 6: cl = reg_rule56(length, r, c, +1); break;
                    }
                    if (cl) {
                        commit(*cl, PatchType::Register, "");
                        for (auto it = q.segments_.rbegin(); it != q.segments_.rend(); ++it)
                            if (it->kind == PatchType::Register) return {*it, cl->rule};
                    }
                }
                if (rule == 1) break;  // corner rule has a single position
            }
        }
        throw AllocationError("no-legal-placement: register");
    }

    // -- extern rules -------------------------------------------------------

    bool rect_free(int r, int c, int w, int h) const {
        if (r + h > q.height() || c + w > q.width()) return false;
        for (int rr = r; rr < r + h; ++rr)
            for (int cc = c; cc < c + w; ++cc)
                if (!q.free_cell(rr, cc)) return false;
        return true;
    }

    // Maximal free run in `row` through [c0, c1]; nullopt if any core cell is
    // taken.
    std::optional<std::pair<int, int>> route_run(int row, int c0, int c1) const {
        if (row >= q.height()) return std::nullopt;
        for (int c = c0; c <= c1; ++c)
            if (!q.free_cell(row, c)) return std::nullopt;
        int lo = c0, hi = c1;
        while (q.free_cell(row, lo - 1)) --lo;
        while (q.free_cell(row, hi + 1)) ++hi;
        return std::make_pair(lo, hi);
    }

    std::optional<Claim> ext_rule(int rule, const ir::ExternTemplate& t, int r, int c) {
        const int w = t.width, h = t.height;
        const int rr = r + h;  // route row under the extern

        auto base = [&](std::optional<std::pair<int, int>> run) -> std::optional<Claim> {
            if (!run) return std::nullopt;
            Claim cl;
            cl.rule = rule;
            for (int i = r; i < r + h; ++i)
                for (int j = c; j < c + w; ++j) cl.element.push_back({i, j});
            auto cells = row_cells(rr, run->first, run->second);
            cl.routes.insert(cl.routes.end(), cells.begin(), cells.end());
            return cl;
        };

        switch (rule) {
            case 1: {  // top left corner
                if (r != 0 || c != 0 || !rect_free(r, c, w, h)) return std::nullopt;
                auto cl = base(route_run(rr, c, c + w - 1));
                if (!cl) return std::nullopt;
                if (!q.bus_empty() && !claim_adjacent_to_bus(cl->routes)) return std::nullopt;
                return cl;
            }
            case 2: {  // already routed from below
                if (!rect_free(r, c, w, h)) return std::nullopt;
                for (int j = c; j < c + w; ++j)
                    if (!q.is_bus(rr, j)) return std::nullopt;
                Claim cl;
                cl.rule = 2;
                for (int i = r; i < r + h; ++i)
                    for (int j = c; j < c + w; ++j) cl.element.push_back({i, j});
                return cl;
            }
            case 3: {  // placing the route below connects to the bus
                if (!rect_free(r, c, w, h)) return std::nullopt;
                auto cl = base(route_run(rr, c, c + w - 1));
                if (!cl || !claim_adjacent_to_bus(cl->routes)) return std::nullopt;
                return cl;
            }
            case 4: {  // top row; connect downwards from the run's left end
                if (r != 0 || !rect_free(r, c, w, h)) return std::nullopt;
                auto run = route_run(rr, c, c + w - 1);
                auto cl = base(run);
                if (!cl) return std::nullopt;
                auto conn = connector(rr + 1, run->first, +1);
                if (!conn) return std::nullopt;
                cl->routes.insert(cl->routes.end(), conn->begin(), conn->end());
                return cl;
            }
            case 5: {  // top row; connect upwards left of the extern
                if (r != 0 || c < 1 || !rect_free(r, c, w, h)) return std::nullopt;
                auto run = route_run(rr, c, c + w - 1);
                auto cl = base(run);
                if (!cl || run->first > c - 1) return std::nullopt;
                auto conn = connector(rr - 1, c - 1, -1);
                if (!conn) return std::nullopt;
                cl->routes.insert(cl->routes.end(), conn->begin(), conn->end());
                return cl;
            }
            case 6:    // up the right hand side
            case 7: {  // up the left hand side
                int col = (rule == 6) ? c + w : c - 1;
                if (col < 0 || col >= q.width() || !rect_free(r, c, w, h)) return std::nullopt;
                auto run = route_run(rr, c, c + w - 1);
                auto cl = base(run);
                if (!cl) return std::nullopt;
                if (run->first > col || run->second < col) return std::nullopt;
                if (rr - 1 < 0) return std::nullopt;
                auto conn = connector(rr - 1, col, -1);
                if (!conn) return std::nullopt;
                cl->routes.insert(cl->routes.end(), conn->begin(), conn->end());
                return cl;
            }
            case 8: {  // down from the left hand side
                if (c < 1 || !rect_free(r, c, w, h)) return std::nullopt;
                auto run = route_run(rr, c, c + w - 1);
                auto cl = base(run);
                if (!cl) return std::nullopt;
                if (run->first > c - 1) return std::nullopt;
                auto conn = connector(rr + 1, c - 1, +1);
                if (!conn) return std::nullopt;
                cl->routes.insert(cl->routes.end(), conn->begin(), conn->end());
                return cl;
            }
        }
        return std::nullopt;
    }

    PlacementResult place_extern(const ir::ExternTemplate& t) {
        if (t.width > q.width() || t.height + 1 > q.height())
            throw AllocationError("no-legal-placement: extern " + t.name +
                                  " exceeds board bounds");
        for (int rule = 1; rule <= 8; ++rule) {
            for (int r = 0; r + t.height <= q.height(); ++r) {
                for (int c = 0; c + t.width <= q.width(); ++c) {
                    auto cl = ext_rule(rule, t, r, c);
                    if (cl) {
                        commit(*cl, PatchType::Extern, t.name);
                        for (auto it = q.segments_.rbegin(); it != q.segments_.rend(); ++it)
                            if (it->kind == PatchType::Extern) return {*it, cl->rule};
                    }
                }
                if (rule == 1) break;
            }
        }
        throw AllocationError("no-legal-placement: extern " + t.name);
    }

    // -- IO -------------------------------------------------------------------

    std::optional<Segment> place_io(int count) {
        if (count == 0) return std::nullopt;
        if (count > q.width()) throw AllocationError("io wider than board");
        int bottom = q.height() - 1;
        for (int c = 0; c < count; ++c)
            if (!q.free_cell(bottom, c))
                throw AllocationError("bottom-row-occupied");
        for (int c = 0; c < count; ++c) q.set(bottom, c, PatchType::IO);
        Segment seg = q.add_segment({-1, bottom, 0, count, 1, PatchType::IO, ""});
        q.io_count_ = count;

        // Route above the IO; every patch above must end up a routing patch.
        for (int c = 0; c < count; ++c) {
            if (q.free_cell(bottom - 1, c)) {
                q.set(bottom - 1, c, PatchType::Route);
                q.pending_io_.insert({bottom - 1, c});
            } else if (q.at(bottom - 1, c) != PatchType::Route) {
                throw AllocationError("io route row blocked");
            }
        }
        // Hook to the right of the IO, joined to the row above.
        if (q.free_cell(bottom, count)) {
            q.set(bottom, count, PatchType::Route);
            q.pending_io_.insert({bottom, count});
            if (q.free_cell(bottom - 1, count)) {
                q.set(bottom - 1, count, PatchType::Route);
                q.pending_io_.insert({bottom - 1, count});
            }
        }
        q.confirm_pending_if_touched();
        return seg;
    }

    void join_io() {
        if (q.pending_io_.empty()) return;
        q.confirm_pending_if_touched();
        if (q.pending_io_.empty()) return;
        // Climb the left edge from above the IO route row until we reach the
        // bus: the column ends at a register's left route, an extern's bottom
        // route, or the initial placement. Only cells ahead of the climb
        // count as connections.
        for (int r = q.height() - 3; r >= 0; --r) {
            if (q.is_bus(r, 0)) break;
            if (!q.free_cell(r, 0))
                throw AllocationError("join-impossible: left edge blocked");
            q.set(r, 0, PatchType::Route);
            q.add_segment({-1, r, 0, 1, 1, PatchType::Route, ""});
            if (q.is_bus(r - 1, 0) || q.is_bus(r, 1)) break;
        }
        q.confirm_pending_if_touched();
        if (!q.pending_io_.empty())
            throw AllocationError("join-impossible: no connection found");
    }
};

PlacementResult Qcb::place_register(int length) { return Placer{*this}.place_register(length); }

PlacementResult Qcb::place_extern(const ir::ExternTemplate& tmpl) {
    return Placer{*this}.place_extern(tmpl);
}

std::optional<Segment> Qcb::place_io(int count) { return Placer{*this}.place_io(count); }

void Qcb::join_io() { Placer{*this}.join_io(); }

// --- pipeline ---------------------------------------------------------------

namespace {

std::vector<ir::ExternTemplate> required_externs(const ir::CircuitDag& dag) {
    std::vector<ir::ExternTemplate> out;
    for (const auto& type : dag.used_extern_types()) {
        auto it = dag.extern_templates.find(type);
        if (it == dag.extern_templates.end())
            throw AllocationError("allocation-failure: extern type " + type + " undeclared");
        out.push_back(it->second);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(b.width, b.height, b.name) < std::tie(a.width, a.height, a.name);
    });
    return out;
}

}  // namespace

Qcb initial_placement(const ir::CircuitDag& dag, int width, int height) {
    Qcb board(width, height);
    auto externs = required_externs(dag);

    auto wrap = [](const std::string& what, auto&& fn) {
        try {
            fn();
        } catch (const AllocationError& e) {
            throw AllocationError("allocation-failure: " + what + " (" + e.what() + ")");
        }
    };

    size_t next_extern = 0;
    if (!externs.empty()) {
        wrap("extern " + externs[0].name, [&] { board.place_extern(externs[0]); });
        next_extern = 1;
    }
    int io = static_cast<int>(dag.io_symbols.size());
    if (io > 0) wrap("io", [&] { board.place_io(io); });
    for (; next_extern < externs.size(); ++next_extern)
        wrap("extern " + externs[next_extern].name,
             [&] { board.place_extern(externs[next_extern]); });

    int needed = static_cast<int>(dag.storage_symbols().size());
    int placed = board.count(PatchType::Register);
    while (placed < needed) {
        int before = placed;
        wrap("register", [&] { board.place_register(needed - placed); });
        placed = board.count(PatchType::Register);
        if (placed == before) throw AllocationError("allocation-failure: register");
    }
    if (io > 0 && !board.io_joined()) wrap("io join", [&] { board.join_io(); });
    return board;
}

namespace {

// Splitting the largest register segment into a route lane, then restoring
// the register budget elsewhere. Returns false when the budget cannot be
// restored.
bool try_bus_split(Qcb& board, int required_registers) {
    const Segment* largest = nullptr;
    for (const auto& s : board.segments())
        if (s.kind == PatchType::Register)
            if (!largest || s.area() > largest->area()) largest = &s;
    if (!largest) return false;
    Qcb trial = board;
    for (int c = largest->col; c < largest->col + largest->width; ++c)
        trial.set(largest->row, c, PatchType::Route);
    trial.retype_segment(largest->id, PatchType::Route);
    int placed = trial.count(PatchType::Register);
    while (placed < required_registers) {
        try {
            trial.place_register(required_registers - placed);
        } catch (const AllocationError&) {
            return false;
        }
        placed = trial.count(PatchType::Register);
    }
    board = std::move(trial);
    return true;
}

}  // namespace

Qcb optimize_placement(const Qcb& board, const ir::CircuitDag& dag,
                       const CycleEstimator& estimate) {
    Qcb out = board;
    int required_registers = static_cast<int>(dag.storage_symbols().size());
    auto types = dag.used_extern_types();

    while (true) {
        int channels = out.route_lane_count();
        auto slots = out.extern_slot_footprints();
        long long base = estimate(channels, slots);

        struct Candidate {
            long long gain;
            bool is_extern;
            int area;
            std::string type;
        };
        std::vector<Candidate> candidates;
        for (const auto& type : types) {
            auto it = dag.extern_templates.find(type);
            if (it == dag.extern_templates.end()) continue;
            auto with = slots;
            with[type].push_back({it->second.width, it->second.height});
            candidates.push_back({base - estimate(channels, with), true,
                                  it->second.width * it->second.height, type});
        }
        candidates.push_back({base - estimate(channels + 1, slots), false, 0, ""});

        std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            return std::tie(b.gain, b.is_extern, b.area, b.type) <
                   std::tie(a.gain, a.is_extern, a.area, a.type);
        });

        bool committed = false;
        for (const auto& cand : candidates) {
            if (cand.gain <= 0) break;
            if (cand.is_extern) {
                Qcb trial = out;
                try {
                    trial.place_extern(dag.extern_templates.at(cand.type));
                } catch (const AllocationError&) {
                    continue;
                }
                out = std::move(trial);
                committed = true;
            } else {
                if (!try_bus_split(out, required_registers)) continue;
                committed = true;
            }
            break;
        }
        if (!committed) break;
    }

    // Exhaust the remaining space with registers, then mark leftovers as
    // local routes.
    while (true) {
        try {
            out.place_register(out.width());
        } catch (const AllocationError&) {
            break;
        }
    }
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            if (out.at(r, c) == PatchType::Unallocated) out.set(r, c, PatchType::LocalRoute);
    return out;
}

std::vector<std::string> validate_qcb(const Qcb& board, const ir::CircuitDag& dag) {
    std::vector<std::string> violations;
    auto flag = [&violations](const std::string& v) { violations.push_back(v); };

    if (!board.io_joined()) flag("io-not-joined");
    int components = board.bus_components();
    if (components > 1) flag("bus-disconnected");

    for (int r = 0; r < board.height(); ++r) {
        for (int c = 0; c < board.width(); ++c) {
            PatchType t = board.at(r, c);
            if (t == PatchType::Register) {
                if (!board.is_bus(r - 1, c) && !board.is_bus(r + 1, c))
                    flag("register-not-bus-adjacent at (" + std::to_string(r) + "," +
                         std::to_string(c) + ")");
            } else if (t == PatchType::IO) {
                if (r != board.height() - 1)
                    flag("io-not-on-bottom-row at (" + std::to_string(r) + "," +
                         std::to_string(c) + ")");
                else if (!board.is_bus(r - 1, c))
                    flag("io-not-connected at (" + std::to_string(r) + "," +
                         std::to_string(c) + ")");
            }
        }
    }

    for (const auto& seg : board.segments_of(PatchType::Extern)) {
        int below = seg.row + seg.height;
        for (int c = seg.col; c < seg.col + seg.width; ++c)
            if (!board.is_bus(below, c)) {
                flag("extern-bus-gap under " + seg.extern_type);
                break;
            }
    }

    int registers = board.count(PatchType::Register);
    int needed = static_cast<int>(dag.storage_symbols().size());
    if (registers < needed)
        flag("insufficient-registers: " + std::to_string(registers) + " < " +
             std::to_string(needed));
    if (board.io_count() != static_cast<int>(dag.io_symbols.size()))
        flag("io-count-mismatch");

    auto slots = board.extern_slot_footprints();
    for (const auto& type : dag.used_extern_types()) {
        auto t = dag.extern_templates.find(type);
        bool satisfied = false;
        if (t != dag.extern_templates.end()) {
            for (const auto& [w, h] : slots[type])
                if (w >= t->second.width && h >= t->second.height) satisfied = true;
        }
        if (!satisfied) flag("missing-extern-segment: " + type);
    }
    return violations;
}

}  // namespace lsc::qcb
