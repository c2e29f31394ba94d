#include "lsc/ir.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "lsc/errors.hpp"

namespace lsc::ir {

std::string RegisterSymbol::str() const {
    return name + "[" + std::to_string(index) + "]";
}

RegisterSymbol parse_symbol(const std::string& text) {
    auto open = text.find('[');
    if (open == std::string::npos) return {text, 0};
    if (text.back() != ']' || open + 1 >= text.size() - 1 + 1)
        throw ParseError("malformed register reference: " + text);
    std::string idx = text.substr(open + 1, text.size() - open - 2);
    if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("malformed register index: " + text);
    return {text.substr(0, open), static_cast<std::uint32_t>(std::stoul(idx))};
}

const ExternOpSig* ExternTemplate::find_op(const std::string& op_name) const {
    for (const auto& op : ops)
        if (op.name == op_name) return &op;
    return nullptr;
}

const ExternOpSig* ExternTemplate::production_op() const {
    for (const auto& op : ops)
        if (op.inputs == 0 && op.outputs > 0) return &op;
    return ops.empty() ? nullptr : &ops.front();
}

int CircuitDag::add_node(GateNode node) {
    nodes.push_back(std::move(node));
    return static_cast<int>(nodes.size()) - 1;
}

void CircuitDag::rebuild_edges() {
    edges.clear();
    std::map<RegisterSymbol, int> last_user;
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
        for (const auto& sym : nodes[i].operands) {
            auto it = last_user.find(sym);
            if (it != last_user.end() && it->second != i &&
                seen.insert({it->second, i}).second) {
                edges.emplace_back(it->second, i);
            }
            last_user[sym] = i;
        }
    }
    std::sort(edges.begin(), edges.end());
}

bool CircuitDag::is_acyclic_with_barriers() const {
    // Kahn over edges plus barrier edges.
    int n = static_cast<int>(nodes.size());
    std::vector<std::vector<int>> succ(n);
    std::vector<int> indeg(n, 0);
    auto add = [&](int a, int b) {
        succ[a].push_back(b);
        ++indeg[b];
    };
    for (auto [a, b] : edges) add(a, b);
    for (const auto& bar : barriers) add(bar.src, bar.dst);
    std::deque<int> q;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) q.push_back(i);
    int visited = 0;
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        ++visited;
        for (int s : succ[v])
            if (--indeg[s] == 0) q.push_back(s);
    }
    return visited == n;
}

std::vector<RegisterSymbol> CircuitDag::storage_symbols() const {
    std::set<RegisterSymbol> io(io_symbols.begin(), io_symbols.end());
    std::vector<RegisterSymbol> out;
    for (const auto& s : symbols)
        if (!io.count(s)) out.push_back(s);
    return out;
}

std::set<std::string> CircuitDag::used_extern_types() const {
    std::set<std::string> types;
    for (const auto& node : nodes)
        if (node.extern_dep) types.insert(node.extern_dep->type);
    return types;
}

std::vector<int> CircuitDag::consumers_of_instance(int instance) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (nodes[i].extern_dep && nodes[i].extern_dep->instance == instance)
            out.push_back(i);
    return out;
}

std::vector<std::vector<int>> CircuitDag::successors() const {
    std::vector<std::vector<int>> succ(nodes.size());
    for (auto [a, b] : edges) succ[a].push_back(b);
    return succ;
}

std::vector<std::vector<int>> CircuitDag::predecessors() const {
    std::vector<std::vector<int>> pred(nodes.size());
    for (auto [a, b] : edges) pred[b].push_back(a);
    return pred;
}

long long CircuitDag::critical_path_length() const {
    int n = static_cast<int>(nodes.size());
    std::vector<long long> est(n, 0);
    long long makespan = 0;
    for (auto [a, b] : edges)
        est[b] = std::max(est[b], est[a] + nodes[a].cycles);
    for (int i = 0; i < n; ++i)
        makespan = std::max(makespan, est[i] + nodes[i].cycles);
    return makespan;
}

ExternTemplate default_extern_template(const std::string& type) {
    ExternTemplate t;
    t.name = type;
    if (type == "CCZ") {
        t.width = 3;
        t.height = 2;
        t.ops.push_back({"call", 0, 3, 10});
    } else {
        t.width = 2;
        t.height = 2;
        t.ops.push_back({"call", 0, 1, 8});
    }
    return t;
}

// --- expand_macros ----------------------------------------------------------

namespace {

const MacroDef* find_macro(const std::vector<MacroDef>& defs, const std::string& name) {
    for (const auto& d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

struct Expander {
    const std::vector<MacroDef>& defs;        // macros to expand in this pass
    const std::vector<MacroDef>& known;       // every macro the circuit declares
    CircuitDag& out;
    const DeviceSpec device;  // default table: macro bodies are native/extern/macro calls
    int fresh_counter = 0;
    std::vector<std::string> stack;  // recursion detection

    void emit_gate(const std::string& op, std::vector<RegisterSymbol> args,
                   const std::map<std::string, double>& params);
    void expand_call(const MacroDef& def, const std::vector<RegisterSymbol>& actuals,
                     int expansion_id);
};

void Expander::expand_call(const MacroDef& def, const std::vector<RegisterSymbol>& actuals,
                           int expansion_id) {
    if (actuals.size() != def.formals.size())
        throw ParseError("arity-mismatch expanding macro " + def.name);
    for (const auto& s : stack)
        if (s == def.name) throw ParseError("recursive-macro: " + def.name);
    stack.push_back(def.name);

    std::map<std::string, RegisterSymbol> formal_to_actual;
    for (size_t i = 0; i < def.formals.size(); ++i)
        formal_to_actual[def.formals[i]] = actuals[i];
    std::set<std::string> local_names;
    for (const auto& [lname, lsize] : def.locals) local_names.insert(lname);

    auto resolve = [&](const RegisterSymbol& sym) -> RegisterSymbol {
        if (local_names.count(sym.name))
            return {sym.name + "#" + std::to_string(expansion_id), sym.index};
        auto it = formal_to_actual.find(sym.name);
        if (it == formal_to_actual.end())
            throw ParseError("macro " + def.name + " references unknown symbol " + sym.name);
        if (sym.index != 0)
            throw ParseError("macro formals are single registers: " + sym.str());
        return it->second;
    };

    for (const auto& g : def.body) {
        std::vector<RegisterSymbol> args;
        args.reserve(g.args.size());
        for (const auto& a : g.args) args.push_back(resolve(a));
        emit_gate(g.op, std::move(args), g.params);
    }
    stack.pop_back();
}

void Expander::emit_gate(const std::string& op, std::vector<RegisterSymbol> args,
                         const std::map<std::string, double>& params) {
    (void)params;
    if (const MacroDef* m = find_macro(defs, op)) {
        expand_call(*m, args, fresh_counter++);
        return;
    }

    // Extern operation invocation inside a macro body.
    auto dot = op.find('.');
    if (dot != std::string::npos) {
        std::string type = op.substr(0, dot);
        std::string opname = op.substr(dot + 1);
        auto it = out.extern_templates.find(type);
        if (it == out.extern_templates.end())
            throw ParseError("unknown extern '" + type + "' in macro body");
        const ExternOpSig* sig = it->second.find_op(opname);
        if (!sig) throw ParseError("unknown extern op '" + op + "' in macro body");
        GateNode node;
        node.kind = NodeKind::ExternOp;
        node.opcode = op;
        node.operands = std::move(args);
        node.cycles = sig->cycles;
        node.nonlocal = true;
        node.boundary.assign(node.operands.size(), Boundary::Either);
        ExternRef ref;
        ref.type = type;
        ref.instance = static_cast<int>(out.instances.size());
        out.instances.push_back({type, "#auto" + std::to_string(ref.instance),
                                 static_cast<int>(out.nodes.size())});
        ref.op = opname;
        node.extern_dep = ref;
        out.add_node(std::move(node));
        return;
    }

    if (const GateInfo* info = device.find_gate(op)) {
        GateNode node;
        node.opcode = op;
        node.operands = std::move(args);
        node.cycles = info->cycles;
        node.nonlocal = info->nonlocal;
        node.boundary.assign(node.operands.size(), info->rest);
        if (!node.boundary.empty()) node.boundary[0] = info->first;
        if (!info->extern_type.empty()) {
            if (!out.extern_templates.count(info->extern_type))
                out.extern_templates[info->extern_type] =
                    default_extern_template(info->extern_type);
            ExternRef ref;
            ref.type = info->extern_type;
            ref.instance = static_cast<int>(out.instances.size());
            out.instances.push_back({ref.type, "#auto" + std::to_string(ref.instance),
                                     static_cast<int>(out.nodes.size())});
            node.extern_dep = ref;
        }
        out.add_node(std::move(node));
        return;
    }

    // A macro the circuit declares but this pass leaves unexpanded.
    if (find_macro(known, op)) {
        GateNode node;
        node.kind = NodeKind::MacroCall;
        node.opcode = op;
        node.operands = std::move(args);
        out.add_node(std::move(node));
        return;
    }
    throw ParseError("unknown-opcode in macro body: " + op);
}

}  // namespace

CircuitDag expand_macros(const CircuitDag& dag, const std::vector<MacroDef>& defs) {
    bool any_macro = false;
    for (const auto& n : dag.nodes)
        if (n.kind == NodeKind::MacroCall) any_macro = true;
    if (!any_macro) return dag;

    CircuitDag out;
    out.name = dag.name;
    out.symbols = dag.symbols;
    out.io_symbols = dag.io_symbols;
    out.io_dirs = dag.io_dirs;
    out.extern_templates = dag.extern_templates;
    out.macros = dag.macros;

    Expander ex{defs, dag.macros, out};
    // Local symbols from earlier expansions must stay distinct.
    for (const auto& n : dag.nodes)
        for (const auto& s : n.operands)
            if (auto pos = s.name.find('#'); pos != std::string::npos)
                ex.fresh_counter = std::max(
                    ex.fresh_counter, std::atoi(s.name.c_str() + pos + 1) + 1);

    for (const auto& node : dag.nodes) {
        if (node.kind == NodeKind::MacroCall) {
            const MacroDef* def = find_macro(defs, node.opcode);
            if (!def) {
                if (!find_macro(dag.macros, node.opcode))
                    throw ParseError("unknown macro: " + node.opcode);
                out.add_node(node);  // deliberately left unexpanded this pass
                continue;
            }
            ex.expand_call(*def, node.operands, ex.fresh_counter++);
        } else {
            GateNode copy = node;
            if (copy.extern_dep) {
                // Re-register the instance in the new DAG, preserving labels.
                const ExternInstance& inst = dag.instances[copy.extern_dep->instance];
                int id = -1;
                for (int i = 0; i < static_cast<int>(out.instances.size()); ++i)
                    if (out.instances[i].label == inst.label && out.instances[i].type == inst.type)
                        id = i;
                if (id < 0) {
                    id = static_cast<int>(out.instances.size());
                    out.instances.push_back({inst.type, inst.label,
                                             static_cast<int>(out.nodes.size())});
                }
                copy.extern_dep->instance = id;
            }
            out.add_node(std::move(copy));
        }
    }
    // Collect symbols introduced by macro locals.
    std::set<RegisterSymbol> known(out.symbols.begin(), out.symbols.end());
    for (const auto& n : out.nodes)
        for (const auto& s : n.operands)
            if (known.insert(s).second) out.symbols.push_back(s);
    out.rebuild_edges();
    return out;
}

// --- attach_extern_barriers ---------------------------------------------------

CircuitDag attach_extern_barriers(const CircuitDag& dag, const std::map<std::string, int>& slots) {
    CircuitDag out = dag;
    out.barriers.clear();

    std::map<std::string, std::vector<int>> by_type;  // instances in first-use order
    for (int i = 0; i < static_cast<int>(out.instances.size()); ++i)
        by_type[out.instances[i].type].push_back(i);
    for (auto& [type, insts] : by_type)
        std::sort(insts.begin(), insts.end(), [&](int a, int b) {
            return out.instances[a].first_node < out.instances[b].first_node;
        });

    for (const auto& [type, insts] : by_type) {
        auto it = slots.find(type);
        int s = it == slots.end() ? 1 : it->second;
        if (s < 1) throw AllocationError("zero-slots for extern type " + type);
        for (size_t k = s; k < insts.size(); ++k) {
            int blocked = insts[k];
            int prior = insts[k - s];
            int dst = out.instances[blocked].first_node;
            for (int consumer : out.consumers_of_instance(prior)) {
                if (consumer < dst)
                    out.barriers.push_back({consumer, dst, blocked});
            }
        }
    }
    std::sort(out.barriers.begin(), out.barriers.end(), [](const BarrierEdge& a, const BarrierEdge& b) {
        return std::tie(a.src, a.dst, a.instance) < std::tie(b.src, b.dst, b.instance);
    });
    if (!out.is_acyclic_with_barriers())
        throw AllocationError("extern barriers introduced a cycle");
    return out;
}

// --- compute_slack -----------------------------------------------------------

CircuitDag compute_slack(const CircuitDag& dag) {
    CircuitDag out = dag;
    int n = static_cast<int>(out.nodes.size());
    std::vector<long long> est(n, 0);
    for (auto [a, b] : out.edges)
        est[b] = std::max(est[b], est[a] + out.nodes[a].cycles);
    long long makespan = 0;
    for (int i = 0; i < n; ++i)
        makespan = std::max(makespan, est[i] + out.nodes[i].cycles);
    std::vector<long long> lft(n, makespan);  // latest finish
    for (auto it = out.edges.rbegin(); it != out.edges.rend(); ++it)
        lft[it->first] = std::min(lft[it->first], lft[it->second] - out.nodes[it->second].cycles);
    for (int i = 0; i < n; ++i)
        out.nodes[i].slack = static_cast<int>(lft[i] - out.nodes[i].cycles - est[i]);
    return out;
}

}  // namespace lsc::ir
