#include "lsc/json_io.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lsc/errors.hpp"

namespace lsc::io {

using json = nlohmann::ordered_json;

namespace {

void check_fields(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ParseError(where + ": unknown field '" + key + "'");
}

json parse_text(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed JSON in " + what);
    return j;
}

}  // namespace

// --- parse_circuit -----------------------------------------------------------

namespace {

struct ParseCtx {
    const CircuitDoc& doc;
    const DeviceSpec& device;
    const synth::Provider& rz;
    ir::CircuitDag dag;
    std::map<std::string, std::uint32_t> reg_sizes;
    std::map<std::pair<std::string, std::string>, int> instance_by_label;  // (type,label)
    int fresh = 0;

    ir::RegisterSymbol resolve(const std::string& text) const {
        ir::RegisterSymbol sym = ir::parse_symbol(text);
        auto it = reg_sizes.find(sym.name);
        if (it == reg_sizes.end())
            throw ParseError("unknown register '" + sym.name + "'");
        if (sym.index >= it->second)
            throw ParseError("register index out of range: " + text);
        return sym;
    }

    int instance_for(const std::string& type, std::string label) {
        if (label.empty()) label = "#auto" + std::to_string(fresh++);
        auto key = std::make_pair(type, label);
        auto it = instance_by_label.find(key);
        if (it != instance_by_label.end()) return it->second;
        int id = static_cast<int>(dag.instances.size());
        dag.instances.push_back({type, label, static_cast<int>(dag.nodes.size())});
        instance_by_label[key] = id;
        return id;
    }

    void require_template(const std::string& type) {
        if (!dag.extern_templates.count(type))
            dag.extern_templates[type] = ir::default_extern_template(type);
    }

    void emit_native(const GateInfo& info, const std::string& op,
                     std::vector<ir::RegisterSymbol> operands, const std::string& label) {
        int n = static_cast<int>(operands.size());
        if (n < info.min_arity || (info.max_arity >= 0 && n > info.max_arity))
            throw ParseError("arity-mismatch for '" + op + "': got " + std::to_string(n));
        std::set<ir::RegisterSymbol> dedup(operands.begin(), operands.end());
        if (dedup.size() != operands.size())
            throw ParseError("duplicate operand in '" + op + "'");
        ir::GateNode node;
        node.opcode = op;
        node.operands = std::move(operands);
        node.cycles = info.cycles;
        node.nonlocal = info.nonlocal;
        node.boundary.assign(node.operands.size(), info.rest);
        if (!node.boundary.empty()) node.boundary[0] = info.first;
        if (!info.extern_type.empty()) {
            require_template(info.extern_type);
            ir::ExternRef ref;
            ref.type = info.extern_type;
            ref.instance = instance_for(info.extern_type, label);
            node.extern_dep = ref;
        }
        dag.add_node(std::move(node));
    }

    void emit(const GateCall& gate) {
        // Extern operation: "Type.op".
        auto dot = gate.op.find('.');
        if (dot != std::string::npos) {
            std::string type = gate.op.substr(0, dot);
            std::string opname = gate.op.substr(dot + 1);
            auto it = dag.extern_templates.find(type);
            if (it == dag.extern_templates.end())
                throw ParseError("unknown-opcode: extern '" + type + "' not declared");
            const ir::ExternOpSig* sig = it->second.find_op(opname);
            if (!sig)
                throw ParseError("unknown-opcode: extern op '" + gate.op + "'");
            if (static_cast<int>(gate.args.size()) != sig->inputs + sig->outputs)
                throw ParseError("arity-mismatch for '" + gate.op + "'");
            ir::GateNode node;
            node.kind = ir::NodeKind::ExternOp;
            node.opcode = gate.op;
            for (const auto& a : gate.args) node.operands.push_back(resolve(a));
            node.cycles = sig->cycles;
            node.nonlocal = true;
            node.boundary.assign(node.operands.size(), Boundary::Either);
            ir::ExternRef ref;
            ref.type = type;
            ref.instance = instance_for(type, gate.instance);
            ref.op = opname;
            node.extern_dep = ref;
            dag.add_node(std::move(node));
            return;
        }

        if (gate.op == "reset") {
            if (gate.instance.empty())
                throw ParseError("reset requires an extern instance reference");
            int id = -1;
            for (int i = 0; i < static_cast<int>(dag.instances.size()); ++i)
                if (dag.instances[i].label == gate.instance) id = i;
            if (id < 0)
                throw ParseError("reset references unknown instance '" + gate.instance + "'");
            ir::GateNode node;
            node.opcode = "reset";
            node.cycles = 0;
            node.is_reset = true;
            ir::ExternRef ref;
            ref.type = dag.instances[id].type;
            ref.instance = id;
            node.extern_dep = ref;
            dag.add_node(std::move(node));
            return;
        }

        if (gate.op == "rz") {
            if (gate.args.size() != 1) throw ParseError("arity-mismatch for 'rz'");
            auto theta_it = gate.params.find("theta");
            if (theta_it == gate.params.end())
                throw ParseError("rz requires a 'theta' parameter");
            double epsilon = 1e-10;
            if (auto it = gate.params.find("epsilon"); it != gate.params.end())
                epsilon = it->second;
            auto seq = synth::synthesize_rz(theta_it->second, epsilon, rz);
            for (const auto& op : seq)
                emit_native(device.gate(op), op, {resolve(gate.args[0])}, "");
            return;
        }

        // Macro call?
        for (const auto& m : doc.macros) {
            if (m.name != gate.op) continue;
            if (gate.args.size() != m.formals.size())
                throw ParseError("arity-mismatch calling macro '" + m.name + "'");
            ir::GateNode node;
            node.kind = ir::NodeKind::MacroCall;
            node.opcode = m.name;
            for (const auto& a : gate.args) node.operands.push_back(resolve(a));
            dag.add_node(std::move(node));
            return;
        }

        const GateInfo* info = device.find_gate(gate.op);
        if (!info) throw ParseError("unknown-opcode: '" + gate.op + "'");
        std::vector<ir::RegisterSymbol> operands;
        for (const auto& a : gate.args) operands.push_back(resolve(a));
        emit_native(*info, gate.op, std::move(operands), gate.instance);
    }
};

}  // namespace

ir::CircuitDag parse_circuit(const CircuitDoc& doc, const DeviceSpec& device,
                             const synth::Provider& rz_provider) {
    ParseCtx ctx{doc, device, rz_provider};
    ctx.dag.name = doc.name;

    for (const auto& reg : doc.registers) {
        if (reg.size == 0) throw ParseError("register '" + reg.name + "' has size 0");
        if (!ctx.reg_sizes.emplace(reg.name, reg.size).second)
            throw ParseError("duplicate-register-declaration: '" + reg.name + "'");
        for (std::uint32_t i = 0; i < reg.size; ++i)
            ctx.dag.symbols.push_back({reg.name, i});
    }
    for (const auto& entry : doc.io) {
        ctx.dag.io_symbols.push_back(ctx.resolve(entry.symbol));
        ctx.dag.io_dirs.push_back(entry.dir);
    }
    {
        std::set<ir::RegisterSymbol> dedup(ctx.dag.io_symbols.begin(), ctx.dag.io_symbols.end());
        if (dedup.size() != ctx.dag.io_symbols.size())
            throw ParseError("duplicate IO symbol");
    }
    for (const auto& tmpl : doc.externs) {
        if (tmpl.width < 1 || tmpl.height < 1)
            throw ParseError("extern '" + tmpl.name + "' footprint must be at least 1x1");
        for (const auto& op : tmpl.ops)
            if (op.inputs + op.outputs > tmpl.width)
                throw ParseError("extern '" + tmpl.name + "' op '" + op.name +
                                 "' IO arity exceeds its width");
        if (!ctx.dag.extern_templates.emplace(tmpl.name, tmpl).second)
            throw ParseError("duplicate extern declaration '" + tmpl.name + "'");
    }
    ctx.dag.macros = doc.macros;
    for (const auto& gate : doc.gates) ctx.emit(gate);
    ctx.dag.rebuild_edges();
    return ctx.dag;
}

// --- document JSON -------------------------------------------------------------

namespace {

ir::IoDir dir_from_string(const std::string& s) {
    if (s == "in") return ir::IoDir::In;
    if (s == "out") return ir::IoDir::Out;
    if (s == "inout") return ir::IoDir::InOut;
    throw ParseError("invalid io dir '" + s + "'");
}

std::string dir_to_string(ir::IoDir d) {
    switch (d) {
        case ir::IoDir::In: return "in";
        case ir::IoDir::Out: return "out";
        case ir::IoDir::InOut: return "inout";
    }
    return "inout";
}

GateCall gate_from_json(const json& g, const std::string& where) {
    check_fields(g, {"op", "args", "params", "instance"}, where);
    GateCall call;
    call.op = g.at("op").get<std::string>();
    if (g.contains("args"))
        for (const auto& a : g.at("args")) call.args.push_back(a.get<std::string>());
    if (g.contains("params"))
        for (const auto& [k, v] : g.at("params").items())
            call.params[k] = v.get<double>();
    if (g.contains("instance")) call.instance = g.at("instance").get<std::string>();
    return call;
}

json gate_to_json(const GateCall& call) {
    json g;
    g["op"] = call.op;
    g["args"] = call.args;
    if (!call.params.empty()) g["params"] = call.params;
    if (!call.instance.empty()) g["instance"] = call.instance;
    return g;
}

}  // namespace

CircuitDoc doc_from_json(const std::string& text) {
    json j = parse_text(text, "circuit document");
    check_fields(j, {"format_version", "name", "registers", "io", "macros", "externs", "gates"},
                 "circuit");
    CircuitDoc doc;
    if (j.contains("name")) doc.name = j.at("name").get<std::string>();
    for (const auto& r : j.value("registers", json::array())) {
        check_fields(r, {"name", "size"}, "register");
        doc.registers.push_back({r.at("name").get<std::string>(),
                                 r.value("size", std::uint32_t{1})});
    }
    for (const auto& e : j.value("io", json::array())) {
        if (e.is_string()) {
            doc.io.push_back({e.get<std::string>(), ir::IoDir::InOut});
        } else {
            check_fields(e, {"symbol", "dir"}, "io entry");
            doc.io.push_back({e.at("symbol").get<std::string>(),
                              dir_from_string(e.value("dir", std::string("inout")))});
        }
    }
    for (const auto& m : j.value("macros", json::array())) {
        check_fields(m, {"name", "params", "locals", "body"}, "macro");
        ir::MacroDef def;
        def.name = m.at("name").get<std::string>();
        for (const auto& p : m.value("params", json::array()))
            def.formals.push_back(p.get<std::string>());
        for (const auto& l : m.value("locals", json::array())) {
            check_fields(l, {"name", "size"}, "macro local");
            def.locals.push_back({l.at("name").get<std::string>(),
                                  l.value("size", std::uint32_t{1})});
        }
        for (const auto& g : m.value("body", json::array())) {
            GateCall call = gate_from_json(g, "macro body gate");
            ir::MacroDef::BodyGate bg;
            bg.op = call.op;
            for (const auto& a : call.args) bg.args.push_back(ir::parse_symbol(a));
            bg.params = call.params;
            def.body.push_back(std::move(bg));
        }
        doc.macros.push_back(std::move(def));
    }
    for (const auto& e : j.value("externs", json::array())) {
        check_fields(e, {"name", "width", "height", "resettable", "ops"}, "extern");
        ir::ExternTemplate t;
        t.name = e.at("name").get<std::string>();
        t.width = e.at("width").get<int>();
        t.height = e.at("height").get<int>();
        t.resettable = e.value("resettable", true);
        for (const auto& op : e.value("ops", json::array())) {
            check_fields(op, {"name", "inputs", "outputs", "cycles"}, "extern op");
            t.ops.push_back({op.at("name").get<std::string>(), op.value("inputs", 0),
                             op.value("outputs", 0), op.value("cycles", 1)});
        }
        doc.externs.push_back(std::move(t));
    }
    for (const auto& g : j.value("gates", json::array()))
        doc.gates.push_back(gate_from_json(g, "gate"));
    return doc;
}

std::string doc_to_json(const CircuitDoc& doc) {
    json j;
    j["format_version"] = 1;
    j["name"] = doc.name;
    j["registers"] = json::array();
    for (const auto& r : doc.registers)
        j["registers"].push_back({{"name", r.name}, {"size", r.size}});
    j["io"] = json::array();
    for (const auto& e : doc.io)
        j["io"].push_back({{"symbol", e.symbol}, {"dir", dir_to_string(e.dir)}});
    j["macros"] = json::array();
    for (const auto& m : doc.macros) {
        json mj;
        mj["name"] = m.name;
        mj["params"] = m.formals;
        mj["locals"] = json::array();
        for (const auto& [n, s] : m.locals)
            mj["locals"].push_back({{"name", n}, {"size", s}});
        mj["body"] = json::array();
        for (const auto& g : m.body) {
            GateCall call;
            call.op = g.op;
            for (const auto& a : g.args) call.args.push_back(a.str());
            call.params = g.params;
            mj["body"].push_back(gate_to_json(call));
        }
        j["macros"].push_back(std::move(mj));
    }
    j["externs"] = json::array();
    for (const auto& t : doc.externs) {
        json tj;
        tj["name"] = t.name;
        tj["width"] = t.width;
        tj["height"] = t.height;
        tj["resettable"] = t.resettable;
        tj["ops"] = json::array();
        for (const auto& op : t.ops)
            tj["ops"].push_back({{"name", op.name},
                                 {"inputs", op.inputs},
                                 {"outputs", op.outputs},
                                 {"cycles", op.cycles}});
        j["externs"].push_back(std::move(tj));
    }
    j["gates"] = json::array();
    for (const auto& g : doc.gates) j["gates"].push_back(gate_to_json(g));
    return j.dump(2) + "\n";
}

// --- device JSON ---------------------------------------------------------------

DeviceSpec device_from_json(const std::string& text) {
    json j = parse_text(text, "device document");
    check_fields(j, {"format_version", "width", "height", "code_distance",
                     "boundary_convention", "gate_costs"},
                 "device");
    DeviceSpec spec(j.at("width").get<int>(), j.at("height").get<int>(),
                    j.value("code_distance", 1));
    if (j.contains("boundary_convention")) {
        auto convention = j.at("boundary_convention").get<std::string>();
        if (convention == "x-top-bottom")
            spec.x_boundaries_vertical = true;
        else if (convention != "z-top-bottom")
            throw ParseError("unknown boundary_convention '" + convention + "'");
    }
    if (j.contains("gate_costs"))
        for (const auto& [op, cost] : j.at("gate_costs").items())
            spec.override_cost(op, cost.get<int>());
    return spec;
}

std::string device_to_json(const DeviceSpec& device) {
    json j;
    j["format_version"] = 1;
    j["width"] = device.width;
    j["height"] = device.height;
    j["code_distance"] = device.code_distance;
    j["boundary_convention"] =
        device.x_boundaries_vertical ? "x-top-bottom" : "z-top-bottom";
    json costs;
    for (const auto& [op, info] : device.gate_table()) costs[op] = info.cycles;
    j["gate_costs"] = std::move(costs);
    return j.dump(2) + "\n";
}

// --- artifacts -------------------------------------------------------------------

std::string stream_to_jsonl(const std::vector<router::Instruction>& stream) {
    std::ostringstream os;
    for (const auto& i : stream) {
        json j;
        j["cycle"] = i.cycle;
        j["kind"] = router::kind_name(i.kind);
        json patches = json::array();
        for (const auto& p : i.patches) patches.push_back({p.row, p.col});
        j["patches"] = std::move(patches);
        j["node"] = i.node;
        j["cycles"] = i.duration;
        os << j.dump() << "\n";
    }
    return os.str();
}

std::vector<router::Instruction> stream_from_jsonl(const std::string& text) {
    std::vector<router::Instruction> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = parse_text(line, "instruction stream");
        check_fields(j, {"cycle", "kind", "patches", "node", "cycles"}, "instruction");
        router::Instruction inst;
        inst.cycle = j.at("cycle").get<long long>();
        auto kind = router::kind_from_name(j.at("kind").get<std::string>());
        if (!kind) throw ParseError("unknown instruction kind");
        inst.kind = *kind;
        for (const auto& p : j.at("patches"))
            inst.patches.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
        inst.node = j.at("node").get<int>();
        inst.duration = j.at("cycles").get<int>();
        out.push_back(std::move(inst));
    }
    return out;
}

std::string layout_to_json(const qcb::Qcb& board) {
    json j;
    j["format_version"] = 1;
    j["width"] = board.width();
    j["height"] = board.height();
    j["io_count"] = board.io_count();
    std::vector<std::string> rows;
    std::istringstream is(board.ascii());
    std::string line;
    while (std::getline(is, line)) rows.push_back(line);
    j["grid"] = rows;
    // Only extern segments carry information the grid cannot reconstruct.
    j["segments"] = json::array();
    for (const auto& s : board.segments()) {
        if (s.kind != qcb::PatchType::Extern) continue;
        json sj;
        sj["row"] = s.row;
        sj["col"] = s.col;
        sj["width"] = s.width;
        sj["height"] = s.height;
        sj["kind"] = std::string(1, qcb::glyph(s.kind));
        if (!s.extern_type.empty()) sj["extern"] = s.extern_type;
        j["segments"].push_back(std::move(sj));
    }
    return j.dump(2) + "\n";
}

qcb::Qcb layout_from_json(const std::string& text) {
    json j = parse_text(text, "layout");
    check_fields(j, {"format_version", "width", "height", "io_count", "grid", "segments"},
                 "layout");
    std::vector<std::string> rows;
    for (const auto& r : j.at("grid")) rows.push_back(r.get<std::string>());
    qcb::Qcb board = qcb::Qcb::from_ascii(rows, j.value("io_count", 0));
    if (j.contains("segments")) {
        for (const auto& sj : j.at("segments")) {
            if (sj.value("kind", std::string()) == "E") {
                qcb::Segment seg;
                seg.row = sj.at("row").get<int>();
                seg.col = sj.at("col").get<int>();
                seg.width = sj.at("width").get<int>();
                seg.height = sj.at("height").get<int>();
                seg.kind = qcb::PatchType::Extern;
                seg.extern_type = sj.value("extern", std::string());
                board.add_segment(seg);
            }
        }
    }
    return board;
}

std::string report_to_json(const router::CostReport& r) {
    json j;
    j["format_version"] = 1;
    j["total_cycles"] = r.total_cycles;
    j["spacetime_volume"] = r.spacetime_volume;
    j["instruction_count"] = r.instruction_count;
    j["board"] = {{"width", r.board_width}, {"height", r.board_height}};
    j["code_distance"] = r.code_distance;
    j["volume_breakdown"] = {{"register_idle", r.breakdown.register_idle},
                             {"register_busy", r.breakdown.register_busy},
                             {"routing", r.breakdown.routing},
                             {"extern", r.breakdown.extern_patches}};
    j["physical"] = {{"patch_area", r.physical_patch_area}, {"cycles", r.physical_cycles}};
    j["disjoint_segments"] = r.disjoint_segments;
    if (!r.note.empty()) j["note"] = r.note;
    return j.dump(2) + "\n";
}

std::string map_to_json(const mapper::QubitMap& map) {
    json j;
    for (const auto& [sym, at] : map.where) {
        json entry;
        entry["patch"] = {at.row, at.col};
        auto it = map.pref.find(sym);
        if (it != map.pref.end())
            entry["orientation"] = it->second == mapper::OrientPref::Route ? "route" : "rotate";
        j[sym.str()] = std::move(entry);
    }
    return j.dump(2) + "\n";
}

std::string trace_to_json(const sched::ScheduleTrace& trace) {
    json j;
    j["makespan"] = trace.makespan;
    json nodes = json::array();
    for (size_t v = 0; v < trace.start.size(); ++v)
        nodes.push_back({{"node", v}, {"start", trace.start[v]}, {"end", trace.end[v]}});
    j["nodes"] = std::move(nodes);
    json occ = json::array();
    for (const auto& o : trace.occupancy)
        occ.push_back({{"slot", o.slot},
                       {"type", o.type},
                       {"instance", o.instance},
                       {"start", o.start},
                       {"end", o.end}});
    j["occupancy"] = std::move(occ);
    return j.dump(2) + "\n";
}

std::string template_to_json(const ir::ExternTemplate& t) {
    json j;
    j["format_version"] = 1;
    j["name"] = t.name;
    j["width"] = t.width;
    j["height"] = t.height;
    j["resettable"] = t.resettable;
    j["ops"] = json::array();
    for (const auto& op : t.ops)
        j["ops"].push_back({{"name", op.name},
                            {"inputs", op.inputs},
                            {"outputs", op.outputs},
                            {"cycles", op.cycles}});
    return j.dump(2) + "\n";
}

ir::ExternTemplate template_from_json(const std::string& text) {
    json j = parse_text(text, "extern template");
    check_fields(j, {"format_version", "name", "width", "height", "resettable", "ops"},
                 "extern template");
    ir::ExternTemplate t;
    t.name = j.at("name").get<std::string>();
    t.width = j.at("width").get<int>();
    t.height = j.at("height").get<int>();
    t.resettable = j.value("resettable", true);
    for (const auto& op : j.value("ops", json::array()))
        t.ops.push_back({op.at("name").get<std::string>(), op.value("inputs", 0),
                         op.value("outputs", 0), op.value("cycles", 1)});
    return t;
}

}  // namespace lsc::io
