#include "structflow/dump.hpp"

#include "json.hpp"

#include <sstream>

namespace structflow {

using json = nlohmann::ordered_json;

namespace {

json value_json(const AnalysisInputs &in, const Value &v) {
  json out = json::array();
  for (const auto &[obj, ts] : v)
    out.push_back({{"object", in.objects.name(obj)}, {"types", visible_types(ts, in.program.types)}});
  return out;
}

json content_json(const AnalysisInputs &in, const Content &c) {
  json out = json::object();
  for (const auto &[key, v] : c)
    out[key == kSummaryKey ? std::string("*") : std::to_string(key)] = value_json(in, v);
  return out;
}

std::string dot_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c;
  }
  return out;
}

} // namespace

std::string layouts_json(const Program &prog, const LayoutTable &layouts) {
  const TypeTable &types = prog.types;
  json out = json::object();
  for (TypeId t = 0; t < types.size(); ++t) {
    const TypeDef &def = types[t];
    if (def.kind == TypeKind::Primitive)
      continue;
    const TypeLayout &l = layouts.layout(t);
    json j;
    j["size"] = l.size;
    j["align"] = l.align;
    j["element_offsets"] = l.element_offsets;
    if (l.summarized)
      j["summarized"] = true;
    json bases = json::object();
    for (const auto &[b, offs] : l.base_offsets) {
      if (offs.size() == 1)
        bases[types[b].name] = offs.front();
      else
        bases[types[b].name] = "ambiguous";
    }
    if (def.kind == TypeKind::Class)
      j["base_offsets"] = bases;
    out[def.name] = j;
  }
  return out.dump(2) + "\n";
}

std::string andersen_json(const AnalysisInputs &in) {
  const Program &prog = in.program;
  json pts = json::object();
  for (VarId v = 0; v < prog.vars.size(); ++v) {
    if (in.andersen.pts[v].empty())
      continue;
    json objs = json::array();
    for (BaseId b : in.andersen.pts[v])
      objs.push_back(in.objects.name(b));
    pts[prog.var_name(v)] = objs;
  }
  json calls = json::object();
  for (const auto &[label, fs] : in.andersen.callgraph) {
    json targets = json::array();
    for (FuncId f : fs)
      targets.push_back(prog.functions[f].name);
    calls["L" + std::to_string(label)] = targets;
  }
  json out;
  out["pts"] = pts;
  out["callgraph"] = calls;
  return out.dump(2) + "\n";
}

std::string state_json(const AnalysisInputs &in, const AnalysisState &st) {
  const Program &prog = in.program;
  const ValueFlowGraph &g = in.vfg;
  std::vector<std::vector<VarId>> var_defs(g.nodes.size());
  for (VarId v = 0; v < prog.vars.size(); ++v)
    var_defs[g.def_of_var[v]].push_back(v);
  std::vector<std::vector<VersionId>> version_defs(g.nodes.size());
  for (VersionId v = 0; v < in.annotated.versions.size(); ++v)
    version_defs[g.def_of_version[v]].push_back(v);

  json nodes = json::array();
  for (std::uint32_t n = 0; n < g.nodes.size(); ++n) {
    json node;
    node["id"] = n;
    node["node"] = g.node_name(prog, n);
    json pt = json::object();
    for (VarId v : var_defs[n])
      pt[prog.var_name(v)] = value_json(in, st.vars[v]);
    node["pt"] = pt;
    json mem = json::array();
    for (VersionId v : version_defs[n]) {
      const MemVersion &mv = in.annotated.versions[v];
      mem.push_back({{"object", in.objects.name(mv.obj)},
                     {"version", mv.number},
                     {"cells", content_json(in, st.versions[v])}});
    }
    node["objects"] = mem;
    nodes.push_back(node);
  }

  json vars = json::object();
  for (VarId v = 0; v < prog.vars.size(); ++v)
    vars[prog.var_name(v)] = value_json(in, st.vars[v]);

  json init = json::object();
  for (const auto &[b, ts] : st.init_types)
    init[in.objects.name(b)] = visible_types(ts, prog.types);

  json calls = json::object();
  for (const auto &[label, fs] : st.callees) {
    json targets = json::array();
    for (FuncId f : fs)
      targets.push_back(prog.functions[f].name);
    calls["L" + std::to_string(label)] = targets;
  }

  json out;
  out["mode"] = mode_name(st.mode);
  out["vars"] = vars;
  out["pt_initT"] = init;
  out["callees"] = calls;
  out["nodes"] = nodes;
  return out.dump(2) + "\n";
}

std::string vfg_dot(const AnalysisInputs &in) {
  const ValueFlowGraph &g = in.vfg;
  std::ostringstream os;
  os << "digraph vfg {\n  node [shape=box, fontname=monospace];\n";
  for (std::uint32_t n = 0; n < g.nodes.size(); ++n)
    os << "  n" << n << " [label=\"" << dot_escape(g.node_name(in.program, n)) << "\"];\n";
  for (const VfgEdge &e : g.edges) {
    os << "  n" << e.from << " -> n" << e.to;
    switch (e.kind) {
    case EdgeKind::Direct:
      os << " [label=\"" << dot_escape(in.program.var_name(e.what)) << "\"]";
      break;
    case EdgeKind::Indirect: {
      const MemVersion &mv = in.annotated.versions[e.what];
      os << " [style=dashed, label=\"" << dot_escape(in.objects.name(mv.obj)) << mv.number << "\"]";
      break;
    }
    case EdgeKind::Return:
      os << " [style=dotted, label=\"ret\"]";
      break;
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

} // namespace structflow
