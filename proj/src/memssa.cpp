#include "structflow/memssa.hpp"

#include "structflow/cfg.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace structflow {

namespace {

std::vector<MuChi> annotations_for(const std::set<BaseId> &objs) {
  std::vector<MuChi> out;
  for (BaseId o : objs)
    out.push_back({o, kNone, kNone});
  return out;
}

std::set<BaseId> pointees(const AndersenResult &pre, const Operand &op) {
  if (!op.is_var())
    return {};
  return {pre.pts[op.id].begin(), pre.pts[op.id].end()};
}

} // namespace

AnnotatedProgram annotate(const Program &prog, const AndersenResult &pre, const ModRef &modref) {
  AnnotatedProgram ap;
  ap.mu.resize(prog.label_count());
  ap.chi.resize(prog.label_count());
  ap.entry.resize(prog.functions.size());
  ap.phis.resize(prog.functions.size());
  ap.rets.resize(prog.functions.size());

  for (FuncId f = 0; f < prog.functions.size(); ++f) {
    std::set<BaseId> used(modref.entry[f].begin(), modref.entry[f].end());
    for (const Block &b : prog.functions[f].blocks) {
      for (const Instruction &inst : b.insts) {
        switch (inst.op) {
        case Opcode::Load:
          ap.mu[inst.label] = annotations_for(pointees(pre, inst.operands[0]));
          break;
        case Opcode::Store:
          ap.chi[inst.label] = annotations_for(pointees(pre, inst.operands[0]));
          break;
        case Opcode::Call: {
          std::set<BaseId> in, out;
          for (FuncId g : pre.callgraph.at(inst.label)) {
            in.insert(modref.entry[g].begin(), modref.entry[g].end());
            out.insert(modref.exit[g].begin(), modref.exit[g].end());
          }
          ap.mu[inst.label] = annotations_for(in);
          ap.chi[inst.label] = annotations_for(out);
          break;
        }
        case Opcode::Ret:
          ap.mu[inst.label] = annotations_for(modref.exit[f]);
          ap.rets[f].push_back(inst.label);
          break;
        default:
          break;
        }
        for (const MuChi &m : ap.mu[inst.label])
          used.insert(m.obj);
        for (const MuChi &c : ap.chi[inst.label])
          used.insert(c.obj);
      }
    }
    ap.entry[f] = annotations_for(used);
  }
  return ap;
}

void rename_objects(const Program &prog, AnnotatedProgram &ap) {
  for (FuncId f = 0; f < prog.functions.size(); ++f) {
    const Function &fn = prog.functions[f];
    Cfg cfg = build_cfg(fn);
    DominatorTree dom(cfg);
    auto df = dom.frontiers(cfg);

    std::map<BaseId, std::size_t> slot;
    for (std::size_t i = 0; i < ap.entry[f].size(); ++i)
      slot.emplace(ap.entry[f][i].obj, i);
    const std::size_t nobj = slot.size();

    std::vector<std::uint32_t> counter(nobj, 0);
    auto fresh = [&](std::size_t s, MemVersion v) {
      v.obj = ap.entry[f][s].obj;
      v.func = f;
      v.number = counter[s]++;
      ap.versions.push_back(std::move(v));
      return static_cast<VersionId>(ap.versions.size() - 1);
    };

    std::vector<std::vector<VersionId>> stacks(nobj);
    for (std::size_t s = 0; s < nobj; ++s) {
      MemVersion v;
      v.def = MemVersion::Def::Entry;
      VersionId id = fresh(s, v);
      ap.entry[f][s].out = id;
      stacks[s].push_back(id);
    }

    // Object φ placement at the iterated dominance frontier of χ blocks.
    std::vector<std::vector<BlockId>> def_blocks(nobj);
    for (BlockId b = 0; b < fn.blocks.size(); ++b)
      for (const Instruction &inst : fn.blocks[b].insts)
        for (const MuChi &c : ap.chi[inst.label]) {
          auto &blocks = def_blocks[slot.at(c.obj)];
          if (blocks.empty() || blocks.back() != b)
            blocks.push_back(b);
        }
    std::vector<std::vector<std::pair<std::size_t, VersionId>>> block_phis(fn.blocks.size());
    for (std::size_t s = 0; s < nobj; ++s) {
      if (def_blocks[s].empty())
        continue;
      std::vector<BlockId> defs = def_blocks[s];
      defs.push_back(0);
      for (BlockId b : iterated_frontier(df, defs)) {
        MemVersion v;
        v.def = MemVersion::Def::Phi;
        v.block = b;
        v.incoming.assign(cfg.preds[b].size(), kNone);
        VersionId id = fresh(s, v);
        block_phis[b].emplace_back(s, id);
        ap.phis[f].push_back(id);
      }
    }

    auto rename = [&](auto &&self, BlockId b) -> void {
      std::vector<std::size_t> pushed;
      for (const auto &[s, id] : block_phis[b]) {
        stacks[s].push_back(id);
        pushed.push_back(s);
      }
      for (const Instruction &inst : fn.blocks[b].insts) {
        for (MuChi &m : ap.mu[inst.label])
          m.in = stacks[slot.at(m.obj)].back();
        for (MuChi &c : ap.chi[inst.label]) {
          std::size_t s = slot.at(c.obj);
          c.in = stacks[s].back();
          MemVersion v;
          v.def = MemVersion::Def::Chi;
          v.label = inst.label;
          c.out = fresh(s, v);
          stacks[s].push_back(c.out);
          pushed.push_back(s);
        }
      }
      for (BlockId succ : cfg.succs[b]) {
        auto at = std::find(cfg.preds[succ].begin(), cfg.preds[succ].end(), b);
        std::size_t j = static_cast<std::size_t>(at - cfg.preds[succ].begin());
        for (const auto &[s, id] : block_phis[succ])
          ap.versions[id].incoming[j] = stacks[s].back();
      }
      for (BlockId child : dom.children(b))
        self(self, child);
      for (std::size_t s : pushed)
        stacks[s].pop_back();
    };
    if (!fn.blocks.empty())
      rename(rename, 0);
  }
}

ValueFlowGraph build_vfg(const Program &prog, const AndersenResult &pre, const AnnotatedProgram &ap) {
  ValueFlowGraph g;
  g.node_of_label.assign(prog.label_count(), kNone);
  g.entry_node.assign(prog.functions.size(), kNone);
  g.exit_node.assign(prog.functions.size(), kNone);
  g.def_of_var.assign(prog.vars.size(), kNone);
  g.def_of_version.assign(ap.versions.size(), kNone);

  auto add_node = [&](VfgNode n) {
    g.nodes.push_back(n);
    return static_cast<std::uint32_t>(g.nodes.size() - 1);
  };

  for (const Instruction &inst : prog.globals)
    g.node_of_label[inst.label] = add_node({NodeKind::Inst, inst.label, kNone, kNone});
  for (FuncId f = 0; f < prog.functions.size(); ++f) {
    g.entry_node[f] = add_node({NodeKind::Entry, kNone, f, kNone});
    for (const Block &b : prog.functions[f].blocks)
      for (const Instruction &inst : b.insts)
        if (!inst.is_terminator())
          g.node_of_label[inst.label] = add_node({NodeKind::Inst, inst.label, f, kNone});
    for (VersionId v : ap.phis[f])
      g.def_of_version[v] = add_node({NodeKind::MemPhi, kNone, f, v});
    g.exit_node[f] = add_node({NodeKind::Exit, kNone, f, kNone});
  }

  for (VarId v = 0; v < prog.vars.size(); ++v) {
    const VarInfo &info = prog.vars[v];
    g.def_of_var[v] = info.is_param ? g.entry_node[info.func] : g.node_of_label[info.def];
  }
  for (VersionId v = 0; v < ap.versions.size(); ++v) {
    const MemVersion &mv = ap.versions[v];
    if (mv.def == MemVersion::Def::Entry)
      g.def_of_version[v] = g.entry_node[mv.func];
    else if (mv.def == MemVersion::Def::Chi)
      g.def_of_version[v] = g.node_of_label[mv.label];
  }

  auto use_var = [&](const Operand &op, std::uint32_t to) {
    if (op.is_var())
      g.edges.push_back({g.def_of_var[op.id], to, EdgeKind::Direct, op.id});
  };
  auto use_version = [&](VersionId v, std::uint32_t to) {
    g.edges.push_back({g.def_of_version[v], to, EdgeKind::Indirect, v});
  };

  for (FuncId f = 0; f < prog.functions.size(); ++f) {
    for (const Block &b : prog.functions[f].blocks) {
      for (const Instruction &inst : b.insts) {
        std::uint32_t node = g.node_of_label[inst.label];
        switch (inst.op) {
        case Opcode::Br:
        case Opcode::Jmp:
          break;
        case Opcode::Ret:
          if (!inst.operands.empty())
            use_var(inst.operands[0], g.exit_node[f]);
          for (const MuChi &m : ap.mu[inst.label])
            use_version(m.in, g.exit_node[f]);
          break;
        case Opcode::Call: {
          use_var(inst.operands[0], node);
          for (FuncId callee : pre.callgraph.at(inst.label)) {
            std::uint32_t entry = g.entry_node[callee];
            for (std::size_t i = 1; i < inst.operands.size(); ++i)
              use_var(inst.operands[i], entry);
            for (const MuChi &m : ap.mu[inst.label])
              use_version(m.in, entry);
            g.edges.push_back({g.exit_node[callee], node, EdgeKind::Return, callee});
          }
          for (const MuChi &c : ap.chi[inst.label])
            use_version(c.in, node);
          break;
        }
        default:
          for (const Operand &op : inst.operands)
            use_var(op, node);
          for (const MuChi &m : ap.mu[inst.label])
            use_version(m.in, node);
          for (const MuChi &c : ap.chi[inst.label])
            use_version(c.in, node);
          break;
        }
      }
    }
    for (VersionId v : ap.phis[f])
      for (VersionId in : ap.versions[v].incoming)
        use_version(in, g.def_of_version[v]);
  }

  std::vector<std::set<std::uint32_t>> succ(g.nodes.size());
  for (const VfgEdge &e : g.edges)
    succ[e.from].insert(e.to);
  g.succs.resize(g.nodes.size());
  for (std::size_t n = 0; n < g.nodes.size(); ++n)
    g.succs[n].assign(succ[n].begin(), succ[n].end());
  return g;
}

std::string ValueFlowGraph::node_name(const Program &prog, std::uint32_t n) const {
  const VfgNode &node = nodes[n];
  switch (node.kind) {
  case NodeKind::Entry: return "entry " + prog.functions[node.func].name;
  case NodeKind::Exit: return "exit " + prog.functions[node.func].name;
  case NodeKind::MemPhi: return "memphi v" + std::to_string(node.version);
  case NodeKind::Inst: break;
  }
  const Instruction &inst = prog.inst(node.label);
  std::string s = "L" + std::to_string(node.label) + " ";
  if (inst.result != kNone)
    s += prog.var_name(inst.result) + " = ";
  s += opcode_name(inst.op);
  return s;
}

} // namespace structflow
