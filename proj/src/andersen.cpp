#include "structflow/andersen.hpp"

#include "structflow/cfg.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace structflow {

bool AndersenResult::points_to(VarId v, BaseId b) const {
  return std::binary_search(pts[v].begin(), pts[v].end(), b);
}

namespace {

class ConstraintSolver {
public:
  ConstraintSolver(const Program &prog, const ObjectTable &objects)
      : prog_(prog), objects_(objects), nvars_(prog.vars.size()),
        pts_(nvars_ + objects.size()), succs_(pts_.size()), loads_(nvars_), stores_(nvars_),
        store_consts_(nvars_), indirect_(nvars_), queued_(pts_.size(), false) {}

  AndersenResult run() {
    collect_rets();
    for (const Instruction &g : prog_.globals)
      add_base(g.result, objects_.of_site(g.label));
    for (FuncId f = 0; f < prog_.functions.size(); ++f)
      for (const Block &b : prog_.functions[f].blocks)
        for (const Instruction &inst : b.insts)
          constrain(inst);
    while (!work_.empty()) {
      std::size_t n = work_.front();
      work_.pop_front();
      queued_[n] = false;
      process(n);
    }
    AndersenResult r;
    r.pts.resize(nvars_);
    r.content.resize(objects_.size());
    for (std::size_t v = 0; v < nvars_; ++v)
      r.pts[v].assign(pts_[v].begin(), pts_[v].end());
    for (std::size_t b = 0; b < objects_.size(); ++b)
      r.content[b].assign(pts_[nvars_ + b].begin(), pts_[nvars_ + b].end());
    for (auto &[label, fs] : callgraph_)
      r.callgraph[label].assign(fs.begin(), fs.end());
    return r;
  }

private:
  std::size_t content_node(BaseId b) const { return nvars_ + b; }

  void push(std::size_t n) {
    if (!queued_[n]) {
      queued_[n] = true;
      work_.push_back(n);
    }
  }

  void add_base(std::size_t n, BaseId o) {
    if (pts_[n].insert(o).second)
      push(n);
  }

  void add_edge(std::size_t from, std::size_t to) {
    if (!succs_[from].insert(to).second)
      return;
    bool changed = false;
    for (BaseId o : pts_[from])
      changed |= pts_[to].insert(o).second;
    if (changed)
      push(to);
  }

  /// Flow of an operand's value into node `to`.
  void flow(const Operand &op, std::size_t to) {
    if (op.kind == Operand::Kind::Var)
      add_edge(op.id, to);
    else if (op.kind == Operand::Kind::Func)
      add_base(to, objects_.of_function(op.id));
  }

  void collect_rets() {
    rets_.resize(prog_.functions.size());
    for (FuncId f = 0; f < prog_.functions.size(); ++f)
      for (const Block &b : prog_.functions[f].blocks)
        for (const Instruction &inst : b.insts)
          if (inst.op == Opcode::Ret && !inst.operands.empty())
            rets_[f].push_back(inst.operands.front());
  }

  void bind(const Instruction &call, FuncId f) {
    if (!callgraph_[call.label].insert(f).second)
      return;
    const Function &callee = prog_.functions[f];
    std::size_t n = std::min(callee.params.size(), call.operands.size() - 1);
    for (std::size_t i = 0; i < n; ++i)
      flow(call.operands[i + 1], callee.params[i]);
    if (call.result != kNone)
      for (const Operand &r : rets_[f])
        flow(r, call.result);
  }

  void constrain(const Instruction &inst) {
    switch (inst.op) {
    case Opcode::Alloca:
    case Opcode::Malloc:
      add_base(inst.result, objects_.of_site(inst.label));
      break;
    case Opcode::Copy:
    case Opcode::Cast:
    case Opcode::DynCast:
    case Opcode::Field:
    case Opcode::Array:
      flow(inst.operands[0], inst.result);
      break;
    case Opcode::Phi:
      for (const Operand &op : inst.operands)
        flow(op, inst.result);
      break;
    case Opcode::Load:
      if (inst.operands[0].is_var()) {
        loads_[inst.operands[0].id].push_back(inst.result);
        push(inst.operands[0].id);
      }
      break;
    case Opcode::Store: {
      const Operand &p = inst.operands[0];
      const Operand &q = inst.operands[1];
      if (!p.is_var())
        break;
      if (q.kind == Operand::Kind::Var)
        stores_[p.id].push_back(q.id);
      else if (q.kind == Operand::Kind::Func)
        store_consts_[p.id].push_back(objects_.of_function(q.id));
      push(p.id);
      break;
    }
    case Opcode::Call: {
      const Operand &callee = inst.operands[0];
      callgraph_[inst.label];
      if (callee.kind == Operand::Kind::Func) {
        bind(inst, callee.id);
      } else if (callee.is_var()) {
        indirect_[callee.id].push_back(&inst);
        push(callee.id);
      }
      break;
    }
    case Opcode::Constructor:
    case Opcode::Ret:
    case Opcode::Br:
    case Opcode::Jmp:
      break;
    }
  }

  void process(std::size_t n) {
    if (n < nvars_) {
      // Copy the set: constraint expansion may add to pts_[n] itself.
      std::vector<BaseId> objs(pts_[n].begin(), pts_[n].end());
      for (BaseId o : objs) {
        for (VarId dst : loads_[n])
          add_edge(content_node(o), dst);
        for (VarId src : stores_[n])
          add_edge(src, content_node(o));
        for (BaseId c : store_consts_[n])
          add_base(content_node(o), c);
        if (objects_.is_function(o))
          for (const Instruction *call : indirect_[n])
            bind(*call, objects_[o].func);
      }
    }
    std::vector<std::size_t> targets(succs_[n].begin(), succs_[n].end());
    for (std::size_t to : targets) {
      bool changed = false;
      for (BaseId o : pts_[n])
        changed |= pts_[to].insert(o).second;
      if (changed)
        push(to);
    }
  }

  const Program &prog_;
  const ObjectTable &objects_;
  std::size_t nvars_;
  std::vector<std::set<BaseId>> pts_;
  std::vector<std::set<std::size_t>> succs_;
  std::vector<std::vector<VarId>> loads_;
  std::vector<std::vector<VarId>> stores_;
  std::vector<std::vector<BaseId>> store_consts_;
  std::vector<std::vector<const Instruction *>> indirect_;
  std::vector<std::vector<Operand>> rets_;
  std::map<Label, std::set<FuncId>> callgraph_;
  std::deque<std::size_t> work_;
  std::vector<bool> queued_;
};

std::vector<std::vector<FuncId>> callees_of(const Program &prog, const AndersenResult &pre) {
  std::vector<std::vector<FuncId>> out(prog.functions.size());
  for (FuncId f = 0; f < prog.functions.size(); ++f) {
    std::set<FuncId> cs;
    for (const Block &b : prog.functions[f].blocks)
      for (const Instruction &inst : b.insts)
        if (inst.op == Opcode::Call)
          for (FuncId g : pre.callgraph.at(inst.label))
            cs.insert(g);
    out[f].assign(cs.begin(), cs.end());
  }
  return out;
}

} // namespace

AndersenResult run_andersen(const Program &prog, const ObjectTable &objects) {
  return ConstraintSolver(prog, objects).run();
}

ModRef compute_modref(const Program &prog, const ObjectTable &objects, const AndersenResult &pre) {
  const std::size_t nf = prog.functions.size();
  ModRef mr;
  mr.entry.resize(nf);
  mr.exit.resize(nf);
  mr.local.resize(nf);
  mr.recursive.assign(nf, false);
  mr.reachable.assign(nf, false);
  mr.call_sites.resize(nf);

  std::vector<std::vector<FuncId>> callees = callees_of(prog, pre);

  std::vector<FuncId> stack{prog.main};
  mr.reachable[prog.main] = true;
  while (!stack.empty()) {
    FuncId f = stack.back();
    stack.pop_back();
    for (FuncId g : callees[f])
      if (!mr.reachable[g]) {
        mr.reachable[g] = true;
        stack.push_back(g);
      }
  }

  // f is recursive iff it can reach itself through one or more calls.
  for (FuncId f = 0; f < nf; ++f) {
    std::vector<bool> seen(nf, false);
    std::vector<FuncId> work(callees[f].begin(), callees[f].end());
    while (!work.empty() && !mr.recursive[f]) {
      FuncId g = work.back();
      work.pop_back();
      if (g == f)
        mr.recursive[f] = true;
      if (seen[g])
        continue;
      seen[g] = true;
      work.insert(work.end(), callees[g].begin(), callees[g].end());
    }
  }

  for (FuncId f = 0; f < nf; ++f) {
    if (!mr.reachable[f])
      continue;
    for (const Block &b : prog.functions[f].blocks)
      for (const Instruction &inst : b.insts)
        if (inst.op == Opcode::Call)
          for (FuncId g : pre.callgraph.at(inst.label))
            mr.call_sites[g].push_back(inst.label);
  }

  // Non-escaping locals.
  for (FuncId f = 0; f < nf; ++f) {
    if (mr.recursive[f])
      continue;
    std::set<BaseId> cand;
    for (BaseId b = 0; b < objects.size(); ++b) {
      const BaseObject &o = objects[b];
      if ((o.kind == BaseObject::Kind::Stack || o.kind == BaseObject::Kind::Heap) && o.func == f)
        cand.insert(b);
    }
    for (VarId v = 0; v < prog.vars.size(); ++v) {
      if (prog.vars[v].func == f)
        continue;
      for (BaseId b : pre.pts[v])
        cand.erase(b);
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (BaseId x = 0; x < objects.size(); ++x) {
        if (cand.count(x))
          continue;
        for (BaseId b : pre.content[x])
          changed |= cand.erase(b) > 0;
      }
    }
    mr.local[f] = std::move(cand);
  }

  std::vector<std::set<BaseId>> ref(nf), mod(nf);
  for (FuncId f = 0; f < nf; ++f)
    for (const Block &b : prog.functions[f].blocks)
      for (const Instruction &inst : b.insts) {
        if (inst.op == Opcode::Load && inst.operands[0].is_var())
          for (BaseId o : pre.pts[inst.operands[0].id])
            ref[f].insert(o);
        if (inst.op == Opcode::Store && inst.operands[0].is_var())
          for (BaseId o : pre.pts[inst.operands[0].id])
            mod[f].insert(o);
      }

  bool changed = true;
  while (changed) {
    changed = false;
    for (FuncId f = 0; f < nf; ++f) {
      std::set<BaseId> in = ref[f];
      in.insert(mod[f].begin(), mod[f].end());
      std::set<BaseId> out = mod[f];
      for (FuncId g : callees[f]) {
        in.insert(mr.entry[g].begin(), mr.entry[g].end());
        out.insert(mr.exit[g].begin(), mr.exit[g].end());
      }
      for (BaseId b : mr.local[f]) {
        in.erase(b);
        out.erase(b);
      }
      if (in != mr.entry[f] || out != mr.exit[f]) {
        mr.entry[f] = std::move(in);
        mr.exit[f] = std::move(out);
        changed = true;
      }
    }
  }
  return mr;
}

std::vector<bool> classify_singletons(const Program &prog, const ObjectTable &objects,
                                      const LayoutTable &layouts, const ModRef &modref) {
  const std::size_t nf = prog.functions.size();
  std::vector<std::vector<bool>> cyclic(nf);
  for (FuncId f = 0; f < nf; ++f)
    cyclic[f] = blocks_in_cycles(build_cfg(prog.functions[f]));

  // 0 unknown, 1 once, 2 possibly many. Recursive functions never reach
  // the caller walk, so the recursion below is well founded.
  std::vector<int> once(nf, 0);
  std::function<bool(FuncId)> executes_once = [&](FuncId f) -> bool {
    if (once[f] != 0)
      return once[f] == 1;
    bool result = false;
    if (!modref.reachable[f] || modref.recursive[f]) {
      result = false;
    } else if (f == prog.main && modref.call_sites[f].empty()) {
      result = true;
    } else if (modref.call_sites[f].size() == 1) {
      const InstLoc &site = prog.loc(modref.call_sites[f].front());
      result = !cyclic[site.func][site.block] && executes_once(site.func);
    }
    once[f] = result ? 1 : 2;
    return result;
  };

  const TypeTable &types = prog.types;
  auto array_like = [&](const BaseObject &o) {
    if (o.type == kNone)
      return false;
    return types[o.type].kind == TypeKind::Array || o.size > layouts.size(o.type);
  };

  std::vector<bool> out(objects.size(), false);
  for (BaseId b = 0; b < objects.size(); ++b) {
    const BaseObject &o = objects[b];
    switch (o.kind) {
    case BaseObject::Kind::Global:
      out[b] = !array_like(o);
      break;
    case BaseObject::Kind::Stack:
    case BaseObject::Kind::Heap: {
      const InstLoc &at = prog.loc(o.site);
      out[b] = executes_once(o.func) && !cyclic[at.func][at.block] && !array_like(o);
      break;
    }
    case BaseObject::Kind::Function:
      out[b] = false;
      break;
    }
  }
  return out;
}

} // namespace structflow
