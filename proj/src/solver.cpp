#include "structflow/solver.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <set>

namespace structflow {

bool AnalysisState::same_result(const AnalysisState &o) const {
  return mode == o.mode && vars == o.vars && versions == o.versions && returns == o.returns &&
         exits == o.exits && init_types == o.init_types && callees == o.callees;
}

Value strong_update(const Value &pt_p, const Value &pt_q, const Value &pt_o, ObjRef o,
                    bool o_is_singleton) {
  if (pt_p.size() == 1 && pt_p.begin()->first == o && o_is_singleton)
    return pt_q;
  if (pt_p.empty())
    return pt_o;
  Value out = pt_o;
  join_into(out, pt_q);
  return out;
}

namespace {

const MuChi *find_annotation(const std::vector<MuChi> &list, BaseId b) {
  auto it = std::lower_bound(list.begin(), list.end(), b,
                             [](const MuChi &m, BaseId x) { return m.obj < x; });
  return it != list.end() && it->obj == b ? &*it : nullptr;
}

class Solver {
public:
  Solver(const AnalysisInputs &in, const SolveOptions &opts)
      : in_(in), prog_(in.program), opts_(opts), mto_(opts.mode == Mode::MtoSS),
        queued_(in.vfg.nodes.size(), false), registered_(prog_.functions.size()) {
    st_.mode = opts.mode;
    st_.vars.resize(prog_.vars.size());
    st_.versions.resize(in.annotated.versions.size());
    st_.returns.resize(prog_.functions.size());
    st_.exits.resize(prog_.functions.size());
    for (std::uint32_t n = 0; n < in.vfg.nodes.size(); ++n) {
      const VfgNode &node = in.vfg.nodes[n];
      if (node.kind == NodeKind::Inst && prog_.inst(node.label).op == Opcode::DynCast)
        dyncasts_.push_back(n);
    }
    if (opts.shuffle_seed)
      rng_.seed(*opts.shuffle_seed);
  }

  AnalysisState run() {
    for (std::uint32_t n = 0; n < in_.vfg.nodes.size(); ++n)
      push(n);
    while (!work_.empty()) {
      std::uint32_t n;
      if (opts_.shuffle_seed) {
        std::uniform_int_distribution<std::size_t> pick(0, work_.size() - 1);
        std::size_t i = pick(rng_);
        n = work_[i];
        work_[i] = work_.back();
        work_.pop_back();
      } else {
        n = work_.front();
        work_.pop_front();
      }
      queued_[n] = false;
      if (++st_.visits > opts_.budget)
        throw BudgetExceeded("solver exceeded its budget of " + std::to_string(opts_.budget) +
                             " node visits");
      if (visit(n))
        for (std::uint32_t s : in_.vfg.succs[n])
          push(s);
    }
    return std::move(st_);
  }

private:
  void push(std::uint32_t n) {
    if (!queued_[n]) {
      queued_[n] = true;
      work_.push_back(n);
    }
  }

  // Outputs are recomputed from scratch on every visit; a shrinking output
  // means a transfer function is not monotone.
  bool set_var(VarId v, Value next) {
    Value &cur = st_.vars[v];
    if (!includes(next, cur))
      throw InvariantViolation("points-to set of " + prog_.var_name(v) + " shrank");
    if (next == cur)
      return false;
    cur = std::move(next);
    return true;
  }

  bool set_version(VersionId v, Content next) {
    Content &cur = st_.versions[v];
    if (!includes(next, cur))
      throw InvariantViolation("contents of " + in_.objects.name(in_.annotated.versions[v].obj) +
                               " version " + std::to_string(v) + " shrank");
    if (next == cur)
      return false;
    cur = std::move(next);
    return true;
  }

  Value operand_value(const Operand &op) const {
    if (op.kind == Operand::Kind::Var)
      return st_.vars[op.id];
    if (op.kind == Operand::Kind::Func)
      return {{ObjRef{in_.objects.of_function(op.id), 0}, TypeSet{kUntyped}}};
    return {};
  }

  // Structure helpers. In sparse mode every object is untyped.

  TypeSet alloc_types(TypeId t) const {
    if (mto_ && t != kNone && prog_.types[t].is_aggregate())
      return {t};
    return {kUntyped};
  }

  bool admits(const TypeSet &ts, std::uint64_t off) const {
    if (!mto_ || ts.count(kUntyped))
      return true;
    return std::any_of(ts.begin(), ts.end(),
                       [&](TypeId t) { return in_.layouts.has_element_offset(t, off); });
  }

  /// Types inherited by a sub-object at `off` from its base's types.
  TypeSet seed(const TypeSet &ts, std::uint64_t off) const {
    if (!mto_)
      return {kUntyped};
    TypeSet out;
    for (TypeId t : ts) {
      if (t == kUntyped) {
        out.insert(kUntyped);
        continue;
      }
      if (!in_.layouts.has_element_offset(t, off))
        continue;
      std::vector<TypeId> aggs = in_.layouts.aggregates_at(t, off);
      if (aggs.empty())
        out.insert(kUntyped);
      out.insert(aggs.begin(), aggs.end());
    }
    if (out.empty())
      out.insert(kUntyped);
    return out;
  }

  static void add(Value &v, ObjRef r, const TypeSet &ts) { v[r].insert(ts.begin(), ts.end()); }

  // Node evaluation --------------------------------------------------------

  bool visit(std::uint32_t n) {
    const VfgNode &node = in_.vfg.nodes[n];
    switch (node.kind) {
    case NodeKind::Inst: return eval(prog_.inst(node.label));
    case NodeKind::Entry: return eval_entry(node.func);
    case NodeKind::Exit: return eval_exit(node.func);
    case NodeKind::MemPhi: return eval_phi(node.version);
    }
    return false;
  }

  bool eval(const Instruction &inst) {
    switch (inst.op) {
    case Opcode::Alloca: {
      ObjRef o{in_.objects.of_site(inst.label), 0};
      return set_var(inst.result, {{o, alloc_types(inst.type)}});
    }
    case Opcode::Malloc:
      return set_var(inst.result, {{ObjRef{in_.objects.of_site(inst.label), 0}, {kUntyped}}});
    case Opcode::Copy:
      return set_var(inst.result, operand_value(inst.operands[0]));
    case Opcode::Phi: {
      Value v;
      for (const Operand &op : inst.operands)
        join_into(v, operand_value(op));
      return set_var(inst.result, std::move(v));
    }
    case Opcode::Cast: return eval_cast(inst);
    case Opcode::Load: return eval_load(inst);
    case Opcode::Store: return eval_store(inst);
    case Opcode::Field:
    case Opcode::Array: return eval_offset(inst);
    case Opcode::Constructor: return eval_constructor(inst);
    case Opcode::DynCast: return eval_dyncast(inst);
    case Opcode::Call: return eval_call(inst);
    case Opcode::Ret:
    case Opcode::Br:
    case Opcode::Jmp: break;
    }
    return false;
  }

  bool eval_cast(const Instruction &inst) {
    Value v = operand_value(inst.operands[0]);
    if (mto_ && prog_.types[inst.type].is_aggregate())
      for (auto &[obj, ts] : v) {
        ts.erase(kUntyped);
        ts.insert(inst.type);
      }
    return set_var(inst.result, std::move(v));
  }

  const Content &mu_content(Label l, BaseId b) const {
    const MuChi *m = find_annotation(in_.annotated.mu[l], b);
    if (!m)
      throw InvariantViolation("no memory annotation for " + in_.objects.name(b) + " at label " +
                               std::to_string(l));
    return st_.versions[m->in];
  }

  bool eval_load(const Instruction &inst) {
    const Value ptr = operand_value(inst.operands[0]);
    Value v;
    for (const auto &[obj, ts] : ptr)
      join_into(v, read_cell(mu_content(inst.label, obj.base), obj.key));
    // The container's type set at the pointer's node also reaches this node.
    for (const auto &[obj, ts] : ptr)
      if (auto it = v.find(obj); it != v.end())
        it->second.insert(ts.begin(), ts.end());
    return set_var(inst.result, std::move(v));
  }

  bool eval_store(const Instruction &inst) {
    const Value ptr = operand_value(inst.operands[0]);
    const Value val = operand_value(inst.operands[1]);
    bool changed = false;
    for (const MuChi &c : in_.annotated.chi[inst.label]) {
      Content out;
      if (!ptr.empty()) {
        out = st_.versions[c.in];
        for (const auto &[obj, ts] : ptr) {
          if (obj.base != c.obj)
            continue;
          auto it = out.find(obj.key);
          Value cell = strong_update(ptr, val, it == out.end() ? Value{} : it->second, obj,
                                     in_.is_singleton(obj));
          if (cell.empty())
            out.erase(obj.key);
          else
            out[obj.key] = std::move(cell);
        }
      }
      changed |= set_version(c.out, std::move(out));
    }
    return changed;
  }

  bool eval_offset(const Instruction &inst) {
    const Value base = operand_value(inst.operands[0]);
    Value v;
    if (inst.variable_index) {
      for (const auto &[obj, ts] : base) {
        if (!mto_ || obj.is_summary()) {
          add(v, {obj.base, kSummaryKey}, {kUntyped});
          continue;
        }
        for (TypeId t : ts) {
          const TypeLayout *lay = t == kUntyped ? nullptr : &in_.layouts.layout(t);
          if (!lay || lay->summarized) {
            add(v, {obj.base, kSummaryKey}, {kUntyped});
            continue;
          }
          for (std::uint64_t e : lay->element_offsets) {
            ObjRef r = in_.objects.at_offset(obj.base, obj.key + static_cast<std::int64_t>(e));
            if (r == obj)
              add(v, r, ts); // the leading element is the object itself
            else
              add(v, r, r.is_summary() ? TypeSet{kUntyped} : seed({t}, e));
          }
        }
      }
      return set_var(inst.result, std::move(v));
    }
    std::uint64_t off;
    if (inst.op == Opcode::Field)
      off = *in_.layouts.field_offset(inst.type, inst.field_path);
    else
      off = static_cast<std::uint64_t>(inst.index) * in_.layouts.size(inst.type);
    for (const auto &[obj, ts] : base) {
      if (!admits(ts, off))
        continue;
      if (obj.is_summary()) {
        add(v, obj, {kUntyped});
        continue;
      }
      ObjRef r = in_.objects.at_offset(obj.base, obj.key + static_cast<std::int64_t>(off));
      if (r == obj)
        add(v, r, ts);
      else
        add(v, r, r.is_summary() ? TypeSet{kUntyped} : seed(ts, off));
    }
    return set_var(inst.result, std::move(v));
  }

  bool eval_constructor(const Instruction &inst) {
    if (!prog_.types.is_polymorphic(inst.type))
      return false;
    bool changed = false;
    for (const auto &[obj, ts] : operand_value(inst.operands[0]))
      changed |= st_.init_types[obj.base].insert(inst.type).second;
    if (changed)
      for (std::uint32_t n : dyncasts_)
        push(n);
    return false;
  }

  bool eval_dyncast(const Instruction &inst) {
    Value v;
    for (const auto &[obj, ts] : operand_value(inst.operands[0])) {
      auto it = st_.init_types.find(obj.base);
      if (it == st_.init_types.end())
        continue;
      for (TypeId dynamic : it->second) {
        BaseOffset bo = in_.layouts.base_class_offset(dynamic, inst.type);
        if (!bo.ok())
          continue;
        ObjRef r = in_.objects.at_offset(obj.base, static_cast<std::int64_t>(bo.offset));
        if (r == obj) {
          add(v, r, ts);
        } else if (!mto_ || r.is_summary()) {
          add(v, r, {kUntyped});
        } else {
          std::vector<TypeId> aggs = in_.layouts.aggregates_at(dynamic, bo.offset);
          add(v, r, TypeSet(aggs.begin(), aggs.end()));
        }
      }
    }
    return set_var(inst.result, std::move(v));
  }

  std::vector<FuncId> resolve(const Instruction &call) const {
    const Operand &callee = call.operands[0];
    if (callee.kind == Operand::Kind::Func)
      return {callee.id};
    std::set<FuncId> out;
    for (const auto &[obj, ts] : operand_value(callee))
      if (obj.is_base() && in_.objects.is_function(obj.base))
        out.insert(in_.objects[obj.base].func);
    return {out.begin(), out.end()};
  }

  bool eval_call(const Instruction &inst) {
    std::vector<FuncId> targets = resolve(inst);
    const std::vector<FuncId> &allowed = in_.andersen.callgraph.at(inst.label);
    for (FuncId g : targets)
      if (!std::binary_search(allowed.begin(), allowed.end(), g))
        throw InvariantViolation("call at label " + std::to_string(inst.label) + " reaches " +
                                 prog_.functions[g].name + " outside the pre-analysis call graph");
    std::vector<FuncId> &known = st_.callees[inst.label];
    if (!std::includes(targets.begin(), targets.end(), known.begin(), known.end()))
      throw InvariantViolation("call targets shrank");
    for (FuncId g : targets)
      if (registered_[g].insert(inst.label).second)
        push(in_.vfg.entry_node[g]);
    known = targets;

    bool changed = false;
    if (inst.result != kNone) {
      Value r;
      for (FuncId g : targets)
        join_into(r, st_.returns[g]);
      changed |= set_var(inst.result, std::move(r));
    }
    for (const MuChi &c : in_.annotated.chi[inst.label]) {
      Content out;
      for (FuncId g : targets) {
        if (in_.modref.exit[g].count(c.obj)) {
          auto it = st_.exits[g].find(c.obj);
          if (it != st_.exits[g].end())
            join_into(out, it->second);
        } else {
          join_into(out, st_.versions[c.in]);
        }
      }
      changed |= set_version(c.out, std::move(out));
    }
    return changed;
  }

  bool eval_entry(FuncId f) {
    const Function &fn = prog_.functions[f];
    bool changed = false;
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
      Value v;
      for (Label site : registered_[f]) {
        const Instruction &call = prog_.inst(site);
        if (i + 1 < call.operands.size())
          join_into(v, operand_value(call.operands[i + 1]));
      }
      changed |= set_var(fn.params[i], std::move(v));
    }
    for (const MuChi &e : in_.annotated.entry[f]) {
      if (!in_.modref.entry[f].count(e.obj))
        continue;
      Content c;
      for (Label site : registered_[f])
        join_into(c, mu_content(site, e.obj));
      changed |= set_version(e.out, std::move(c));
    }
    return changed;
  }

  bool eval_exit(FuncId f) {
    Value ret;
    std::map<BaseId, Content> out;
    for (Label r : in_.annotated.rets[f]) {
      const Instruction &inst = prog_.inst(r);
      if (!inst.operands.empty())
        join_into(ret, operand_value(inst.operands[0]));
      for (const MuChi &m : in_.annotated.mu[r])
        join_into(out[m.obj], st_.versions[m.in]);
    }
    for (auto it = out.begin(); it != out.end();)
      it = it->second.empty() ? out.erase(it) : std::next(it);
    bool changed = false;
    if (!includes(ret, st_.returns[f]))
      throw InvariantViolation("return value of " + prog_.functions[f].name + " shrank");
    if (ret != st_.returns[f]) {
      st_.returns[f] = std::move(ret);
      changed = true;
    }
    for (const auto &[b, c] : st_.exits[f])
      if (!out.count(b) || !includes(out.at(b), c))
        throw InvariantViolation("exit contents of " + prog_.functions[f].name + " shrank");
    if (out != st_.exits[f]) {
      st_.exits[f] = std::move(out);
      changed = true;
    }
    return changed;
  }

  bool eval_phi(VersionId v) {
    Content c;
    for (VersionId in : in_.annotated.versions[v].incoming)
      join_into(c, st_.versions[in]);
    return set_version(v, std::move(c));
  }

  const AnalysisInputs &in_;
  const Program &prog_;
  SolveOptions opts_;
  bool mto_;
  AnalysisState st_;
  std::deque<std::uint32_t> work_;
  std::vector<bool> queued_;
  std::vector<std::set<Label>> registered_;
  std::vector<std::uint32_t> dyncasts_;
  std::mt19937_64 rng_;
};

} // namespace

AnalysisState solve(const AnalysisInputs &in, const SolveOptions &opts) {
  return Solver(in, opts).run();
}

} // namespace structflow
