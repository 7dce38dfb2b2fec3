#include "structflow/oracle.hpp"

#include "structflow/cfg.hpp"

#include <algorithm>
#include <set>

namespace structflow {

namespace {

using Memory = std::map<BaseId, Content>;

Content lookup(const Memory &m, BaseId b) {
  auto it = m.find(b);
  return it == m.end() ? Content{} : it->second;
}

void assign(Memory &m, BaseId b, Content c) {
  if (c.empty())
    m.erase(b);
  else
    m[b] = std::move(c);
}

void merge(Memory &into, const Memory &from) {
  for (const auto &[b, c] : from)
    join_into(into[b], c);
  for (auto it = into.begin(); it != into.end();)
    it = it->second.empty() ? into.erase(it) : std::next(it);
}

template <typename T> bool update(T &slot, T next) {
  if (slot == next)
    return false;
  slot = std::move(next);
  return true;
}

class Dense {
public:
  Dense(const AnalysisInputs &in, Mode mode, std::uint64_t budget)
      : in_(in), prog_(in.program), typed_(mode == Mode::MtoSS), budget_(budget) {
    const std::size_t nf = prog_.functions.size();
    facts_.vars.resize(prog_.vars.size());
    cfgs_.reserve(nf);
    for (const Function &f : prog_.functions) {
      cfgs_.push_back(build_cfg(f));
      rpo_.push_back(reverse_post_order(cfgs_.back()));
      block_out_.emplace_back(f.blocks.size());
    }
    registered_.resize(nf);
    returns_.resize(nf);
    exit_mem_.resize(nf);
  }

  FlowFacts run() {
    for (const Instruction &g : prog_.globals)
      define(g.result, {{ObjRef{in_.objects.of_site(g.label), 0}, fresh_types(g.type)}});
    bool changed = true;
    while (changed) {
      changed = false;
      for (FuncId f = 0; f < prog_.functions.size(); ++f)
        changed |= run_function(f);
    }
    facts_.init_types = init_types_;
    for (auto &[l, fs] : callees_)
      facts_.callees[l].assign(fs.begin(), fs.end());
    return std::move(facts_);
  }

private:
  // Type-set vocabulary, written against the layout API directly.

  TypeSet fresh_types(TypeId declared) const {
    bool aggregate = declared != kNone && prog_.types[declared].kind != TypeKind::Primitive;
    return typed_ && aggregate ? TypeSet{declared} : TypeSet{kUntyped};
  }

  bool untyped(const TypeSet &ts) const { return !typed_ || ts.count(kUntyped) > 0; }

  /// Types of the sub-object found `off` bytes into an object typed `ts`.
  TypeSet inner_types(const TypeSet &ts, std::uint64_t off) const {
    if (!typed_)
      return {kUntyped};
    TypeSet out;
    bool opaque = false;
    for (TypeId t : ts) {
      if (t == kUntyped) {
        opaque = true;
      } else if (in_.layouts.has_element_offset(t, off)) {
        auto aggs = in_.layouts.aggregates_at(t, off);
        out.insert(aggs.begin(), aggs.end());
        opaque = opaque || aggs.empty();
      }
    }
    if (opaque || out.empty())
      out.insert(kUntyped);
    return out;
  }

  Value value_of(const Operand &op) const {
    switch (op.kind) {
    case Operand::Kind::Var: return facts_.vars[op.id];
    case Operand::Kind::Func: return {{ObjRef{in_.objects.of_function(op.id), 0}, {kUntyped}}};
    case Operand::Kind::Const: return {};
    }
    return {};
  }

  bool define(VarId v, Value val) { return update(facts_.vars[v], std::move(val)); }

  static void put(Value &v, ObjRef r, const TypeSet &ts) {
    TypeSet &slot = v[r];
    slot.insert(ts.begin(), ts.end());
  }

  static Value read(const Content &c, FieldKey k) {
    Value out;
    for (const auto &[key, cell] : c)
      if (k == kSummaryKey || key == k || key == kSummaryKey)
        join_into(out, cell);
    return out;
  }

  std::set<BaseId> callee_footprint(Label l, bool exits) const {
    std::set<BaseId> out;
    for (FuncId g : in_.andersen.callgraph.at(l)) {
      const auto &s = exits ? in_.modref.exit[g] : in_.modref.entry[g];
      out.insert(s.begin(), s.end());
    }
    return out;
  }

  // One pass over function f. Returns true when anything changed.
  bool run_function(FuncId f) {
    const Function &fn = prog_.functions[f];
    bool changed = false;

    Memory entry;
    for (BaseId b : in_.modref.entry[f]) {
      Content c;
      for (Label s : registered_[f])
        join_into(c, lookup(site_mem_[s], b));
      changed |= update(facts_.entry[{f, b}], c);
      assign(entry, b, std::move(c));
    }
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
      Value v;
      for (Label s : registered_[f]) {
        const Instruction &call = prog_.inst(s);
        if (i + 1 < call.operands.size())
          join_into(v, value_of(call.operands[i + 1]));
      }
      changed |= define(fn.params[i], std::move(v));
    }

    Value ret_value;
    Memory ret_mem;
    const Cfg &cfg = cfgs_[f];
    for (BlockId b : rpo_[f]) {
      Memory mem = b == 0 ? entry : Memory{};
      for (BlockId p : cfg.preds[b])
        merge(mem, block_out_[f][p]);
      for (const Instruction &inst : fn.blocks[b].insts) {
        if (++steps_ > budget_)
          throw BudgetExceeded("dense analysis exceeded its budget of " + std::to_string(budget_) +
                               " steps");
        if (inst.op == Opcode::Ret) {
          if (!inst.operands.empty())
            join_into(ret_value, value_of(inst.operands[0]));
          for (BaseId o : in_.modref.exit[f]) {
            Content c = lookup(mem, o);
            changed |= update(facts_.mu_in[{inst.label, o}], c);
            join_into(ret_mem[o], c);
          }
          continue;
        }
        changed |= transfer(inst, mem);
      }
      changed |= update(block_out_[f][b], std::move(mem));
    }
    for (auto it = ret_mem.begin(); it != ret_mem.end();)
      it = it->second.empty() ? ret_mem.erase(it) : std::next(it);
    changed |= update(returns_[f], std::move(ret_value));
    changed |= update(exit_mem_[f], std::move(ret_mem));
    return changed;
  }

  bool transfer(const Instruction &inst, Memory &mem) {
    switch (inst.op) {
    case Opcode::Alloca:
      return define(inst.result, {{ObjRef{in_.objects.of_site(inst.label), 0}, fresh_types(inst.type)}});
    case Opcode::Malloc:
      return define(inst.result, {{ObjRef{in_.objects.of_site(inst.label), 0}, {kUntyped}}});
    case Opcode::Copy:
      return define(inst.result, value_of(inst.operands[0]));
    case Opcode::Phi: {
      Value v;
      for (const Operand &op : inst.operands)
        join_into(v, value_of(op));
      return define(inst.result, std::move(v));
    }
    case Opcode::Cast: {
      Value src = value_of(inst.operands[0]);
      if (!typed_ || prog_.types[inst.type].kind == TypeKind::Primitive)
        return define(inst.result, std::move(src));
      Value v;
      for (const auto &[obj, ts] : src) {
        TypeSet next{inst.type};
        for (TypeId t : ts)
          if (t != kUntyped)
            next.insert(t);
        v.emplace(obj, std::move(next));
      }
      return define(inst.result, std::move(v));
    }
    case Opcode::Load: {
      bool changed = false;
      if (inst.operands[0].is_var())
        for (BaseId b : in_.andersen.pts[inst.operands[0].id])
          changed |= update(facts_.mu_in[{inst.label, b}], lookup(mem, b));
      Value ptr = value_of(inst.operands[0]);
      Value v;
      for (const auto &[obj, ts] : ptr)
        join_into(v, read(lookup(mem, obj.base), obj.key));
      for (auto &[obj, ts] : v)
        if (auto it = ptr.find(obj); it != ptr.end())
          ts.insert(it->second.begin(), it->second.end());
      return define(inst.result, std::move(v)) || changed;
    }
    case Opcode::Store: {
      Value ptr = value_of(inst.operands[0]);
      Value val = value_of(inst.operands[1]);
      std::set<BaseId> targets;
      if (inst.operands[0].is_var())
        targets.insert(in_.andersen.pts[inst.operands[0].id].begin(),
                       in_.andersen.pts[inst.operands[0].id].end());
      if (ptr.empty()) {
        for (BaseId b : targets)
          mem.erase(b);
      } else {
        bool unique = ptr.size() == 1;
        for (const auto &[obj, ts] : ptr) {
          Content c = lookup(mem, obj.base);
          bool replace = unique && in_.singletons[obj.base] && !obj.is_summary();
          Value cell = replace ? Value{} : c[obj.key];
          join_into(cell, val);
          if (cell.empty())
            c.erase(obj.key);
          else
            c[obj.key] = std::move(cell);
          assign(mem, obj.base, std::move(c));
        }
      }
      bool changed = false;
      for (BaseId b : targets)
        changed |= update(facts_.chi_out[{inst.label, b}], lookup(mem, b));
      return changed;
    }
    case Opcode::Field:
    case Opcode::Array:
      return define(inst.result, offset_access(inst));
    case Opcode::Constructor: {
      if (!prog_.types.is_polymorphic(inst.type))
        return false;
      bool changed = false;
      for (const auto &[obj, ts] : value_of(inst.operands[0]))
        changed |= init_types_[obj.base].insert(inst.type).second;
      return changed;
    }
    case Opcode::DynCast: {
      Value v;
      for (const auto &[obj, ts] : value_of(inst.operands[0])) {
        auto it = init_types_.find(obj.base);
        if (it == init_types_.end())
          continue;
        for (TypeId dyn : it->second) {
          BaseOffset r = in_.layouts.base_class_offset(dyn, inst.type);
          if (r.kind != BaseOffset::Kind::Ok)
            continue;
          ObjRef sub = in_.objects.at_offset(obj.base, static_cast<std::int64_t>(r.offset));
          if (sub == obj) {
            put(v, sub, ts);
          } else if (typed_ && !sub.is_summary()) {
            auto aggs = in_.layouts.aggregates_at(dyn, r.offset);
            put(v, sub, TypeSet(aggs.begin(), aggs.end()));
          } else {
            put(v, sub, {kUntyped});
          }
        }
      }
      return define(inst.result, std::move(v));
    }
    case Opcode::Call:
      return call(inst, mem);
    case Opcode::Ret:
    case Opcode::Br:
    case Opcode::Jmp:
      return false;
    }
    return false;
  }

  Value offset_access(const Instruction &inst) const {
    Value base = value_of(inst.operands[0]);
    Value v;
    if (inst.variable_index) {
      for (const auto &[obj, ts] : base) {
        ObjRef summary{obj.base, kSummaryKey};
        if (!typed_ || obj.is_summary()) {
          put(v, summary, {kUntyped});
          continue;
        }
        for (TypeId t : ts) {
          if (t == kUntyped || in_.layouts.layout(t).summarized) {
            put(v, summary, {kUntyped});
            continue;
          }
          for (std::uint64_t e : in_.layouts.layout(t).element_offsets) {
            ObjRef sub = in_.objects.at_offset(obj.base, obj.key + static_cast<std::int64_t>(e));
            if (sub == obj)
              put(v, sub, ts);
            else
              put(v, sub, sub.is_summary() ? TypeSet{kUntyped} : inner_types({t}, e));
          }
        }
      }
      return v;
    }
    std::uint64_t off = inst.op == Opcode::Field
                            ? in_.layouts.field_offset(inst.type, inst.field_path).value()
                            : static_cast<std::uint64_t>(inst.index) * in_.layouts.size(inst.type);
    for (const auto &[obj, ts] : base) {
      bool admitted = untyped(ts);
      for (TypeId t : ts)
        admitted = admitted || (t != kUntyped && in_.layouts.has_element_offset(t, off));
      if (!admitted)
        continue;
      if (obj.is_summary()) {
        put(v, obj, {kUntyped});
        continue;
      }
      ObjRef sub = in_.objects.at_offset(obj.base, obj.key + static_cast<std::int64_t>(off));
      if (sub == obj)
        put(v, sub, ts);
      else
        put(v, sub, sub.is_summary() ? TypeSet{kUntyped} : inner_types(ts, off));
    }
    return v;
  }

  bool call(const Instruction &inst, Memory &mem) {
    bool changed = false;
    Memory before;
    for (BaseId b : callee_footprint(inst.label, false)) {
      Content c = lookup(mem, b);
      changed |= update(facts_.mu_in[{inst.label, b}], c);
      assign(before, b, std::move(c));
    }
    changed |= update(site_mem_[inst.label], std::move(before));

    std::set<FuncId> targets;
    const Operand &callee = inst.operands[0];
    if (callee.kind == Operand::Kind::Func)
      targets.insert(callee.id);
    else
      for (const auto &[obj, ts] : value_of(callee))
        if (obj.key == 0 && in_.objects[obj.base].kind == BaseObject::Kind::Function)
          targets.insert(in_.objects[obj.base].func);
    changed |= update(callees_[inst.label], targets);
    for (FuncId g : targets)
      changed |= registered_[g].insert(inst.label).second;

    if (inst.result != kNone) {
      Value r;
      for (FuncId g : targets)
        join_into(r, returns_[g]);
      changed |= define(inst.result, std::move(r));
    }
    for (BaseId b : callee_footprint(inst.label, true)) {
      Content c;
      for (FuncId g : targets)
        join_into(c, in_.modref.exit[g].count(b) ? lookup(exit_mem_[g], b) : lookup(mem, b));
      changed |= update(facts_.chi_out[{inst.label, b}], c);
      assign(mem, b, std::move(c));
    }
    return changed;
  }

  const AnalysisInputs &in_;
  const Program &prog_;
  bool typed_;
  std::uint64_t budget_;
  std::uint64_t steps_ = 0;
  FlowFacts facts_;
  std::vector<Cfg> cfgs_;
  std::vector<std::vector<BlockId>> rpo_;
  std::vector<std::vector<Memory>> block_out_;
  std::vector<std::set<Label>> registered_;
  std::vector<Value> returns_;
  std::vector<Memory> exit_mem_;
  std::map<Label, Memory> site_mem_;
  std::map<Label, std::set<FuncId>> callees_;
  std::map<BaseId, TypeSet> init_types_;
};

} // namespace

FlowFacts dense_solve(const AnalysisInputs &in, Mode mode, std::uint64_t budget) {
  return Dense(in, mode, budget).run();
}

} // namespace structflow
