#include "structflow/objects.hpp"

#include <algorithm>

namespace structflow {

std::string_view mode_name(Mode m) { return m == Mode::MtoSS ? "mto-ss" : "sparse"; }

bool join_into(Value &into, const Value &from) {
  bool changed = false;
  for (const auto &[obj, ts] : from) {
    auto [it, inserted] = into.try_emplace(obj, ts);
    if (inserted) {
      changed = true;
      continue;
    }
    for (TypeId t : ts)
      changed |= it->second.insert(t).second;
  }
  return changed;
}

bool join_into(Content &into, const Content &from) {
  bool changed = false;
  for (const auto &[key, v] : from) {
    if (v.empty())
      continue;
    auto [it, inserted] = into.try_emplace(key, v);
    if (inserted)
      changed = true;
    else
      changed |= join_into(it->second, v);
  }
  return changed;
}

bool includes(const Value &big, const Value &small) {
  for (const auto &[obj, ts] : small) {
    auto it = big.find(obj);
    if (it == big.end() || !std::includes(it->second.begin(), it->second.end(), ts.begin(), ts.end()))
      return false;
  }
  return true;
}

bool includes(const Content &big, const Content &small) {
  for (const auto &[key, v] : small) {
    if (v.empty())
      continue;
    auto it = big.find(key);
    if (it == big.end() || !includes(it->second, v))
      return false;
  }
  return true;
}

Value read_cell(const Content &c, FieldKey key) {
  Value out;
  if (key == kSummaryKey) {
    for (const auto &[k, v] : c)
      join_into(out, v);
    return out;
  }
  if (auto it = c.find(key); it != c.end())
    join_into(out, it->second);
  if (auto it = c.find(kSummaryKey); it != c.end())
    join_into(out, it->second);
  return out;
}

ObjectTable::ObjectTable(const Program &prog, const LayoutTable &layouts) {
  auto add_site = [&](const Instruction &inst, BaseObject::Kind kind, FuncId func) {
    BaseObject o;
    o.kind = kind;
    o.site = inst.label;
    o.func = func;
    o.name = prog.var_name(inst.result);
    if (inst.op == Opcode::Alloca) {
      o.type = inst.type;
      o.size = std::max<std::uint64_t>(inst.bytes, layouts.size(inst.type));
    } else {
      o.size = inst.bytes;
    }
    by_site_.emplace(inst.label, static_cast<BaseId>(bases_.size()));
    bases_.push_back(std::move(o));
  };
  for (const Instruction &g : prog.globals)
    add_site(g, BaseObject::Kind::Global, kNone);
  for (FuncId f = 0; f < prog.functions.size(); ++f)
    for (const Block &b : prog.functions[f].blocks)
      for (const Instruction &inst : b.insts) {
        if (inst.op == Opcode::Alloca)
          add_site(inst, BaseObject::Kind::Stack, f);
        else if (inst.op == Opcode::Malloc)
          add_site(inst, BaseObject::Kind::Heap, f);
      }
  for (FuncId f = 0; f < prog.functions.size(); ++f) {
    BaseObject o;
    o.kind = BaseObject::Kind::Function;
    o.func = f;
    o.size = 1;
    o.name = "fn:" + prog.functions[f].name;
    by_func_.push_back(static_cast<BaseId>(bases_.size()));
    bases_.push_back(std::move(o));
  }
}

ObjRef ObjectTable::at_offset(BaseId b, std::int64_t abs) const {
  if (abs == 0)
    return {b, 0};
  if (abs < 0 || static_cast<std::uint64_t>(abs) >= bases_[b].size)
    return {b, kSummaryKey};
  return {b, abs};
}

std::string ObjectTable::name(ObjRef r) const {
  if (r.key == 0)
    return bases_[r.base].name;
  if (r.key == kSummaryKey)
    return bases_[r.base].name + "+*";
  return bases_[r.base].name + "+" + std::to_string(r.key);
}

std::vector<std::string> visible_types(const TypeSet &ts, const TypeTable &types) {
  std::vector<std::string> out;
  for (TypeId t : ts)
    if (t != kUntyped)
      out.push_back(types[t].name);
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace structflow
