#include "structflow/ir.hpp"

#include <cassert>

namespace structflow {

namespace {

TypeDef make_primitive(std::string name, Primitive p) {
  TypeDef def;
  def.name = std::move(name);
  def.kind = TypeKind::Primitive;
  def.primitive = p;
  return def;
}

} // namespace

TypeTable::TypeTable() {
  // Primitive ids equal their enum value.
  add(make_primitive("i8", Primitive::I8));
  add(make_primitive("i16", Primitive::I16));
  add(make_primitive("i32", Primitive::I32));
  add(make_primitive("i64", Primitive::I64));
  add(make_primitive("ptr", Primitive::Ptr));
}

std::optional<TypeId> TypeTable::lookup(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end())
    return std::nullopt;
  return it->second;
}

TypeId TypeTable::add(TypeDef def) {
  assert(!by_name_.count(def.name) && "duplicate type name");
  auto id = static_cast<TypeId>(defs_.size());
  by_name_.emplace(def.name, id);
  defs_.push_back(std::move(def));
  return id;
}

TypeId TypeTable::array_of(TypeId elem, std::uint64_t count) {
  std::string name = "[" + std::to_string(count) + " x " + defs_[elem].name + "]";
  if (auto existing = lookup(name))
    return *existing;
  TypeDef def;
  def.name = std::move(name);
  def.kind = TypeKind::Array;
  def.element = elem;
  def.count = count;
  return add(std::move(def));
}

bool TypeTable::is_polymorphic(TypeId id) const {
  const TypeDef &def = defs_[id];
  if (def.kind != TypeKind::Class)
    return false;
  if (def.declares_virtual)
    return true;
  for (TypeId base : def.bases)
    if (is_polymorphic(base))
      return true;
  return false;
}

std::string_view opcode_name(Opcode op) {
  switch (op) {
  case Opcode::Alloca: return "alloca";
  case Opcode::Malloc: return "malloc";
  case Opcode::Copy: return "copy";
  case Opcode::Cast: return "cast";
  case Opcode::Load: return "load";
  case Opcode::Store: return "store";
  case Opcode::Phi: return "phi";
  case Opcode::Array: return "array";
  case Opcode::Field: return "field";
  case Opcode::Constructor: return "constructor";
  case Opcode::DynCast: return "dyncast";
  case Opcode::Call: return "call";
  case Opcode::Ret: return "ret";
  case Opcode::Br: return "br";
  case Opcode::Jmp: return "jmp";
  }
  return "?";
}

void Program::index_labels() {
  locs_.clear();
  auto place = [&](const Instruction &inst, InstLoc loc) {
    if (locs_.size() <= inst.label)
      locs_.resize(inst.label + 1);
    locs_[inst.label] = loc;
  };
  for (std::uint32_t i = 0; i < globals.size(); ++i)
    place(globals[i], InstLoc{kNone, 0, i});
  for (FuncId f = 0; f < functions.size(); ++f)
    for (BlockId b = 0; b < functions[f].blocks.size(); ++b)
      for (std::uint32_t i = 0; i < functions[f].blocks[b].insts.size(); ++i)
        place(functions[f].blocks[b].insts[i], InstLoc{f, b, i});
}

const Instruction &Program::inst(Label l) const {
  const InstLoc &at = locs_[l];
  if (at.func == kNone)
    return globals[at.index];
  return functions[at.func].blocks[at.block].insts[at.index];
}

std::optional<FuncId> Program::find_function(std::string_view name) const {
  for (FuncId f = 0; f < functions.size(); ++f)
    if (functions[f].name == name)
      return f;
  return std::nullopt;
}

std::optional<VarId> Program::find_var(std::string_view qualified) const {
  auto dot = qualified.find('.');
  std::string_view fn = dot == std::string_view::npos ? std::string_view{} : qualified.substr(0, dot);
  std::string_view name = dot == std::string_view::npos ? qualified : qualified.substr(dot + 1);
  for (VarId v = 0; v < vars.size(); ++v) {
    const VarInfo &info = vars[v];
    if (info.name != name)
      continue;
    if (dot == std::string_view::npos ? info.func == kNone
                                      : info.func != kNone && functions[info.func].name == fn)
      return v;
  }
  return std::nullopt;
}

std::string Program::var_name(VarId v) const {
  const VarInfo &info = vars[v];
  if (info.func == kNone)
    return info.name;
  return functions[info.func].name + "." + info.name;
}

} // namespace structflow
