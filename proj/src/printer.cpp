#include "structflow/printer.hpp"

#include <sstream>

namespace structflow {

namespace {

std::string operand_text(const Program &prog, const Operand &op) {
  switch (op.kind) {
  case Operand::Kind::Var: return prog.vars[op.id].name;
  case Operand::Kind::Func: return prog.functions[op.id].name;
  case Operand::Kind::Const: return std::to_string(op.value);
  }
  return "?";
}

bool is_user_type(const TypeDef &def) {
  return def.kind != TypeKind::Primitive && !def.name.empty() && def.name.front() != '[';
}

} // namespace

std::string print_instruction(const Program &prog, const Instruction &inst) {
  const auto &types = prog.types;
  auto op = [&](std::size_t i) { return operand_text(prog, inst.operands[i]); };
  auto block = [&](std::size_t i, FuncId f) { return prog.functions[f].blocks[inst.blocks[i]].name; };
  std::ostringstream os;
  if (inst.result != kNone)
    os << prog.vars[inst.result].name << " = ";
  FuncId f = inst.result != kNone ? prog.vars[inst.result].func : kNone;
  if (f == kNone && inst.label < prog.label_count())
    f = prog.loc(inst.label).func;
  switch (inst.op) {
  case Opcode::Alloca: os << "alloca " << types[inst.type].name << ", " << inst.bytes; break;
  case Opcode::Malloc: os << "malloc " << inst.bytes; break;
  case Opcode::Copy: os << op(0); break;
  case Opcode::Cast: os << "cast " << types[inst.type].name << "*, " << op(0); break;
  case Opcode::DynCast: os << "dyncast " << types[inst.type].name << "*, " << op(0); break;
  case Opcode::Load: os << "load " << op(0); break;
  case Opcode::Store: os << "store " << op(0) << ", " << op(1); break;
  case Opcode::Phi:
    os << "phi ";
    for (std::size_t i = 0; i < inst.operands.size(); ++i)
      os << (i ? ", " : "") << "[" << op(i) << ", " << block(i, f) << "]";
    break;
  case Opcode::Array:
    os << "array " << types[inst.type].name << ", " << op(0) << ", ";
    if (inst.variable_index)
      os << op(1);
    else
      os << inst.index;
    break;
  case Opcode::Field:
    os << "field " << op(0) << ", ";
    if (inst.variable_index) {
      os << op(1);
    } else {
      os << types[inst.type].name;
      for (const std::string &p : inst.field_path)
        os << "." << p;
    }
    break;
  case Opcode::Constructor: os << "constructor " << types[inst.type].name << ", " << op(0); break;
  case Opcode::Call:
    os << "call " << op(0) << "(";
    for (std::size_t i = 1; i < inst.operands.size(); ++i)
      os << (i > 1 ? ", " : "") << op(i);
    os << ")";
    break;
  case Opcode::Ret:
    os << "ret";
    if (!inst.operands.empty())
      os << " " << op(0);
    break;
  case Opcode::Br: os << "br " << op(0) << ", " << block(0, f) << ", " << block(1, f); break;
  case Opcode::Jmp: os << "jmp " << block(0, f); break;
  }
  return os.str();
}

std::string print_program(const Program &prog) {
  std::ostringstream os;
  const auto &types = prog.types;
  for (TypeId t = 0; t < types.size(); ++t) {
    const TypeDef &def = types[t];
    if (!is_user_type(def))
      continue;
    os << "type " << def.name << " = ";
    if (def.kind == TypeKind::Array) {
      os << "[" << def.count << " x " << types[def.element].name << "]\n";
      continue;
    }
    if (def.kind == TypeKind::Struct) {
      os << "struct ";
    } else {
      os << "class(";
      for (std::size_t i = 0; i < def.bases.size(); ++i)
        os << (i ? ", " : "") << types[def.bases[i]].name;
      os << ") " << (def.declares_virtual ? "virtual " : "");
    }
    os << "{";
    for (std::size_t i = 0; i < def.members.size(); ++i)
      os << (i ? ", " : " ") << def.members[i].name << ": " << types[def.members[i].type].name;
    os << (def.members.empty() ? "}" : " }") << "\n";
  }
  for (const Instruction &g : prog.globals)
    os << "global " << prog.vars[g.result].name << " = alloca " << types[g.type].name << ", " << g.bytes
       << "\n";
  for (const Function &fn : prog.functions) {
    os << "\nfunc " << fn.name << "(";
    for (std::size_t i = 0; i < fn.params.size(); ++i)
      os << (i ? ", " : "") << prog.vars[fn.params[i]].name;
    os << ") {\n";
    for (const Block &b : fn.blocks) {
      os << b.name << ":\n";
      for (const Instruction &inst : b.insts)
        os << "  " << print_instruction(prog, inst) << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

bool structurally_equal(const Program &a, const Program &b) {
  // Printing is canonical, so comparing the texts compares the structure.
  return print_program(a) == print_program(b);
}

} // namespace structflow
