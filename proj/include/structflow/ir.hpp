// ir.hpp - In-memory model of the textual pointer-analysis IR.
//
// A program is a set of type definitions, module-scope allocations and
// functions made of labeled basic blocks. Top-level variables are in SSA
// form; address-taken memory is only reached through load and store.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace structflow {

using TypeId = std::uint32_t;
using VarId = std::uint32_t;
using FuncId = std::uint32_t;
using BlockId = std::uint32_t;
using Label = std::uint32_t;

inline constexpr std::uint32_t kNone = ~0u;

enum class Primitive : std::uint8_t { I8, I16, I32, I64, Ptr };
enum class TypeKind : std::uint8_t { Primitive, Struct, Class, Array };

struct Member {
  std::string name;
  TypeId type = kNone;
};

struct TypeDef {
  std::string name;
  TypeKind kind = TypeKind::Primitive;
  Primitive primitive = Primitive::I8;
  std::vector<Member> members;   // struct, class
  std::vector<TypeId> bases;     // class
  bool declares_virtual = false; // class
  TypeId element = kNone;        // array
  std::uint64_t count = 0;       // array

  bool is_aggregate() const { return kind != TypeKind::Primitive; }
};

class TypeTable {
public:
  TypeTable();

  TypeId primitive(Primitive p) const { return static_cast<TypeId>(p); }
  std::optional<TypeId> lookup(std::string_view name) const;

  /// Adds a named type; the name must not be taken.
  TypeId add(TypeDef def);
  /// Interns the anonymous array type `[count x elem]`.
  TypeId array_of(TypeId elem, std::uint64_t count);

  const TypeDef &operator[](TypeId id) const { return defs_[id]; }
  TypeDef &mutable_def(TypeId id) { return defs_[id]; }
  std::size_t size() const { return defs_.size(); }

  /// A class is polymorphic if it declares virtual methods or inherits
  /// from a polymorphic class.
  bool is_polymorphic(TypeId id) const;
  bool is_class(TypeId id) const { return defs_[id].kind == TypeKind::Class; }

private:
  std::vector<TypeDef> defs_;
  std::unordered_map<std::string, TypeId> by_name_;
};

enum class Opcode : std::uint8_t {
  Alloca,
  Malloc,
  Copy,
  Cast,
  Load,
  Store,
  Phi,
  Array,
  Field,
  Constructor,
  DynCast,
  Call,
  Ret,
  Br,
  Jmp,
};

std::string_view opcode_name(Opcode op);

struct Operand {
  enum class Kind : std::uint8_t { Var, Func, Const };
  Kind kind = Kind::Const;
  std::uint32_t id = kNone; // VarId or FuncId
  std::int64_t value = 0;   // Const

  static Operand var(VarId v) { return {Kind::Var, v, 0}; }
  static Operand func(FuncId f) { return {Kind::Func, f, 0}; }
  static Operand constant(std::int64_t c) { return {Kind::Const, kNone, c}; }

  bool is_var() const { return kind == Kind::Var; }
  bool operator==(const Operand &) const = default;
};

// Operand layout per opcode:
//   Copy, Cast, DynCast, Load   [source]
//   Store                       [pointer, value]
//   Phi                         [incoming...]   parallel to `blocks`
//   Array, Field                [base] or [base, selector] when variable_index
//   Constructor                 [receiver]
//   Call                        [callee, args...]
//   Ret                         [] or [value]
//   Br                          [condition]      blocks = {then, else}
//   Jmp                         []               blocks = {target}
struct Instruction {
  Label label = 0;
  Opcode op = Opcode::Copy;
  VarId result = kNone;
  std::vector<Operand> operands;
  std::vector<BlockId> blocks;
  TypeId type = kNone;          // alloca, cast, dyncast, constructor, array element, field root
  std::uint64_t bytes = 0;      // alloca, malloc
  std::vector<std::string> field_path;
  bool variable_index = false;  // array/field selected by a variable
  std::int64_t index = 0;       // constant array index
  int line = 0;

  bool is_terminator() const {
    return op == Opcode::Ret || op == Opcode::Br || op == Opcode::Jmp;
  }
};

struct Block {
  std::string name;
  std::vector<Instruction> insts;
};

struct Function {
  std::string name;
  std::vector<VarId> params;
  std::vector<Block> blocks;
};

struct VarInfo {
  std::string name;
  FuncId func = kNone;   // kNone for module-scope variables
  Label def = kNone;     // kNone for parameters
  bool is_param = false;
};

struct InstLoc {
  FuncId func = kNone; // kNone for module-scope allocations
  BlockId block = 0;
  std::uint32_t index = 0;
};

struct Program {
  TypeTable types;
  std::vector<Instruction> globals;
  std::vector<Function> functions;
  std::vector<VarInfo> vars;
  FuncId main = kNone;

  /// Rebuilds the label index; call after any structural edit.
  void index_labels();
  std::size_t label_count() const { return locs_.size(); }
  const InstLoc &loc(Label l) const { return locs_[l]; }
  const Instruction &inst(Label l) const;

  std::optional<FuncId> find_function(std::string_view name) const;
  /// Looks up `func.var` or a module-scope name.
  std::optional<VarId> find_var(std::string_view qualified) const;
  /// `func.var` for locals and parameters, the bare name for globals.
  std::string var_name(VarId v) const;

private:
  std::vector<InstLoc> locs_;
};

} // namespace structflow
