// objects.hpp - Abstract objects, type sets and the value lattice.
//
// Every SSA value (a top-level variable or one version of an object's
// memory) is a Value: a map from the abstract objects it may point to onto
// the type set each object carries at the defining node. Pointing to an
// object is the same as having an entry for it.

#pragma once

#include "structflow/ir.hpp"
#include "structflow/layout.hpp"

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace structflow {

using BaseId = std::uint32_t;
/// Byte offset of a sub-object inside its base; 0 is the base itself.
using FieldKey = std::int64_t;
inline constexpr FieldKey kSummaryKey = -1;

/// Internal marker for "no structure known". Never reported: a type set
/// holding only this marker prints as empty.
inline constexpr TypeId kUntyped = 0xFFFFFFFEu;

enum class Mode : std::uint8_t { MtoSS, Sparse };

std::string_view mode_name(Mode m);

struct ObjRef {
  BaseId base = 0;
  FieldKey key = 0;

  bool is_base() const { return key == 0; }
  bool is_summary() const { return key == kSummaryKey; }
  auto operator<=>(const ObjRef &) const = default;
};

using TypeSet = std::set<TypeId>;
using Value = std::map<ObjRef, TypeSet>;
using Content = std::map<FieldKey, Value>;

/// Joins `from` into `into`; true when `into` grew.
bool join_into(Value &into, const Value &from);
bool join_into(Content &into, const Content &from);
bool includes(const Value &big, const Value &small);
bool includes(const Content &big, const Content &small);

/// Reads the memory cell `key` of a content map: the field itself plus the
/// summary cell; reading the summary joins every cell.
Value read_cell(const Content &c, FieldKey key);

struct BaseObject {
  enum class Kind : std::uint8_t { Global, Stack, Heap, Function };
  Kind kind = Kind::Heap;
  Label site = kNone;  // allocation label, kNone for functions
  FuncId func = kNone; // owning function, or the function itself
  TypeId type = kNone; // declared type for alloca sites
  std::uint64_t size = 0;
  std::string name;
};

class ObjectTable {
public:
  ObjectTable(const Program &prog, const LayoutTable &layouts);

  std::size_t size() const { return bases_.size(); }
  const BaseObject &operator[](BaseId b) const { return bases_[b]; }
  BaseId of_site(Label l) const { return by_site_.at(l); }
  BaseId of_function(FuncId f) const { return by_func_[f]; }
  bool is_function(BaseId b) const { return bases_[b].kind == BaseObject::Kind::Function; }

  /// Sub-object at absolute byte offset `abs`; offsets past the allocation
  /// collapse into the summary sub-object.
  ObjRef at_offset(BaseId b, std::int64_t abs) const;
  std::string name(ObjRef r) const;
  std::string name(BaseId b) const { return bases_[b].name; }

private:
  std::vector<BaseObject> bases_;
  std::map<Label, BaseId> by_site_;
  std::vector<BaseId> by_func_;
};

/// Type set rendered for reports: marker dropped, names sorted.
std::vector<std::string> visible_types(const TypeSet &ts, const TypeTable &types);

} // namespace structflow
