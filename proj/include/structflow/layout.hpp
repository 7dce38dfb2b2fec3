// layout.hpp - 64-bit C-style layouts with nested aggregates unfolded.

#pragma once

#include "structflow/ir.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace structflow {

/// Where a member, base subobject or vtable slot sits inside an aggregate.
struct Placement {
  enum class Kind : std::uint8_t { VtableSlot, Base, Member };
  Kind kind = Kind::Member;
  std::string name;
  TypeId type = kNone;
  std::uint64_t offset = 0;
};

struct TypeLayout {
  TypeId type = kNone;
  std::uint64_t size = 0;
  std::uint64_t align = 1;
  /// Offsets of every basic element after full unfolding (pt.o).
  std::vector<std::uint64_t> element_offsets;
  /// Set when a large array made the enumeration stop early; membership
  /// queries stay exact through LayoutTable::has_element_offset.
  bool summarized = false;
  std::vector<Placement> placements; // struct and class only
  /// Transitive base classes with every offset they occur at (reflexive).
  std::map<TypeId, std::vector<std::uint64_t>> base_offsets;
};

struct BaseOffset {
  enum class Kind : std::uint8_t { Ok, NotRelated, Ambiguous };
  Kind kind = Kind::NotRelated;
  std::uint64_t offset = 0;

  bool ok() const { return kind == Kind::Ok; }
};

class LayoutTable {
public:
  static constexpr std::size_t kUnfoldLimit = 4096;

  explicit LayoutTable(const TypeTable &types);

  const TypeTable &types() const { return *types_; }
  const TypeLayout &layout(TypeId t) const { return layouts_[t]; }
  std::uint64_t size(TypeId t) const { return layouts_[t].size; }

  /// Exact membership test of `off` in pt.o(t), also for summarized layouts.
  bool has_element_offset(TypeId t, std::uint64_t off) const;
  /// Aggregates embedded by value in t that start exactly at off, t included
  /// at 0. Sorted by id.
  std::vector<TypeId> aggregates_at(TypeId t, std::uint64_t off) const;
  /// Offset of a member/base path relative to the start of root.
  std::optional<std::uint64_t> field_offset(TypeId root, const std::vector<std::string> &path) const;
  BaseOffset base_class_offset(TypeId derived, TypeId base) const;

private:
  void compute(TypeId t);

  const TypeTable *types_;
  std::vector<TypeLayout> layouts_;
  std::vector<bool> done_;
};

} // namespace structflow
