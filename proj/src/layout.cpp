#include "structflow/layout.hpp"

#include <algorithm>
#include <cassert>

namespace structflow {

namespace {

std::uint64_t primitive_size(Primitive p) {
  switch (p) {
  case Primitive::I8: return 1;
  case Primitive::I16: return 2;
  case Primitive::I32: return 4;
  case Primitive::I64: return 8;
  case Primitive::Ptr: return 8;
  }
  return 1;
}

std::uint64_t round_up(std::uint64_t v, std::uint64_t align) { return (v + align - 1) / align * align; }

} // namespace

LayoutTable::LayoutTable(const TypeTable &types)
    : types_(&types), layouts_(types.size()), done_(types.size(), false) {
  for (TypeId t = 0; t < types.size(); ++t)
    compute(t);
}

void LayoutTable::compute(TypeId t) {
  if (done_[t])
    return;
  const TypeDef &def = (*types_)[t];
  TypeLayout &out = layouts_[t];
  out.type = t;

  if (def.kind == TypeKind::Primitive) {
    out.size = out.align = primitive_size(def.primitive);
    out.element_offsets = {0};
    done_[t] = true;
    return;
  }

  if (def.kind == TypeKind::Array) {
    compute(def.element);
    const TypeLayout &elem = layouts_[def.element];
    out.align = elem.align;
    out.size = elem.size * def.count;
    out.summarized = elem.summarized;
    for (std::uint64_t k = 0; k < def.count; ++k) {
      if (out.element_offsets.size() + elem.element_offsets.size() > kUnfoldLimit) {
        out.summarized = true;
        break;
      }
      for (std::uint64_t e : elem.element_offsets)
        out.element_offsets.push_back(k * elem.size + e);
    }
    done_[t] = true;
    return;
  }

  // Struct or class. Bases first, then an optional vtable slot, then members.
  std::uint64_t cursor = 0;
  std::uint64_t align = 1;
  auto place = [&](Placement::Kind kind, std::string name, TypeId type) {
    std::uint64_t a, s;
    if (type == kNone) { // vtable slot
      a = s = 8;
    } else {
      compute(type);
      a = layouts_[type].align;
      s = layouts_[type].size;
    }
    cursor = round_up(cursor, a);
    out.placements.push_back({kind, std::move(name), type, cursor});
    cursor += s;
    align = std::max(align, a);
  };

  bool polymorphic_base = false;
  for (TypeId b : def.bases)
    polymorphic_base = polymorphic_base || types_->is_polymorphic(b);
  if (def.kind == TypeKind::Class && types_->is_polymorphic(t) && !polymorphic_base)
    place(Placement::Kind::VtableSlot, "vptr", kNone);
  for (TypeId b : def.bases)
    place(Placement::Kind::Base, (*types_)[b].name, b);
  for (const Member &m : def.members)
    place(Placement::Kind::Member, m.name, m.type);

  out.align = align;
  out.size = cursor == 0 ? 1 : round_up(cursor, align);

  for (const Placement &p : out.placements) {
    if (p.type == kNone) {
      out.element_offsets.push_back(p.offset);
      continue;
    }
    const TypeLayout &inner = layouts_[p.type];
    out.summarized = out.summarized || inner.summarized;
    for (std::uint64_t e : inner.element_offsets) {
      if (out.element_offsets.size() >= kUnfoldLimit) {
        out.summarized = true;
        break;
      }
      out.element_offsets.push_back(p.offset + e);
    }
  }
  // Bases and members never overlap, but keep the set property explicit.
  std::sort(out.element_offsets.begin(), out.element_offsets.end());
  out.element_offsets.erase(std::unique(out.element_offsets.begin(), out.element_offsets.end()),
                            out.element_offsets.end());

  if (def.kind == TypeKind::Class) {
    out.base_offsets[t].push_back(0);
    for (const Placement &p : out.placements) {
      if (p.kind != Placement::Kind::Base)
        continue;
      for (const auto &[bb, offs] : layouts_[p.type].base_offsets)
        for (std::uint64_t o : offs)
          out.base_offsets[bb].push_back(p.offset + o);
    }
  }
  done_[t] = true;
}

bool LayoutTable::has_element_offset(TypeId t, std::uint64_t off) const {
  const TypeLayout &l = layouts_[t];
  if (off >= l.size)
    return false;
  if (!l.summarized)
    return std::binary_search(l.element_offsets.begin(), l.element_offsets.end(), off);
  const TypeDef &def = (*types_)[t];
  if (def.kind == TypeKind::Array) {
    std::uint64_t esz = layouts_[def.element].size;
    return has_element_offset(def.element, off % esz);
  }
  for (const Placement &p : l.placements) {
    if (p.type == kNone) {
      if (off == p.offset)
        return true;
      continue;
    }
    if (off >= p.offset && off < p.offset + layouts_[p.type].size)
      return has_element_offset(p.type, off - p.offset);
  }
  return false;
}

std::vector<TypeId> LayoutTable::aggregates_at(TypeId t, std::uint64_t off) const {
  std::vector<TypeId> out;
  auto walk = [&](auto &&self, TypeId ty, std::uint64_t o) -> void {
    const TypeDef &def = (*types_)[ty];
    if (!def.is_aggregate() || o >= layouts_[ty].size)
      return;
    if (o == 0)
      out.push_back(ty);
    if (def.kind == TypeKind::Array) {
      self(self, def.element, o % layouts_[def.element].size);
      return;
    }
    for (const Placement &p : layouts_[ty].placements)
      if (p.type != kNone && o >= p.offset && o < p.offset + layouts_[p.type].size)
        self(self, p.type, o - p.offset);
  };
  walk(walk, t, off);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<std::uint64_t> LayoutTable::field_offset(TypeId root,
                                                       const std::vector<std::string> &path) const {
  std::uint64_t off = 0;
  TypeId cur = root;
  for (const std::string &name : path) {
    const TypeLayout &l = layouts_[cur];
    auto it = std::find_if(l.placements.begin(), l.placements.end(), [&](const Placement &p) {
      return p.kind == Placement::Kind::Member && p.name == name;
    });
    if (it == l.placements.end())
      it = std::find_if(l.placements.begin(), l.placements.end(), [&](const Placement &p) {
        return p.kind == Placement::Kind::Base && p.name == name;
      });
    if (it == l.placements.end())
      return std::nullopt;
    off += it->offset;
    cur = it->type;
  }
  return off;
}

BaseOffset LayoutTable::base_class_offset(TypeId derived, TypeId base) const {
  const auto &bases = layouts_[derived].base_offsets;
  auto it = bases.find(base);
  if (it == bases.end())
    return {BaseOffset::Kind::NotRelated, 0};
  if (it->second.size() > 1)
    return {BaseOffset::Kind::Ambiguous, 0};
  return {BaseOffset::Kind::Ok, it->second.front()};
}

} // namespace structflow
