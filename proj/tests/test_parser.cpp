#include "doctest.h"
#include "support.hpp"

#include "structflow/cfg.hpp"
#include "structflow/gen.hpp"
#include "structflow/parser.hpp"
#include "structflow/printer.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace structflow;
using sftest::read_fixture;

namespace {

ParseResult parse(const std::string &text) { return parse_program(text); }

bool has_kind(const ParseResult &r, DiagKind k) {
  for (const Diagnostic &d : r.diagnostics)
    if (d.kind == k)
      return true;
  return false;
}

std::string wrap(const std::string &body) { return "func main() {\nentry:\n" + body + "}\n"; }

std::size_t instruction_count(const Program &p) {
  std::size_t n = p.globals.size();
  for (const Function &f : p.functions)
    for (const Block &b : f.blocks)
      n += b.insts.size();
  return n;
}

} // namespace

TEST_CASE("struct declaration from the nested-structure example") {
  Program p = parse_or_throw("type A = struct { x: i32, v: i32 }\n" + wrap("  ret\n"));
  TypeId a = sftest::type_id(p, "A");
  const TypeDef &def = p.types[a];
  CHECK(def.kind == TypeKind::Struct);
  REQUIRE(def.members.size() == 2);
  CHECK(def.members[0].name == "x");
  CHECK(def.members[1].type == p.types.primitive(Primitive::I32));
}

TEST_CASE("multi-structure fixture has a frozen instruction count") {
  Program p = parse_or_throw(read_fixture("union_cast.ir"));
  CHECK(instruction_count(p) == 16);
  std::size_t casts = 0;
  for (const Block &b : p.functions[p.main].blocks)
    for (const Instruction &i : b.insts)
      casts += i.op == Opcode::Cast;
  CHECK(casts == 2);
}

TEST_CASE("class declarations") {
  Program p = parse_or_throw(read_fixture("virtual_dispatch.ir"));
  TypeId d = sftest::type_id(p, "D");
  CHECK(p.types.is_class(d));
  CHECK(p.types[d].bases.size() == 2);
  CHECK_FALSE(p.types[d].declares_virtual);
  CHECK(p.types.is_polymorphic(d));
}

TEST_CASE("redefinition is an SSA violation") {
  auto r = parse(read_fixture("bad_ssa.ir"));
  REQUIRE_FALSE(r.ok());
  CHECK(has_kind(r, DiagKind::SsaViolation));
  CHECK(r.diagnostics.front().line == 4);
}

TEST_CASE("use not dominated by its definition is an SSA violation") {
  auto r = parse(wrap("  br 0, a, b\n"
                      "a:\n  x = malloc 4\n  jmp c\n"
                      "b:\n  jmp c\n"
                      "c:\n  y = load x\n  ret\n"));
  CHECK(has_kind(r, DiagKind::SsaViolation));
  auto ok = parse(wrap("  br 0, a, b\n"
                       "a:\n  x = malloc 4\n  jmp c\n"
                       "b:\n  jmp c\n"
                       "c:\n  y = phi [x, a], [0, b]\n  ret\n"));
  CHECK(ok.ok());
}

TEST_CASE("syntax errors carry positions") {
  auto r = parse(read_fixture("bad_syntax.ir"));
  REQUIRE_FALSE(r.ok());
  CHECK(r.syntax_only());
  CHECK(r.diagnostics.front().line == 3);
  CHECK(r.diagnostics.front().column > 1);
}

TEST_CASE("resolve errors") {
  CHECK(has_kind(parse(wrap("  p = alloca Nope, 8\n  ret\n")), DiagKind::ResolveError));
  CHECK(has_kind(parse(wrap("  p = load q\n  ret\n")), DiagKind::ResolveError));
  CHECK(has_kind(parse(wrap("  call f()\n  ret\n")), DiagKind::ResolveError));
  CHECK(has_kind(parse("func f() {\nentry:\n  ret\n}\n"), DiagKind::ResolveError));
  CHECK(has_kind(parse("type A = struct { b: B }\ntype B = struct { a: A }\n" + wrap("  ret\n")),
                 DiagKind::ResolveError));
  CHECK(has_kind(parse("type A = [0 x i8]\n" + wrap("  ret\n")), DiagKind::ResolveError));
  CHECK(has_kind(parse("type S = struct { x: i8 }\ntype K = class(S) {}\n" + wrap("  ret\n")),
                 DiagKind::ResolveError));
  CHECK(has_kind(parse("type S = struct { x: i8 }\n" + wrap("  p = malloc 8\n  q = field p, S.y\n  ret\n")),
                 DiagKind::ResolveError));
}

TEST_CASE("control-flow errors") {
  CHECK(has_kind(parse(wrap("  jmp nowhere\n")), DiagKind::CfgError));
  CHECK(has_kind(parse(wrap("  p = malloc 8\n")), DiagKind::CfgError));
  CHECK(has_kind(parse(wrap("  br 0, a, b\na:\n  jmp c\nb:\n  jmp c\nc:\n  x = phi [0, a]\n  ret\n")),
                 DiagKind::CfgError));
  CHECK(has_kind(parse(wrap("  x = phi [0, entry]\n  ret\n")), DiagKind::CfgError));
  CHECK(has_kind(parse(wrap("  ret\ndead:\n  ret\n")), DiagKind::CfgError));
}

TEST_CASE("parsing is total on mangled input") {
  std::vector<std::string> sources;
  for (const char *f : {"union_cast.ir", "virtual_dispatch.ir", "interproc_store.ir", "nested_struct.ir", "failed_dyncast.ir"})
    sources.push_back(read_fixture(f));
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::string s = sources[rng() % sources.size()];
    int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits && !s.empty(); ++e) {
      std::size_t at = rng() % s.size();
      switch (rng() % 3) {
      case 0: s.erase(at, 1 + rng() % 5); break;
      case 1: s.insert(at, 1, " ,:[]{}*=x0;\n"[rng() % 13]); break;
      default: s[at] = static_cast<char>(32 + rng() % 95);
      }
    }
    ParseResult r;
    CHECK_NOTHROW(r = parse_program(s));
    CHECK(r.ok() != !r.diagnostics.empty());
  }
}

TEST_CASE("printing round-trips") {
  for (const char *f : {"union_cast.ir", "virtual_dispatch.ir", "interproc_store.ir", "nested_struct.ir", "failed_dyncast.ir", "empty.ir"}) {
    Program p = parse_or_throw(read_fixture(f));
    Program q = parse_or_throw(print_program(p));
    CHECK_MESSAGE(structurally_equal(p, q), f);
  }
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.allow_loops = seed % 2 == 0;
    Program p = generate(cfg);
    Program q = parse_or_throw(print_program(p));
    CHECK_MESSAGE(structurally_equal(p, q), "seed " << seed);
  }
}

TEST_CASE("labels are unique and deterministic") {
  std::string text = read_fixture("virtual_dispatch.ir");
  Program a = parse_or_throw(text);
  Program b = parse_or_throw(text);
  std::set<Label> seen;
  for (const Function &f : a.functions)
    for (const Block &blk : f.blocks)
      for (const Instruction &i : blk.insts)
        CHECK(seen.insert(i.label).second);
  for (const Instruction &g : a.globals)
    CHECK(seen.insert(g.label).second);
  CHECK(seen.size() == a.label_count());
  CHECK(print_program(a) == print_program(b));
}

TEST_CASE("control-flow graph shapes") {
  Program line = parse_or_throw(read_fixture("interproc_store.ir"));
  Cfg c = build_cfg(line.functions[line.main]);
  CHECK(c.size() == 1);
  CHECK(c.succs[0].empty());

  Program dia = parse_or_throw(wrap("  br 0, a, b\na:\n  jmp c\nb:\n  jmp c\nc:\n  ret\n"));
  Cfg d = build_cfg(dia.functions[dia.main]);
  CHECK(d.size() == 4);
  CHECK(d.preds[3].size() == 2);
  for (BlockId b = 0; b < d.size(); ++b)
    for (BlockId s : d.succs[b])
      CHECK(std::count(d.preds[s].begin(), d.preds[s].end(), b) == 1);
}
