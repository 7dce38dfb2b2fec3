#include "doctest.h"
#include "support.hpp"

#include "structflow/cfg.hpp"
#include "structflow/gen.hpp"
#include "structflow/memssa.hpp"

#include <algorithm>
#include <optional>

using namespace structflow;

namespace {

const MuChi *find(const std::vector<MuChi> &list, BaseId b) {
  for (const MuChi &m : list)
    if (m.obj == b)
      return &m;
  return nullptr;
}

std::set<BaseId> objs(const std::vector<MuChi> &list) {
  std::set<BaseId> s;
  for (const MuChi &m : list)
    s.insert(m.obj);
  return s;
}

// Walks the CFG forward carrying the current version of every object and
// checks each µ/χ operand and φ incoming value against it. Blocks without a
// φ for an object must see the same version from every predecessor.
void check_versions(const AnalysisInputs &in, FuncId f) {
  const Program &p = in.program;
  const AnnotatedProgram &ap = in.annotated;
  const Function &fn = p.functions[f];
  Cfg cfg = build_cfg(fn);
  for (const MuChi &e : ap.entry[f]) {
    BaseId o = e.obj;
    std::vector<std::optional<VersionId>> out(fn.blocks.size());
    std::vector<std::optional<VersionId>> phi_at(fn.blocks.size());
    for (VersionId v : ap.phis[f])
      if (ap.versions[v].obj == o)
        phi_at[ap.versions[v].block] = v;

    auto block_in = [&](BlockId b) -> std::optional<VersionId> {
      if (phi_at[b])
        return phi_at[b];
      if (b == 0)
        return e.out;
      std::optional<VersionId> v;
      for (BlockId pr : cfg.preds[b])
        if (out[pr])
          v = out[pr];
      return v;
    };
    auto run = [&](BlockId b, bool check) {
      std::optional<VersionId> cur = block_in(b);
      for (const Instruction &inst : fn.blocks[b].insts) {
        if (const MuChi *m = find(ap.mu[inst.label], o))
          if (check)
            CHECK(m->in == *cur);
        if (const MuChi *c = find(ap.chi[inst.label], o)) {
          if (check)
            CHECK(c->in == *cur);
          cur = c->out;
        }
      }
      return cur;
    };
    for (std::size_t round = 0; round <= fn.blocks.size(); ++round)
      for (BlockId b : reverse_post_order(cfg))
        out[b] = run(b, false);
    for (BlockId b = 0; b < fn.blocks.size(); ++b) {
      REQUIRE(out[b]);
      if (!phi_at[b] && b != 0)
        for (BlockId pr : cfg.preds[b])
          CHECK(out[pr] == out[cfg.preds[b].front()]);
      if (phi_at[b]) {
        const MemVersion &phi = ap.versions[*phi_at[b]];
        REQUIRE(phi.incoming.size() == cfg.preds[b].size());
        for (std::size_t j = 0; j < cfg.preds[b].size(); ++j)
          CHECK(phi.incoming[j] == out[cfg.preds[b][j]]);
      }
      run(b, true);
    }
  }
}

void check_annotations(const AnalysisInputs &in) {
  const Program &p = in.program;
  for (FuncId f = 0; f < p.functions.size(); ++f) {
    for (const Block &b : p.functions[f].blocks)
      for (const Instruction &inst : b.insts) {
        const auto &mu = in.annotated.mu[inst.label];
        const auto &chi = in.annotated.chi[inst.label];
        if (inst.op == Opcode::Load && inst.operands[0].is_var()) {
          const auto &pts = in.andersen.pts[inst.operands[0].id];
          CHECK(objs(mu) == std::set<BaseId>(pts.begin(), pts.end()));
        }
        if (inst.op == Opcode::Store && inst.operands[0].is_var()) {
          const auto &pts = in.andersen.pts[inst.operands[0].id];
          CHECK(objs(chi) == std::set<BaseId>(pts.begin(), pts.end()));
        }
        if (inst.op == Opcode::Ret)
          CHECK(objs(mu) == in.modref.exit[f]);
      }
    check_versions(in, f);
  }
  // Every use of a version has an edge from its definition.
  const ValueFlowGraph &g = in.vfg;
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> indirect;
  for (const VfgEdge &e : g.edges)
    if (e.kind == EdgeKind::Indirect)
      indirect.insert({e.from, e.to, e.what});
  for (Label l = 0; l < p.label_count(); ++l) {
    const Instruction &inst = p.inst(l);
    if (inst.op == Opcode::Ret || inst.op == Opcode::Call)
      continue;
    for (const MuChi &m : in.annotated.mu[l])
      CHECK(indirect.count({g.def_of_version[m.in], g.node_of_label[l], m.in}));
    for (const MuChi &c : in.annotated.chi[l])
      CHECK(indirect.count({g.def_of_version[c.in], g.node_of_label[l], c.in}));
  }
  for (VersionId v = 0; v < in.annotated.versions.size(); ++v)
    CHECK(g.def_of_version[v] != kNone);
}

BaseId site(const AnalysisInputs &in, const char *var) {
  return in.objects.of_site(in.program.vars[*in.program.find_var(var)].def);
}

} // namespace

TEST_CASE("objects crossing a call") {
  auto in = sftest::prepare_fixture("interproc_store.ir");
  const Program &p = in->program;
  BaseId o = site(*in, "main.p"), o2 = site(*in, "main.q"), c = site(*in, "main.c");
  FuncId foo = *p.find_function("foo");

  // µ(o), µ(o') before the call; o = χ(o) after it.
  Label call = kNone;
  for (const Instruction &i : p.functions[p.main].blocks[0].insts)
    if (i.op == Opcode::Call)
      call = i.label;
  CHECK(objs(in->annotated.mu[call]) == std::set<BaseId>{o, o2});
  CHECK(objs(in->annotated.chi[call]) == std::set<BaseId>{o});

  // foo receives both objects at entry and returns o.
  CHECK(objs(in->annotated.entry[foo]) == std::set<BaseId>{o, o2});
  Label ret = in->annotated.rets[foo].front();
  CHECK(objs(in->annotated.mu[ret]) == std::set<BaseId>{o});

  // The load of p after the call reads the version the call defined.
  Label load_r = p.vars[*p.find_var("main.r")].def;
  const MuChi *m = find(in->annotated.mu[load_r], o);
  REQUIRE(m);
  CHECK(m->in == find(in->annotated.chi[call], o)->out);

  // c never reaches foo.
  CHECK_FALSE(in->modref.entry[foo].count(c));
  check_annotations(*in);
}

TEST_CASE("object phi at a join") {
  auto in = sftest::prepare_text("func main() {\nentry:\n  p = alloca ptr, 8\n  br 0, a, b\n"
                                 "a:\n  store p, p\n  jmp c\nb:\n  jmp c\nc:\n  x = load p\n  ret\n}\n");
  const auto &phis = in->annotated.phis[in->program.main];
  REQUIRE(phis.size() == 1);
  const MemVersion &phi = in->annotated.versions[phis[0]];
  CHECK(phi.block == 3);
  CHECK(phi.incoming.size() == 2);
  Label load = in->program.vars[*in->program.find_var("main.x")].def;
  CHECK(in->annotated.mu[load][0].in == phis[0]);
  check_annotations(*in);
}

TEST_CASE("no phi without a store") {
  auto in = sftest::prepare_text("func main() {\nentry:\n  p = alloca ptr, 8\n  br 0, a, b\n"
                                 "a:\n  jmp c\nb:\n  jmp c\nc:\n  x = load p\n  ret\n}\n");
  CHECK(in->annotated.phis[in->program.main].empty());
  check_annotations(*in);
}

TEST_CASE("memory SSA matches brute-force reaching versions") {
  for (const char *f : {"union_cast.ir", "virtual_dispatch.ir", "nested_struct.ir", "failed_dyncast.ir"})
    check_annotations(*sftest::prepare_fixture(f));
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.allow_loops = seed % 2 == 1;
    cfg.max_instructions = 60;
    check_annotations(*prepare(generate(cfg)));
  }
}
