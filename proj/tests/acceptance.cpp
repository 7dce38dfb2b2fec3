// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Takes the path of the structflow driver as its argument
// (needed for the bench criterion).

#include "support.hpp"

#include "structflow/alias.hpp"
#include "structflow/facts.hpp"
#include "structflow/gen.hpp"
#include "structflow/layout.hpp"
#include "structflow/oracle.hpp"

#include "json.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

using namespace structflow;
using sftest::objects_of;
using sftest::prepare_fixture;
using sftest::pt;
using sftest::types_of;
using Names = std::set<std::string>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double x, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

AliasVerdict pair_verdict(const AliasReport &r, const std::string &a, const std::string &b) {
  for (const AliasPair &p : r.pairs)
    if ((p.a == a && p.b == b) || (p.a == b && p.b == a))
      return p.verdict;
  return AliasVerdict::NoAlias;
}

AnalysisState run(const AnalysisInputs &in, Mode m) {
  SolveOptions o;
  o.mode = m;
  return solve(in, o);
}

// One object clone per (object, declared pointer type): what an analysis
// that gives every object a single structure would conclude.
AliasVerdict cloned_verdict(const AnalysisInputs &in, const AnalysisState &st, const char *a,
                            TypeId ta, const char *b, TypeId tb) {
  for (const auto &[x, tx] : pt(in, st, a))
    for (const auto &[y, ty] : pt(in, st, b))
      if (overlaps(x, y) && ta == tb)
        return AliasVerdict::MayAlias;
  return AliasVerdict::NoAlias;
}

Outcome multi_structure() {
  auto t0 = Clock::now();
  auto in = prepare_fixture("union_cast.ir");
  AnalysisState st = run(*in, Mode::MtoSS);
  AliasReport r = alias_report(*in, st);
  double ms = ms_since(t0);

  bool pq = pair_verdict(r, "main.p", "main.q") == AliasVerdict::MayAlias;
  bool fields = pair_verdict(r, "main.s1", "main.str") == AliasVerdict::MayAlias;
  Names at_cast = types_of(*in, pt(*in, st, "main.q"), "main.o");
  bool exact = objects_of(*in, pt(*in, st, "main.q")) == Names{"main.o"} && at_cast == Names{"T1", "T2"};
  TypeId t1 = sftest::type_id(in->program, "T1"), t2 = sftest::type_id(in->program, "T2");
  bool clone_says_no = cloned_verdict(*in, st, "main.p", t1, "main.q", t2) == AliasVerdict::NoAlias;
  std::ostringstream d;
  d << "(p,q) " << (pq ? "may" : "no") << "-alias, (s1,str) " << (fields ? "may" : "no")
    << "-alias, pt_t(o) at q's cast = {";
  for (const std::string &t : at_cast)
    d << (t == *at_cast.begin() ? "" : ",") << t;
  d << "}, per-type clones would answer " << (clone_says_no ? "no-alias" : "may-alias") << ", "
    << fmt(ms) << " ms";
  return {pq && fields && exact && clone_says_no && ms < 1000, d.str()};
}

Outcome dispatch() {
  auto t0 = Clock::now();
  auto in = prepare_fixture("virtual_dispatch.ir");
  AnalysisState st = run(*in, Mode::MtoSS);
  double ms = ms_since(t0);
  const Program &p = in->program;

  // The two indirect calls, in program order.
  std::vector<std::vector<FuncId>> calls;
  for (const Block &b : p.functions[p.main].blocks)
    for (const Instruction &i : b.insts)
      if (i.op == Opcode::Call)
        calls.push_back(st.callees.count(i.label) ? st.callees.at(i.label) : std::vector<FuncId>{});
  auto names = [&](const std::vector<FuncId> &fs) {
    Names n;
    for (FuncId f : fs)
      n.insert(p.functions[f].name);
    return n;
  };
  bool ok = calls.size() == 2 && names(calls[0]) == Names{"L_f"} && names(calls[1]) == Names{"R_f"};
  Names ri = objects_of(*in, pt(*in, st, "main.ri"));
  ok = ok && ri == Names{"main.mem+8"} && ms < 1000;
  std::ostringstream d;
  d << "baseL->f() -> {" << (calls.size() > 0 ? *names(calls[0]).begin() : "") << "}, ri->f() -> {"
    << (calls.size() > 1 && !calls[1].empty() ? *names(calls[1]).begin() : "") << "}, ri -> "
    << (ri.empty() ? "{}" : *ri.begin()) << " (o1,8), " << fmt(ms) << " ms";
  return {ok, d.str()};
}

Outcome nested() {
  auto in = prepare_fixture("nested_struct.ir");
  TypeId b = sftest::type_id(in->program, "B");
  const auto &offs = in->layouts.layout(b).element_offsets;
  AnalysisState st = run(*in, Mode::MtoSS);
  Names q = objects_of(*in, pt(*in, st, "main.q"));
  Names types = types_of(*in, pt(*in, st, "main.q"), "main.m+8");
  bool ok = offs == std::vector<std::uint64_t>{0, 8, 12} && q == Names{"main.m+8"} && types.count("A");
  std::ostringstream d;
  d << "element_offsets(B) = {";
  for (std::size_t i = 0; i < offs.size(); ++i)
    d << (i ? "," : "") << offs[i];
  d << "}, q -> " << (q.empty() ? "{}" : *q.begin()) << " with A " << (types.count("A") ? "in" : "not in")
    << " pt_t";
  return {ok, d.str()};
}

Outcome failed_dyncast() {
  auto in = prepare_fixture("failed_dyncast.ir");
  AnalysisState st = run(*in, Mode::MtoSS);
  TypeId ud = sftest::type_id(in->program, "UD");
  std::size_t gained = 0;
  sftest::for_each_type_set(st, [&](ObjRef, const TypeSet &ts) { gained += ts.count(ud); });
  bool empty = pt(*in, st, "main.uD").empty();
  return {empty && gained == 0, std::string("pts(uD) ") + (empty ? "= {}" : "non-empty") +
                                    ", type sets holding UD: " + std::to_string(gained)};
}

Outcome update_branches() {
  ObjRef o{0, 0}, other{1, 0}, a{2, 0}, b{3, 0};
  Value old_v{{a, {}}}, new_v{{b, {}}}, both{{a, {}}, {b, {}}};
  bool strong = strong_update({{o, {}}}, new_v, old_v, o, true) == new_v;
  bool unchanged = strong_update({}, new_v, old_v, o, true) == old_v;
  bool weak = strong_update({{o, {}}}, new_v, old_v, o, false) == both &&
              strong_update({{o, {}}, {other, {}}}, new_v, old_v, o, true) == both;
  std::ostringstream d;
  d << "strong " << (strong ? "ok" : "wrong") << ", unchanged " << (unchanged ? "ok" : "wrong")
    << ", weak " << (weak ? "ok" : "wrong");
  return {strong && unchanged && weak, d.str()};
}

Outcome differential() {
  auto t0 = Clock::now();
  const int n = 1000;
  int agree = 0;
  std::string first;
  for (int i = 0; i < n; ++i) {
    GenConfig cfg;
    cfg.seed = 100000 + static_cast<std::uint64_t>(i);
    cfg.max_instructions = 60;
    auto in = prepare(generate(cfg));
    bool ok = true;
    for (Mode m : {Mode::MtoSS, Mode::Sparse}) {
      auto d = first_divergence(*in, facts_from_state(*in, run(*in, m)), dense_solve(*in, m));
      if (d && first.empty())
        first = "seed " + std::to_string(cfg.seed) + ": " + *d;
      ok = ok && !d;
    }
    agree += ok;
  }
  double s = ms_since(t0) / 1000;
  std::string detail = std::to_string(agree) + "/" + std::to_string(n) +
                       " loop-free programs agree in both modes, " + fmt(s) + " s";
  if (!first.empty())
    detail += "; first divergence " + first;
  return {agree == n && s < 120, detail};
}

// (b,k) is covered by the same location or by the summary of b.
bool covered(const Value &big, ObjRef r) {
  return big.count(r) || big.count(ObjRef{r.base, kSummaryKey});
}

bool value_within(const Value &small, const Value &big) {
  for (const auto &[r, ts] : small)
    if (!covered(big, r))
      return false;
  return true;
}

bool content_within(const Content &small, const Content &big) {
  for (const auto &[k, v] : small) {
    Value cell = read_cell(big, k);
    if (!value_within(v, cell))
      return false;
  }
  return true;
}

struct Tally {
  std::uint64_t pairs = 0, no_alias = 0;
  double pct() const { return pairs ? 100.0 * no_alias / pairs : 0; }
};

Outcome precision() {
  Tally mto, sparse, mto_cast, sparse_cast;
  std::size_t programs = 0, violations = 0;
  auto study = [&](const GenConfig &cfg, Tally &tm, Tally &ts) {
    auto in = prepare(generate(cfg));
    AnalysisState a = run(*in, Mode::MtoSS), b = run(*in, Mode::Sparse);
    FlowFacts fa = facts_from_state(*in, a), fb = facts_from_state(*in, b);
    bool ok = true;
    for (VarId v = 0; v < fa.vars.size(); ++v)
      ok = ok && value_within(fa.vars[v], fb.vars[v]);
    for (const auto &[key, c] : fa.chi_out)
      ok = ok && content_within(c, fb.chi_out.at(key));
    for (const auto &[key, c] : fa.mu_in)
      ok = ok && content_within(c, fb.mu_in.at(key));
    violations += !ok;
    ++programs;
    AliasReport ra = alias_report(*in, a), rb = alias_report(*in, b);
    tm.pairs += ra.total_pairs;
    tm.no_alias += ra.no_alias_pairs;
    ts.pairs += rb.total_pairs;
    ts.no_alias += rb.no_alias_pairs;
  };
  for (std::uint64_t s = 1; s <= 500; ++s) {
    GenConfig cfg;
    cfg.seed = 200000 + s;
    cfg.max_instructions = 60;
    cfg.allow_loops = s % 2 == 0;
    study(cfg, mto, sparse);
  }
  // Sub-corpus dominated by casts and constant field accesses.
  for (std::uint64_t s = 1; s <= 200; ++s) {
    GenConfig cfg;
    cfg.seed = 300000 + s;
    cfg.max_instructions = 60;
    cfg.p_cast = 0.6;
    cfg.p_field = 0.6;
    study(cfg, mto_cast, sparse_cast);
  }
  bool ok = violations == 0 && mto.pct() >= sparse.pct() && mto_cast.pct() > sparse_cast.pct();
  std::ostringstream d;
  d << violations << "/" << programs << " programs break pt(mto-ss) <= pt(sparse); no-alias "
    << fmt(mto.pct()) << "% vs " << fmt(sparse.pct()) << "% (corpus), " << fmt(mto_cast.pct())
    << "% vs " << fmt(sparse_cast.pct()) << "% (cast-heavy)";
  return {ok, d.str()};
}

Outcome within_andersen() {
  std::size_t programs = 0, bad = 0;
  auto check = [&](const AnalysisInputs &in) {
    AnalysisState st = run(in, Mode::MtoSS);
    bool ok = true;
    for (VarId v = 0; v < st.vars.size(); ++v)
      for (const auto &[r, ts] : st.vars[v])
        ok = ok && in.andersen.points_to(v, r.base);
    bad += !ok;
    ++programs;
  };
  for (const char *f : {"union_cast.ir", "virtual_dispatch.ir", "interproc_store.ir", "nested_struct.ir", "failed_dyncast.ir"})
    check(*prepare_fixture(f));
  for (std::uint64_t s = 1; s <= 500; ++s) {
    GenConfig cfg;
    cfg.seed = 400000 + s;
    cfg.max_instructions = 60;
    cfg.allow_loops = true;
    check(*prepare(generate(cfg)));
  }
  return {bad == 0, std::to_string(programs - bad) + "/" + std::to_string(programs) +
                        " programs have base-collapsed pts within the pre-analysis"};
}

Outcome order_independence() {
  std::size_t same = 0;
  const std::size_t n = 100;
  for (std::uint64_t s = 1; s <= n; ++s) {
    GenConfig cfg;
    cfg.seed = 500000 + s;
    cfg.max_instructions = 60;
    cfg.allow_loops = s % 2 == 0;
    auto in = prepare(generate(cfg));
    SolveOptions base;
    AnalysisState fifo = solve(*in, base);
    std::string report = report_json(alias_report(*in, fifo));
    bool ok = true;
    for (std::uint64_t k = 1; k <= 3; ++k) {
      SolveOptions o;
      o.shuffle_seed = s * 1000 + k;
      AnalysisState shuffled = solve(*in, o);
      ok = ok && shuffled.same_result(fifo) && report_json(alias_report(*in, shuffled)) == report;
    }
    same += ok;
  }
  return {same == n, std::to_string(same) + "/" + std::to_string(n) +
                         " programs give identical state and report under 3 shuffled orders"};
}

Outcome overhead(const std::string &driver) {
  if (driver.empty())
    return {false, "no driver path given"};
  std::string cmd = "\"" + driver + "\" bench --gen 300 --seed 600000 --repeat 5";
  std::array<char, 4096> buf;
  std::string out;
  std::unique_ptr<FILE, int (*)(FILE *)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe)
    return {false, "cannot run " + cmd};
  while (std::fgets(buf.data(), buf.size(), pipe.get()))
    out += buf.data();
  auto j = nlohmann::json::parse(out, nullptr, false);
  if (j.is_discarded() || !j.contains("median_ms"))
    return {false, "unreadable bench output"};
  double sp = j["median_ms"]["solve_sparse"], mt = j["median_ms"]["solve_mto_ss"];
  double ratio = j["ratio_mto_ss_over_sparse"];
  return {ratio <= 2.0, "median solve " + fmt(mt, 4) + " ms (mto-ss) vs " + fmt(sp, 4) +
                            " ms (sparse), ratio " + fmt(ratio) + " over " +
                            std::to_string(j["programs"].get<int>()) + " programs"};
}

} // namespace

int main(int argc, char **argv) {
  std::string driver = argc > 1 ? argv[1] : "";
  struct Criterion {
    const char *name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria = {
      {"multi-structure object aliasing", multi_structure},
      {"virtual dispatch and dyncast offset", dispatch},
      {"nested structure offsets", nested},
      {"failed dyncast", failed_dyncast},
      {"store update branches", update_branches},
      {"differential agreement with the dense reference", differential},
      {"precision against the sparse baseline", precision},
      {"soundness against the pre-analysis", within_andersen},
      {"worklist order independence", order_independence},
      {"solve-time overhead", [&] { return overhead(driver); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << (i + 1 < 10 ? "  " : " ")
              << criteria[i].name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass" << std::endl;
  return failed ? 1 : 0;
}
