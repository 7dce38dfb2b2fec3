#include "doctest.h"

#include "structflow/cfg.hpp"
#include "structflow/gen.hpp"
#include "structflow/parser.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace structflow;

namespace {

// Reachability from the entry with one block removed.
std::vector<bool> reach_without(const Cfg &g, BlockId removed) {
  std::vector<bool> seen(g.size(), false);
  if (removed == 0)
    return seen;
  std::vector<BlockId> work{0};
  seen[0] = true;
  while (!work.empty()) {
    BlockId b = work.back();
    work.pop_back();
    for (BlockId s : g.succs[b])
      if (s != removed && !seen[s]) {
        seen[s] = true;
        work.push_back(s);
      }
  }
  return seen;
}

// d dominates n iff n == d or n is unreachable once d is gone.
std::vector<std::vector<bool>> brute_dominance(const Cfg &g) {
  std::size_t n = g.size();
  std::vector<std::vector<bool>> dom(n, std::vector<bool>(n, false));
  for (BlockId d = 0; d < n; ++d) {
    std::vector<bool> r = reach_without(g, d);
    for (BlockId x = 0; x < n; ++x)
      dom[d][x] = x == d || !r[x];
  }
  return dom;
}

std::vector<std::set<BlockId>> brute_frontiers(const Cfg &g, const std::vector<std::vector<bool>> &dom) {
  std::vector<std::set<BlockId>> df(g.size());
  for (BlockId x = 0; x < g.size(); ++x)
    for (BlockId y = 0; y < g.size(); ++y)
      for (BlockId p : g.preds[y])
        if (dom[x][p] && !(dom[x][y] && x != y))
          df[x].insert(y);
  return df;
}

// Path of at least one edge from `from` to `to`.
bool reaches(const Cfg &g, BlockId from, BlockId to) {
  std::vector<bool> seen(g.size(), false);
  std::vector<BlockId> work(g.succs[from].begin(), g.succs[from].end());
  while (!work.empty()) {
    BlockId x = work.back();
    work.pop_back();
    if (x == to)
      return true;
    if (seen[x])
      continue;
    seen[x] = true;
    work.insert(work.end(), g.succs[x].begin(), g.succs[x].end());
  }
  return false;
}

bool on_cycle(const Cfg &g, BlockId b) { return reaches(g, b, b); }

// Random CFG text: every non-entry block is a possible target, including
// irreducible shapes. Programs with unreachable blocks are skipped.
std::optional<Program> random_cfg(std::mt19937_64 &rng, int blocks) {
  std::ostringstream os;
  os << "func main() {\nentry:\n";
  auto target = [&] { return "b" + std::to_string(1 + rng() % (blocks - 1)); };
  os << "  br 0, " << target() << ", " << target() << "\n";
  for (int b = 1; b < blocks; ++b) {
    os << "b" << b << ":\n";
    switch (rng() % 4) {
    case 0: os << "  ret\n"; break;
    case 1: os << "  jmp " << target() << "\n"; break;
    default: os << "  br 0, " << target() << ", " << target() << "\n";
    }
  }
  os << "}\n";
  ParseResult r = parse_program(os.str());
  return r.program;
}

void check_function(const Function &f) {
  Cfg g = build_cfg(f);
  DominatorTree dt(g);
  auto dom = brute_dominance(g);
  for (BlockId a = 0; a < g.size(); ++a)
    for (BlockId b = 0; b < g.size(); ++b)
      CHECK(dt.dominates(a, b) == dom[a][b]);

  // idom is the strict dominator closest to the block.
  for (BlockId b = 1; b < g.size(); ++b) {
    BlockId i = dt.idom(b);
    REQUIRE(i != kNone);
    CHECK(dom[i][b]);
    for (BlockId d = 0; d < g.size(); ++d)
      if (d != b && dom[d][b])
        CHECK(dom[d][i]);
  }

  auto df = dt.frontiers(g);
  auto bdf = brute_frontiers(g, dom);
  for (BlockId x = 0; x < g.size(); ++x)
    CHECK(std::set<BlockId>(df[x].begin(), df[x].end()) == bdf[x]);

  // Iterated frontier of every singleton and of a pair of blocks.
  for (BlockId x = 0; x < g.size(); ++x) {
    std::vector<BlockId> defs{x, static_cast<BlockId>((x * 7 + 3) % g.size())};
    std::set<BlockId> want;
    std::set<BlockId> frontier(defs.begin(), defs.end());
    bool grew = true;
    while (grew) {
      grew = false;
      for (BlockId d : std::set<BlockId>(frontier))
        for (BlockId y : bdf[d]) {
          grew |= want.insert(y).second;
          grew |= frontier.insert(y).second;
        }
    }
    auto idf = iterated_frontier(df, defs);
    CHECK(std::set<BlockId>(idf.begin(), idf.end()) == want);
  }

  auto cyc = blocks_in_cycles(g);
  for (BlockId b = 0; b < g.size(); ++b)
    CHECK(cyc[b] == on_cycle(g, b));

  // Reverse post-order: an edge may only point backwards when it closes a cycle.
  auto rpo = reverse_post_order(g);
  CHECK(rpo.size() == g.size());
  std::vector<std::size_t> pos(g.size());
  for (std::size_t i = 0; i < rpo.size(); ++i)
    pos[rpo[i]] = i;
  CHECK(rpo.front() == 0);
  for (BlockId b = 0; b < g.size(); ++b)
    for (BlockId s : g.succs[b])
      if (!reaches(g, s, b))
        CHECK(pos[b] < pos[s]);
}

} // namespace

TEST_CASE("dominators and frontiers match brute force on random graphs") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int i = 0; i < 5000 && checked < 200; ++i)
    if (auto p = random_cfg(rng, 3 + static_cast<int>(rng() % 8))) {
      check_function(p->functions[p->main]);
      ++checked;
    }
  CHECK(checked == 200);
}

TEST_CASE("dominators and frontiers match brute force on generated programs") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.allow_loops = true;
    cfg.max_instructions = 60;
    Program p = generate(cfg);
    for (const Function &f : p.functions)
      check_function(f);
  }
}

TEST_CASE("classic diamond") {
  Program p = parse_or_throw("func main() {\nentry:\n  br 0, a, b\na:\n  jmp c\nb:\n  jmp c\nc:\n  ret\n}\n");
  Cfg g = build_cfg(p.functions[0]);
  DominatorTree dt(g);
  CHECK(dt.idom(3) == 0);
  auto df = dt.frontiers(g);
  CHECK(df[1] == std::vector<BlockId>{3});
  CHECK(df[2] == std::vector<BlockId>{3});
  CHECK(df[0].empty());
}
