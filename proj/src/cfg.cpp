#include "structflow/cfg.hpp"

#include <algorithm>
#include <set>

namespace structflow {

Cfg build_cfg(const Function &f) {
  Cfg cfg;
  cfg.succs.resize(f.blocks.size());
  cfg.preds.resize(f.blocks.size());
  for (BlockId b = 0; b < f.blocks.size(); ++b) {
    const Block &blk = f.blocks[b];
    if (blk.insts.empty())
      continue;
    const Instruction &term = blk.insts.back();
    if (term.op != Opcode::Br && term.op != Opcode::Jmp)
      continue;
    for (BlockId s : term.blocks) {
      // `br c, L, L` is a single edge.
      if (std::find(cfg.succs[b].begin(), cfg.succs[b].end(), s) != cfg.succs[b].end())
        continue;
      cfg.succs[b].push_back(s);
      cfg.preds[s].push_back(b);
    }
  }
  return cfg;
}

std::vector<bool> reachable_blocks(const Cfg &cfg) {
  std::vector<bool> seen(cfg.size(), false);
  if (cfg.size() == 0)
    return seen;
  std::vector<BlockId> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    BlockId b = stack.back();
    stack.pop_back();
    for (BlockId s : cfg.succs[b])
      if (!seen[s]) {
        seen[s] = true;
        stack.push_back(s);
      }
  }
  return seen;
}

std::vector<bool> blocks_in_cycles(const Cfg &cfg) {
  // b is on a cycle iff b is reachable from one of its successors.
  std::vector<bool> result(cfg.size(), false);
  for (BlockId b = 0; b < cfg.size(); ++b) {
    std::vector<bool> seen(cfg.size(), false);
    std::vector<BlockId> stack(cfg.succs[b].begin(), cfg.succs[b].end());
    while (!stack.empty() && !result[b]) {
      BlockId x = stack.back();
      stack.pop_back();
      if (x == b)
        result[b] = true;
      if (seen[x])
        continue;
      seen[x] = true;
      for (BlockId s : cfg.succs[x])
        stack.push_back(s);
    }
  }
  return result;
}

std::vector<BlockId> reverse_post_order(const Cfg &cfg) {
  std::vector<BlockId> post;
  if (cfg.size() == 0)
    return post;
  std::vector<bool> seen(cfg.size(), false);
  std::vector<std::pair<BlockId, std::size_t>> stack{{0, 0}};
  seen[0] = true;
  while (!stack.empty()) {
    auto &[b, next] = stack.back();
    if (next < cfg.succs[b].size()) {
      BlockId s = cfg.succs[b][next++];
      if (!seen[s]) {
        seen[s] = true;
        stack.push_back({s, 0});
      }
      continue;
    }
    post.push_back(b);
    stack.pop_back();
  }
  std::reverse(post.begin(), post.end());
  return post;
}

DominatorTree::DominatorTree(const Cfg &cfg)
    : idom_(cfg.size(), kNone), children_(cfg.size()) {
  if (cfg.size() == 0)
    return;
  // Iterative algorithm of Cooper, Harvey and Kennedy.
  std::vector<BlockId> rpo = reverse_post_order(cfg);
  std::vector<std::size_t> order(cfg.size(), kNone);
  for (std::size_t i = 0; i < rpo.size(); ++i)
    order[rpo[i]] = i;
  std::vector<BlockId> doms(cfg.size(), kNone);
  doms[0] = 0;
  auto intersect = [&](BlockId a, BlockId b) {
    while (a != b) {
      while (order[a] > order[b])
        a = doms[a];
      while (order[b] > order[a])
        b = doms[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 1; i < rpo.size(); ++i) {
      BlockId b = rpo[i];
      BlockId nd = kNone;
      for (BlockId p : cfg.preds[b]) {
        if (doms[p] == kNone)
          continue;
        nd = nd == kNone ? p : intersect(p, nd);
      }
      if (nd != doms[b]) {
        doms[b] = nd;
        changed = true;
      }
    }
  }
  for (BlockId b = 1; b < cfg.size(); ++b) {
    idom_[b] = doms[b];
    if (doms[b] != kNone)
      children_[doms[b]].push_back(b);
  }
}

bool DominatorTree::dominates(BlockId a, BlockId b) const {
  for (BlockId x = b; x != kNone; x = idom_[x])
    if (x == a)
      return true;
  return false;
}

std::vector<std::vector<BlockId>> DominatorTree::frontiers(const Cfg &cfg) const {
  std::vector<std::set<BlockId>> df(cfg.size());
  for (BlockId b = 0; b < cfg.size(); ++b) {
    if (cfg.preds[b].size() < 2)
      continue;
    for (BlockId p : cfg.preds[b]) {
      BlockId runner = p;
      while (runner != kNone && runner != idom_[b]) {
        df[runner].insert(b);
        runner = idom_[runner];
      }
    }
  }
  std::vector<std::vector<BlockId>> out(cfg.size());
  for (BlockId b = 0; b < cfg.size(); ++b)
    out[b].assign(df[b].begin(), df[b].end());
  return out;
}

std::vector<BlockId> iterated_frontier(const std::vector<std::vector<BlockId>> &df,
                                       const std::vector<BlockId> &defs) {
  std::set<BlockId> result;
  std::vector<BlockId> work(defs.begin(), defs.end());
  std::set<BlockId> queued(defs.begin(), defs.end());
  while (!work.empty()) {
    BlockId b = work.back();
    work.pop_back();
    for (BlockId y : df[b]) {
      if (!result.insert(y).second)
        continue;
      if (queued.insert(y).second)
        work.push_back(y);
    }
  }
  return {result.begin(), result.end()};
}

} // namespace structflow
