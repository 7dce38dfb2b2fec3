// cfg.hpp - Control-flow graph, dominators and dominance frontiers.

#pragma once

#include "structflow/ir.hpp"

#include <vector>

namespace structflow {

struct Cfg {
  std::vector<std::vector<BlockId>> succs;
  std::vector<std::vector<BlockId>> preds;

  std::size_t size() const { return succs.size(); }
};

Cfg build_cfg(const Function &f);

/// Blocks reachable from the entry block.
std::vector<bool> reachable_blocks(const Cfg &cfg);

/// Blocks that lie on some cycle (including self loops).
std::vector<bool> blocks_in_cycles(const Cfg &cfg);

/// Reverse post-order over blocks reachable from the entry.
std::vector<BlockId> reverse_post_order(const Cfg &cfg);

class DominatorTree {
public:
  explicit DominatorTree(const Cfg &cfg);

  /// Immediate dominator; the entry (and unreachable blocks) map to kNone.
  BlockId idom(BlockId b) const { return idom_[b]; }
  const std::vector<BlockId> &children(BlockId b) const { return children_[b]; }
  bool dominates(BlockId a, BlockId b) const;

  /// Dominance frontier of every block.
  std::vector<std::vector<BlockId>> frontiers(const Cfg &cfg) const;

private:
  std::vector<BlockId> idom_;
  std::vector<std::vector<BlockId>> children_;
};

/// Iterated dominance frontier of a set of definition blocks.
std::vector<BlockId> iterated_frontier(const std::vector<std::vector<BlockId>> &df,
                                       const std::vector<BlockId> &defs);

} // namespace structflow
