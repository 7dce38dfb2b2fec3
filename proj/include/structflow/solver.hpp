// solver.hpp - Sparse structure-flow-sensitive points-to solver.

#pragma once

#include "structflow/objects.hpp"
#include "structflow/pipeline.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace structflow {

struct SolveOptions {
  Mode mode = Mode::MtoSS;
  std::uint64_t budget = 50'000'000; // node visits
  /// Pops worklist entries in a seeded random order instead of FIFO.
  std::optional<std::uint64_t> shuffle_seed;
};

struct AnalysisState {
  Mode mode = Mode::MtoSS;
  std::vector<Value> vars;                     // per variable, at its definition
  std::vector<Content> versions;               // per object version
  std::vector<Value> returns;                  // per function
  std::vector<std::map<BaseId, Content>> exits; // per function, objects leaving it
  std::map<BaseId, TypeSet> init_types;        // pt.initT
  std::map<Label, std::vector<FuncId>> callees; // resolved targets of every call
  std::uint64_t visits = 0;

  /// Equality of every analysis result, ignoring visit counts.
  bool same_result(const AnalysisState &other) const;
};

AnalysisState solve(const AnalysisInputs &in, const SolveOptions &opts = {});

/// Store target update. `pt_p` is the store pointer's set, `pt_q` the stored
/// value and `pt_o` the previous contents of cell `o`:
///   pt_q           when pt_p is exactly {o} and o is a singleton
///   pt_o           when pt_p is empty
///   pt_o ∪ pt_q    otherwise
Value strong_update(const Value &pt_p, const Value &pt_q, const Value &pt_o, ObjRef o,
                    bool o_is_singleton);

} // namespace structflow
