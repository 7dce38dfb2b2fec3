// pipeline.hpp - Everything the solvers need, built once per program.

#pragma once

#include "structflow/andersen.hpp"
#include "structflow/ir.hpp"
#include "structflow/layout.hpp"
#include "structflow/memssa.hpp"
#include "structflow/objects.hpp"

#include <memory>
#include <stdexcept>

namespace structflow {

/// A solver exceeded its node-visit budget.
class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed (monotonicity, envelope, ...).
class InvariantViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct PhaseTimes {
  double preanalysis_ms = 0; // objects, Andersen, mod/ref, singletons
  double memssa_ms = 0;      // annotation, renaming, value-flow graph
};

// Members refer to each other (layouts to program.types), so instances are
// pinned behind a unique_ptr.
struct AnalysisInputs {
  explicit AnalysisInputs(Program prog);
  AnalysisInputs(const AnalysisInputs &) = delete;
  AnalysisInputs &operator=(const AnalysisInputs &) = delete;

  Program program;
  LayoutTable layouts;
  ObjectTable objects;
  AndersenResult andersen;
  ModRef modref;
  std::vector<bool> singletons;
  AnnotatedProgram annotated;
  ValueFlowGraph vfg;
  PhaseTimes times;

  bool is_singleton(ObjRef r) const { return singletons[r.base] && !r.is_summary(); }
};

std::unique_ptr<AnalysisInputs> prepare(Program prog);

} // namespace structflow
