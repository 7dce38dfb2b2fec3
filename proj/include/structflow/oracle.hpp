// oracle.hpp - Dense flow-sensitive reference analysis.
//
// Iterates whole functions over the CFG, carrying a complete memory map at
// every program point. It shares the layouts, objects, pre-analysis and
// mod/ref summaries with the sparse solver but none of its transfer code.

#pragma once

#include "structflow/facts.hpp"

namespace structflow {

FlowFacts dense_solve(const AnalysisInputs &in, Mode mode, std::uint64_t budget = 10'000'000);

} // namespace structflow
