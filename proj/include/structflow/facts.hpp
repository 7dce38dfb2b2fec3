// facts.hpp - Engine-neutral view of analysis results used to compare the
// sparse solver with the dense reference analysis.

#pragma once

#include "structflow/pipeline.hpp"
#include "structflow/solver.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace structflow {

struct FlowFacts {
  std::vector<Value> vars;
  std::map<std::pair<Label, BaseId>, Content> chi_out; // after each χ
  std::map<std::pair<Label, BaseId>, Content> mu_in;   // at each µ
  std::map<std::pair<FuncId, BaseId>, Content> entry;  // objects live into a function
  std::map<BaseId, TypeSet> init_types;
  std::map<Label, std::vector<FuncId>> callees;
};

FlowFacts facts_from_state(const AnalysisInputs &in, const AnalysisState &st);

/// Human-readable description of the first difference, or nullopt.
std::optional<std::string> first_divergence(const AnalysisInputs &in, const FlowFacts &solver,
                                            const FlowFacts &oracle);

std::string describe(const AnalysisInputs &in, const Value &v);
std::string describe(const AnalysisInputs &in, const Content &c);

} // namespace structflow
