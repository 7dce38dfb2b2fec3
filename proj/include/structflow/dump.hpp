// dump.hpp - Debug and machine-readable renderings of analysis data.

#pragma once

#include "structflow/pipeline.hpp"
#include "structflow/solver.hpp"

#include <string>

namespace structflow {

std::string layouts_json(const Program &prog, const LayoutTable &layouts);
std::string andersen_json(const AnalysisInputs &in);
std::string state_json(const AnalysisInputs &in, const AnalysisState &st);
std::string vfg_dot(const AnalysisInputs &in);

} // namespace structflow
