// Helpers shared by the unit tests and the acceptance runner.

#pragma once

#include "structflow/objects.hpp"
#include "structflow/pipeline.hpp"
#include "structflow/solver.hpp"

#include <memory>
#include <set>
#include <string>
#include <string_view>

namespace sftest {

using namespace structflow;

std::string fixture_path(const std::string &name);
std::string read_fixture(const std::string &name);

std::unique_ptr<AnalysisInputs> prepare_text(std::string_view text);
std::unique_ptr<AnalysisInputs> prepare_fixture(const std::string &name);

/// pt of a variable named `func.var` (or a global name).
const Value &pt(const AnalysisInputs &in, const AnalysisState &st, std::string_view var);

/// Object names of a value, e.g. {"main.o", "main.o+8"}.
std::set<std::string> objects_of(const AnalysisInputs &in, const Value &v);
/// Visible type names attached to one object of a value (empty if absent).
std::set<std::string> types_of(const AnalysisInputs &in, const Value &v, const std::string &obj);

TypeId type_id(const Program &prog, std::string_view name);

/// Visits every (object, type set) pair held by a variable or stored in
/// any object version.
template <typename F> void for_each_type_set(const AnalysisState &st, F &&fn) {
  for (const Value &v : st.vars)
    for (const auto &[o, ts] : v)
      fn(o, ts);
  for (const Content &c : st.versions)
    for (const auto &[k, v] : c)
      for (const auto &[o, ts] : v)
        fn(o, ts);
}

} // namespace sftest
