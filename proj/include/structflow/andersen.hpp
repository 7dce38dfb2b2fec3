// andersen.hpp - Flow- and field-insensitive inclusion-based pre-analysis,
// call-graph summaries and singleton classification built on top of it.

#pragma once

#include "structflow/ir.hpp"
#include "structflow/objects.hpp"

#include <map>
#include <set>
#include <vector>

namespace structflow {

struct AndersenResult {
  std::vector<std::vector<BaseId>> pts;     // per variable, sorted
  std::vector<std::vector<BaseId>> content; // per base object, sorted
  std::map<Label, std::vector<FuncId>> callgraph; // every call site

  bool points_to(VarId v, BaseId b) const;
};

AndersenResult run_andersen(const Program &prog, const ObjectTable &objects);

/// Per-function memory footprints over the pre-analysis call graph.
struct ModRef {
  std::vector<std::set<BaseId>> entry;  // objects live into the function
  std::vector<std::set<BaseId>> exit;   // objects possibly modified by it
  std::vector<std::set<BaseId>> local;  // allocated here and never escaping
  std::vector<bool> recursive;
  std::vector<bool> reachable;          // from main
  std::vector<std::vector<Label>> call_sites; // reachable sites calling f
};

ModRef compute_modref(const Program &prog, const ObjectTable &objects, const AndersenResult &pre);

/// Base objects whose allocation executes at most once.
std::vector<bool> classify_singletons(const Program &prog, const ObjectTable &objects,
                                      const LayoutTable &layouts, const ModRef &modref);

} // namespace structflow
