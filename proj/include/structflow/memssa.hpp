// memssa.hpp - Memory SSA for address-taken objects and the sparse
// value-flow graph built from it.

#pragma once

#include "structflow/andersen.hpp"
#include "structflow/ir.hpp"

#include <string>
#include <vector>

namespace structflow {

using VersionId = std::uint32_t;

struct MemVersion {
  enum class Def : std::uint8_t { Entry, Chi, Phi };
  BaseId obj = 0;
  FuncId func = 0;
  Def def = Def::Entry;
  Label label = kNone;             // Chi
  BlockId block = kNone;           // Phi
  std::vector<VersionId> incoming; // Phi, parallel to the block's predecessors
  std::uint32_t number = 0;        // per-object counter within the function
};

/// A µ (use) when `out` is kNone, otherwise a χ (def and use).
struct MuChi {
  BaseId obj = 0;
  VersionId in = kNone;
  VersionId out = kNone;
};

struct AnnotatedProgram {
  std::vector<MemVersion> versions;
  std::vector<std::vector<MuChi>> mu;       // per label: loads, calls, rets
  std::vector<std::vector<MuChi>> chi;      // per label: stores, calls
  std::vector<std::vector<MuChi>> entry;    // per function, `out` is the entry version
  std::vector<std::vector<VersionId>> phis; // per function
  std::vector<std::vector<Label>> rets;     // per function
};

/// Places µ/χ on loads, stores, calls, rets and function entries.
AnnotatedProgram annotate(const Program &prog, const AndersenResult &pre, const ModRef &modref);
/// Assigns SSA versions to every annotation, inserting object φs.
void rename_objects(const Program &prog, AnnotatedProgram &ap);

enum class NodeKind : std::uint8_t { Inst, Entry, Exit, MemPhi };

struct VfgNode {
  NodeKind kind = NodeKind::Inst;
  Label label = kNone;      // Inst
  FuncId func = kNone;      // Entry, Exit, and owner of Inst/MemPhi (kNone for globals)
  VersionId version = kNone; // MemPhi
};

enum class EdgeKind : std::uint8_t {
  Direct,   // top-level variable, `what` is the VarId
  Indirect, // object version, `what` is the VersionId
  Return,   // callee exit to call site, `what` is the callee
};

struct VfgEdge {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  EdgeKind kind = EdgeKind::Direct;
  std::uint32_t what = 0;
};

struct ValueFlowGraph {
  std::vector<VfgNode> nodes;
  std::vector<VfgEdge> edges;
  std::vector<std::vector<std::uint32_t>> succs; // deduplicated
  std::vector<std::uint32_t> node_of_label;      // kNone for br/jmp/ret
  std::vector<std::uint32_t> entry_node;
  std::vector<std::uint32_t> exit_node;
  std::vector<std::uint32_t> def_of_var;
  std::vector<std::uint32_t> def_of_version;

  std::string node_name(const Program &prog, std::uint32_t n) const;
};

ValueFlowGraph build_vfg(const Program &prog, const AndersenResult &pre, const AnnotatedProgram &ap);

} // namespace structflow
