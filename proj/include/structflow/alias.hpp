// alias.hpp - All-pairs alias queries over top-level pointers.

#pragma once

#include "structflow/pipeline.hpp"
#include "structflow/solver.hpp"

#include <string>
#include <vector>

namespace structflow {

enum class AliasVerdict : std::uint8_t { MayAlias, NoAlias };

std::string_view verdict_name(AliasVerdict v);

/// Two abstract locations overlap when they share a base and either one is
/// the whole base, they have the same offset, or either is the summary.
bool overlaps(ObjRef a, ObjRef b);

AliasVerdict alias(const Value &a, const Value &b);

struct AliasPair {
  std::string a;
  std::string b;
  AliasVerdict verdict = AliasVerdict::MayAlias;
};

struct AliasReport {
  Mode mode = Mode::MtoSS;
  std::uint64_t total_pairs = 0;
  std::uint64_t no_alias_pairs = 0;
  double no_alias_pct = 0;
  std::vector<AliasPair> pairs;
};

/// Top-level variables the pre-analysis considers pointers, in id order.
std::vector<VarId> queried_pointers(const AnalysisInputs &in);

AliasReport alias_report(const AnalysisInputs &in, const AnalysisState &st);

std::string report_json(const AliasReport &r);
std::string report_text(const AliasReport &r);

} // namespace structflow
