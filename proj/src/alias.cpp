#include "structflow/alias.hpp"

#include "json.hpp"

#include <cstdio>
#include <sstream>

namespace structflow {

std::string_view verdict_name(AliasVerdict v) {
  return v == AliasVerdict::MayAlias ? "may-alias" : "no-alias";
}

bool overlaps(ObjRef a, ObjRef b) {
  if (a.base != b.base)
    return false;
  return a.is_base() || b.is_base() || a.key == b.key || a.is_summary() || b.is_summary();
}

AliasVerdict alias(const Value &a, const Value &b) {
  for (const auto &[x, tx] : a)
    for (const auto &[y, ty] : b)
      if (overlaps(x, y))
        return AliasVerdict::MayAlias;
  return AliasVerdict::NoAlias;
}

std::vector<VarId> queried_pointers(const AnalysisInputs &in) {
  std::vector<VarId> out;
  for (VarId v = 0; v < in.program.vars.size(); ++v)
    if (!in.andersen.pts[v].empty())
      out.push_back(v);
  return out;
}

AliasReport alias_report(const AnalysisInputs &in, const AnalysisState &st) {
  AliasReport r;
  r.mode = st.mode;
  std::vector<VarId> ptrs = queried_pointers(in);
  for (std::size_t i = 0; i < ptrs.size(); ++i)
    for (std::size_t j = i + 1; j < ptrs.size(); ++j) {
      AliasVerdict v = alias(st.vars[ptrs[i]], st.vars[ptrs[j]]);
      r.pairs.push_back({in.program.var_name(ptrs[i]), in.program.var_name(ptrs[j]), v});
      ++r.total_pairs;
      if (v == AliasVerdict::NoAlias)
        ++r.no_alias_pairs;
    }
  r.no_alias_pct = r.total_pairs == 0 ? 0.0 : 100.0 * r.no_alias_pairs / r.total_pairs;
  return r;
}

std::string report_json(const AliasReport &r) {
  nlohmann::ordered_json j;
  j["mode"] = mode_name(r.mode);
  j["total_pairs"] = r.total_pairs;
  j["no_alias_pairs"] = r.no_alias_pairs;
  j["no_alias_pct"] = r.no_alias_pct;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const AliasPair &p : r.pairs)
    j["pairs"].push_back({{"a", p.a}, {"b", p.b}, {"verdict", verdict_name(p.verdict)}});
  return j.dump(2) + "\n";
}

std::string report_text(const AliasReport &r) {
  std::ostringstream os;
  char pct[32];
  std::snprintf(pct, sizeof pct, "%.2f", r.no_alias_pct);
  os << "mode           " << mode_name(r.mode) << "\n"
     << "total pairs    " << r.total_pairs << "\n"
     << "no-alias pairs " << r.no_alias_pairs << "\n"
     << "no-alias pct   " << pct << "\n";
  std::size_t wa = 1, wb = 1;
  for (const AliasPair &p : r.pairs) {
    wa = std::max(wa, p.a.size());
    wb = std::max(wb, p.b.size());
  }
  for (const AliasPair &p : r.pairs) {
    os << "  " << p.a << std::string(wa - p.a.size() + 2, ' ') << p.b
       << std::string(wb - p.b.size() + 2, ' ') << verdict_name(p.verdict) << "\n";
  }
  return os.str();
}

} // namespace structflow
