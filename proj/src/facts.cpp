#include "structflow/facts.hpp"

#include <sstream>

namespace structflow {

FlowFacts facts_from_state(const AnalysisInputs &in, const AnalysisState &st) {
  const AnnotatedProgram &ap = in.annotated;
  FlowFacts f;
  f.vars = st.vars;
  for (Label l = 0; l < ap.chi.size(); ++l)
    for (const MuChi &c : ap.chi[l])
      f.chi_out[{l, c.obj}] = st.versions[c.out];
  for (Label l = 0; l < ap.mu.size(); ++l)
    for (const MuChi &m : ap.mu[l])
      f.mu_in[{l, m.obj}] = st.versions[m.in];
  for (FuncId fn = 0; fn < ap.entry.size(); ++fn)
    for (const MuChi &e : ap.entry[fn])
      if (in.modref.entry[fn].count(e.obj))
        f.entry[{fn, e.obj}] = st.versions[e.out];
  f.init_types = st.init_types;
  f.callees = st.callees;
  return f;
}

std::string describe(const AnalysisInputs &in, const Value &v) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto &[obj, ts] : v) {
    os << (first ? "" : ", ") << in.objects.name(obj) << ":[";
    first = false;
    bool ft = true;
    for (const std::string &t : visible_types(ts, in.program.types)) {
      os << (ft ? "" : " ") << t;
      ft = false;
    }
    if (ts.count(kUntyped))
      os << (ft ? "" : " ") << "?"; // untyped marker, hidden in reports
    os << "]";
  }
  os << "}";
  return os.str();
}

std::string describe(const AnalysisInputs &in, const Content &c) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto &[key, v] : c) {
    os << (first ? "" : ", ") << (key == kSummaryKey ? std::string("*") : std::to_string(key))
       << " -> " << describe(in, v);
    first = false;
  }
  os << "}";
  return os.str();
}

namespace {

std::string where(const AnalysisInputs &in, Label l) {
  const Instruction &inst = in.program.inst(l);
  std::string s = "label " + std::to_string(l) + " (line " + std::to_string(inst.line) + ", " +
                  std::string(opcode_name(inst.op)) + ")";
  return s;
}

template <typename Key, typename Describe>
std::optional<std::string> compare_maps(const std::map<Key, Content> &a, const std::map<Key, Content> &b,
                                        const char *what, const AnalysisInputs &in, Describe key_text) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      if (!ia->second.empty())
        return std::string(what) + " at " + key_text(ia->first) + ": solver " +
               describe(in, ia->second) + ", oracle has no entry";
      ++ia;
      continue;
    }
    if (ia == a.end() || ib->first < ia->first) {
      if (!ib->second.empty())
        return std::string(what) + " at " + key_text(ib->first) + ": solver has no entry, oracle " +
               describe(in, ib->second);
      ++ib;
      continue;
    }
    if (ia->second != ib->second)
      return std::string(what) + " at " + key_text(ia->first) + ": solver " + describe(in, ia->second) +
             ", oracle " + describe(in, ib->second);
    ++ia;
    ++ib;
  }
  return std::nullopt;
}

} // namespace

std::optional<std::string> first_divergence(const AnalysisInputs &in, const FlowFacts &s,
                                            const FlowFacts &o) {
  const Program &prog = in.program;
  for (VarId v = 0; v < prog.vars.size(); ++v)
    if (s.vars.at(v) != o.vars.at(v))
      return "pt(" + prog.var_name(v) + "): solver " + describe(in, s.vars[v]) + ", oracle " +
             describe(in, o.vars[v]);
  auto site = [&](const std::pair<Label, BaseId> &k) {
    return where(in, k.first) + " object " + in.objects.name(k.second);
  };
  if (auto d = compare_maps(s.chi_out, o.chi_out, "chi", in, site))
    return d;
  if (auto d = compare_maps(s.mu_in, o.mu_in, "mu", in, site))
    return d;
  auto fentry = [&](const std::pair<FuncId, BaseId> &k) {
    return "entry of " + prog.functions[k.first].name + " object " + in.objects.name(k.second);
  };
  if (auto d = compare_maps(s.entry, o.entry, "entry", in, fentry))
    return d;
  if (s.init_types != o.init_types)
    return std::string("pt.initT differs");
  for (const auto &[l, fs] : s.callees) {
    auto it = o.callees.find(l);
    std::vector<FuncId> other = it == o.callees.end() ? std::vector<FuncId>{} : it->second;
    if (fs != other)
      return "call targets at " + where(in, l) + " differ";
  }
  for (const auto &[l, fs] : o.callees)
    if (!fs.empty() && !s.callees.count(l))
      return "call targets at " + where(in, l) + " differ";
  return std::nullopt;
}

} // namespace structflow
