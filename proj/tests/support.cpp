#include "support.hpp"

#include "structflow/parser.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sftest {

std::string fixture_path(const std::string &name) { return std::string(FIXTURE_DIR) + "/" + name; }

std::string read_fixture(const std::string &name) {
  std::ifstream in(fixture_path(name));
  if (!in)
    throw std::runtime_error("missing fixture " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<AnalysisInputs> prepare_text(std::string_view text) {
  return prepare(parse_or_throw(text));
}

std::unique_ptr<AnalysisInputs> prepare_fixture(const std::string &name) {
  return prepare_text(read_fixture(name));
}

const Value &pt(const AnalysisInputs &in, const AnalysisState &st, std::string_view var) {
  auto v = in.program.find_var(var);
  if (!v)
    throw std::runtime_error("no variable " + std::string(var));
  return st.vars[*v];
}

std::set<std::string> objects_of(const AnalysisInputs &in, const Value &v) {
  std::set<std::string> out;
  for (const auto &[o, ts] : v)
    out.insert(in.objects.name(o));
  return out;
}

std::set<std::string> types_of(const AnalysisInputs &in, const Value &v, const std::string &obj) {
  for (const auto &[o, ts] : v)
    if (in.objects.name(o) == obj) {
      auto names = visible_types(ts, in.program.types);
      return {names.begin(), names.end()};
    }
  return {};
}

TypeId type_id(const Program &prog, std::string_view name) {
  auto t = prog.types.lookup(name);
  if (!t)
    throw std::runtime_error("no type " + std::string(name));
  return *t;
}

} // namespace sftest
