#include "doctest.h"
#include "support.hpp"

#include "structflow/facts.hpp"
#include "structflow/gen.hpp"
#include "structflow/oracle.hpp"

#include <algorithm>

using namespace structflow;

namespace {

void agree(const AnalysisInputs &in, Mode m, const std::string &what) {
  SolveOptions o;
  o.mode = m;
  FlowFacts sparse = facts_from_state(in, solve(in, o));
  FlowFacts dense = dense_solve(in, m);
  auto d = first_divergence(in, sparse, dense);
  CHECK_MESSAGE(!d, what << " (" << mode_name(m) << "): " << d.value_or(""));
}

} // namespace

TEST_CASE("dense reference agrees on fixtures") {
  for (const char *f : {"union_cast.ir", "virtual_dispatch.ir", "interproc_store.ir", "nested_struct.ir", "failed_dyncast.ir", "empty.ir"}) {
    auto in = sftest::prepare_fixture(f);
    agree(*in, Mode::MtoSS, f);
    agree(*in, Mode::Sparse, f);
  }
}

TEST_CASE("dense reference agrees on programs with loops and calls") {
  for (std::uint64_t seed = 1; seed <= 400; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.allow_loops = true;
    cfg.max_instructions = 60;
    cfg.p_call = 0.3;
    auto in = prepare(generate(cfg));
    agree(*in, Mode::MtoSS, "seed " + std::to_string(seed));
    agree(*in, Mode::Sparse, "seed " + std::to_string(seed));
  }
}

TEST_CASE("divergence reporting") {
  auto in = sftest::prepare_fixture("union_cast.ir");
  FlowFacts a = facts_from_state(*in, solve(*in));
  FlowFacts b = a;
  CHECK_FALSE(first_divergence(*in, a, b));
  VarId q = *in->program.find_var("main.q");
  b.vars[q].clear();
  auto d = first_divergence(*in, a, b);
  REQUIRE(d);
  CHECK(d->find("main.q") != std::string::npos);

  auto in3 = sftest::prepare_fixture("interproc_store.ir");
  FlowFacts a3 = facts_from_state(*in3, solve(*in3));
  FlowFacts c = a3;
  auto held = std::find_if(c.chi_out.begin(), c.chi_out.end(),
                           [](const auto &kv) { return !kv.second.empty(); });
  REQUIRE(held != c.chi_out.end());
  held->second.clear();
  CHECK(first_divergence(*in3, a3, c));
}

TEST_CASE("dense reference respects its budget") {
  auto in = sftest::prepare_fixture("virtual_dispatch.ir");
  CHECK_THROWS_AS(dense_solve(*in, Mode::MtoSS, 2), BudgetExceeded);
}
