#include "structflow/pipeline.hpp"

#include <chrono>

namespace structflow {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

} // namespace

AnalysisInputs::AnalysisInputs(Program prog)
    : program(std::move(prog)), layouts(program.types), objects(program, layouts) {
  auto t0 = std::chrono::steady_clock::now();
  andersen = run_andersen(program, objects);
  modref = compute_modref(program, objects, andersen);
  singletons = classify_singletons(program, objects, layouts, modref);
  times.preanalysis_ms = elapsed_ms(t0);

  auto t1 = std::chrono::steady_clock::now();
  annotated = annotate(program, andersen, modref);
  rename_objects(program, annotated);
  vfg = build_vfg(program, andersen, annotated);
  times.memssa_ms = elapsed_ms(t1);
}

std::unique_ptr<AnalysisInputs> prepare(Program prog) {
  return std::make_unique<AnalysisInputs>(std::move(prog));
}

} // namespace structflow
