// gen.hpp - Seeded random program generator for differential testing.

#pragma once

#include "structflow/ir.hpp"

#include <cstdint>
#include <string>

namespace structflow {

struct GenConfig {
  std::uint64_t seed = 1;
  int max_instructions = 40; // counts every instruction line, globals included
  int max_types = 4;
  int max_fields_per_struct = 4;
  double p_cast = 0.35;
  double p_field = 0.3;
  double p_store = 0.3;
  double p_call = 0.15;
  bool allow_loops = false;
  bool allow_classes = true;
};

/// Program text; identical for identical configs.
std::string generate_text(const GenConfig &cfg);
/// Parsed form of generate_text. Throws if the output fails validation.
Program generate(const GenConfig &cfg);

} // namespace structflow
