// printer.hpp - Renders a program back into the textual IR.

#pragma once

#include "structflow/ir.hpp"

#include <string>

namespace structflow {

std::string print_program(const Program &prog);
std::string print_instruction(const Program &prog, const Instruction &inst);

/// Structural equality up to label numbering (types, globals, functions).
bool structurally_equal(const Program &a, const Program &b);

} // namespace structflow
