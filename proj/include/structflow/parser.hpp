// parser.hpp - Textual IR reader and validator.
//
// Grammar (one item per line, `;` starts a comment):
//
//   type N = struct { f: T, ... }
//   type N = class(B1, B2) virtual { f: T, ... }
//   type N = [c x T]
//   global g = alloca T, n
//   func name(a, b) {
//   label:
//     p = alloca T, n        p = malloc n           p = q
//     p = cast T*, q         p = load q             store p, q
//     p = phi [q, L1], [x, L2]
//     p = array T, q, c      p = array T, q, j      (T is the element type)
//     p = field q, T.f.g     p = field q, j
//     constructor T, o       p = dyncast T*, q
//     p = call f(a, ...)     call f(a, ...)
//     ret p | ret            br c, L1, L2           jmp L
//   }
//
// Type references are i8, i16, i32, i64, ptr, a declared name, or [c x T].

#pragma once

#include "structflow/ir.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace structflow {

enum class DiagKind : std::uint8_t { SyntaxError, ResolveError, SsaViolation, CfgError };

struct Diagnostic {
  DiagKind kind = DiagKind::SyntaxError;
  int line = 0;
  int column = 0;
  std::string message;
};

std::string_view diag_kind_name(DiagKind kind);
std::string format_diagnostic(const Diagnostic &d);

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
  /// True when every diagnostic is a syntax error.
  bool syntax_only() const;
};

/// Parses and fully validates a program. Never throws on malformed input.
ParseResult parse_program(std::string_view text);

/// Convenience for tests and tools: parses or throws std::runtime_error
/// carrying the formatted diagnostics.
Program parse_or_throw(std::string_view text);

} // namespace structflow
