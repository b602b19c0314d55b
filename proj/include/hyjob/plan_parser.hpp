#pragma once

#include <string>
#include <string_view>

#include "hyjob/error.hpp"
#include "hyjob/plan.hpp"

namespace hyjob {

struct ParseDiagnostic {
  std::size_t line = 1;    // 1-based
  std::size_t column = 1;  // 1-based
  std::string message;
};

class ParseError : public Error {
 public:
  explicit ParseError(ParseDiagnostic d)
      : Error(ErrorCode::SyntaxError, std::to_string(d.line) + ":" + std::to_string(d.column) +
                                          ": " + d.message),
        diagnostic_(std::move(d)) {}
  const ParseDiagnostic& diagnostic() const noexcept { return diagnostic_; }

 private:
  ParseDiagnostic diagnostic_;
};

/// Parses plan text:
///
///   plan    := segment (';' segment)* ';'?
///   segment := job (',' job)*
///   job     := 'J' INT '(' INT ',' INT ',' input (',' BOOL)? ')'
///   input   := INT | ref ref*
///   ref     := 'R' INT ('[' INT '..' INT ']')?
///
/// Whitespace is free and `#` comments run to end of line. Job fields are
/// (function id, threads, input, no_send). Throws ParseError on bad syntax
/// and Error(ValidationError) when the plan breaks a plan invariant.
AlgorithmPlan parse_plan(std::string_view source);

/// Canonical text: one segment per line, `, ` between jobs, explicit ranges,
/// no_send printed only when true. No trailing newline.
std::string serialize_plan(const AlgorithmPlan& plan);

/// The sample plan file used throughout the docs and tests.
std::string_view sample_plan_text();

AlgorithmPlan load_plan_file(const std::string& path);

}  // namespace hyjob
