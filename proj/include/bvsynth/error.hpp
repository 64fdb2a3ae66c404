#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bvsynth {

enum class ErrorKind {
  UnboundVariable,
  WidthMismatch,
  SyntaxError,
  UnsupportedArity,
  MissingIf0Rule,
  InconsistentExamples,
  NotPBE,
  UnsolvableExample,
  UnunifiablePair,
  GrammarViolation,
  VerificationFailed,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::UnboundVariable: return "unbound variable";
    case ErrorKind::WidthMismatch: return "width mismatch";
    case ErrorKind::SyntaxError: return "syntax error";
    case ErrorKind::UnsupportedArity: return "unsupported arity";
    case ErrorKind::MissingIf0Rule: return "missing if0 rule";
    case ErrorKind::InconsistentExamples: return "inconsistent examples";
    case ErrorKind::NotPBE: return "not a PBE task";
    case ErrorKind::UnsolvableExample: return "unsolvable example";
    case ErrorKind::UnunifiablePair: return "ununifiable pair";
    case ErrorKind::GrammarViolation: return "grammar violation";
    case ErrorKind::VerificationFailed: return "verification failed";
  }
  return "error";
}

// Errors that stem from the input file rather than from the search.
constexpr bool is_input_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SyntaxError:
    case ErrorKind::UnsupportedArity:
    case ErrorKind::MissingIf0Rule:
    case ErrorKind::InconsistentExamples:
    case ErrorKind::NotPBE:
    case ErrorKind::WidthMismatch:
    case ErrorKind::UnboundVariable:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail)),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t col, const std::string& detail)
      : Error(ErrorKind::SyntaxError,
              std::to_string(line) + ":" + std::to_string(col) + ": " + detail),
        line_(line),
        col_(col) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t line_;
  std::size_t col_;
};

}  // namespace bvsynth
