#ifndef DOENG_ERRORS_HPP
#define DOENG_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace doeng {

enum class ErrKind {
  Cycle,
  PartialFunction,
  BadTable,
  BadExpression,
  DuplicateDeclaration,
  MissingDefinition,
  BadDomain,
  SupportTooLarge,
  UnknownVariable,
  ValueNotInDomain,
  FixedNotParent,
  UnattainableStratum,
  StratumNotCovered,
  IndexUnrealized,
  ImportCycle,
  WorldConflict,
  ZeroConditioningEvent,
  PositivityViolation,
  NonBinaryVariable,
  NonNumericVariable,
  ShapeMismatch,
  EmptyPreimage,
  NeedTwoVersions,
  InvalidCollection,
  BadArgument,
  Io,
};

const char* err_kind_name(ErrKind k);

class Error : public std::runtime_error {
public:
  Error(ErrKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrKind kind() const { return kind_; }

private:
  ErrKind kind_;
};

struct Violation {
  ErrKind kind;
  std::string message;
  int line = 0; // 1-based when known, 0 otherwise
  int col = 0;
};

// validate() collects every violation it can find before giving up.
class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(violations.empty() ? ErrKind::BadArgument : violations.front().kind,
              join(violations)),
        violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

  bool has(ErrKind k) const {
    for (const auto& v : violations_)
      if (v.kind == k) return true;
    return false;
  }

private:
  static std::string join(const std::vector<Violation>& vs) {
    std::string out;
    for (const auto& v : vs) {
      if (!out.empty()) out += "; ";
      out += v.message;
    }
    return out.empty() ? "invalid model" : out;
  }

  std::vector<Violation> violations_;
};

class ParseError : public Error {
public:
  ParseError(int line, int col, const std::string& message,
             std::vector<std::string> expected = {})
      : Error(ErrKind::BadArgument,
              std::to_string(line) + ":" + std::to_string(col) + ": " + message),
        line_(line), col_(col), expected_(std::move(expected)) {}

  int line() const { return line_; }
  int col() const { return col_; }
  const std::vector<std::string>& expected() const { return expected_; }

private:
  int line_;
  int col_;
  std::vector<std::string> expected_;
};

} // namespace doeng

#endif
