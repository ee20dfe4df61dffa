#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perfsamp {

enum class ErrorCode {
  ZeroMassInterval,
  DivergentTilt,
  NoRoot,
  GuardViolation,
  IterationCap,
  UncertifiedTime,
  BlockBudgetExceeded,
  StateSpaceTooLarge,
  DegenerateBinning,
  InvalidModel,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Caps and budgets are operational limits rather than bad input.
  bool is_budget_failure() const noexcept {
    return code_ == ErrorCode::IterationCap || code_ == ErrorCode::BlockBudgetExceeded;
  }

 private:
  ErrorCode code_;
};

}  // namespace perfsamp
