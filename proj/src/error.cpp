#include "perfsamp/error.hpp"

namespace perfsamp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroMassInterval: return "ZeroMassInterval";
    case ErrorCode::DivergentTilt: return "DivergentTilt";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::GuardViolation: return "GuardViolation";
    case ErrorCode::IterationCap: return "IterationCap";
    case ErrorCode::UncertifiedTime: return "UncertifiedTime";
    case ErrorCode::BlockBudgetExceeded: return "BlockBudgetExceeded";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::DegenerateBinning: return "DegenerateBinning";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace perfsamp
