#include <churnstore/common.hpp>

namespace churnstore {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::RateTooHigh: return "RateTooHigh";
    case ErrorCode::OutOfHorizon: return "OutOfHorizon";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::CommitteeDead: return "CommitteeDead";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::RequesterGone: return "RequesterGone";
    case ErrorCode::NotEnoughPieces: return "NotEnoughPieces";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::ReconstructionImpossible: return "ReconstructionImpossible";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace churnstore
