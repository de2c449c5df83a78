#ifndef CHURNSTORE_COMMON_HPP
#define CHURNSTORE_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace churnstore {

/// Globally unique node identifier. Fresh ids are never reused.
using NodeId = std::uint32_t;
/// Synchronous round index.
using Round = std::int64_t;
/// Position of a node in the d-regular topology. A fresh node inherits the
/// slot (and therefore the edge slots) of the node it replaces.
using Slot = std::uint32_t;

inline constexpr NodeId kNoNode = 0xFFFFFFFFu;
inline constexpr Round kNever = INT64_MAX;

enum class ErrorCode {
  InvalidParams,
  GenerationExhausted,
  NotConverged,
  RateTooHigh,
  OutOfHorizon,
  TooLarge,
  UnknownNode,
  InsufficientSamples,
  CommitteeDead,
  NotFound,
  RequesterGone,
  NotEnoughPieces,
  HashMismatch,
  ReconstructionImpossible,
  BudgetExceeded,
  DomainError,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// ⌈ln n⌉, the integer "log n" used for every Θ(log n) count.
inline std::uint32_t ceil_ln(std::uint64_t n) {
  return static_cast<std::uint32_t>(std::ceil(std::log(static_cast<double>(n))));
}

}  // namespace churnstore

#endif  // CHURNSTORE_COMMON_HPP
