#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prospect_drive
{

enum class ErrorCode {
  InvalidArgument,
  InvalidPath,
  NoCrossing,
  InvalidTrajectory,
  WindowTooLong,
  NotApproaching,
  LengthMismatch,
  NonConvergence,
  InfeasibleStart,
  UnsortedProspect,
  InvalidProspect,
  NegativeUtility,
  EmptyCandidates,
  EmptyDataset,
  UnlabeledFrame,
  ParseError,
  SchemaError,
  InconsistentPair,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & what);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string & what);

}  // namespace prospect_drive
