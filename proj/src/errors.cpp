#include "prospect_drive/errors.hpp"

namespace prospect_drive
{

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::InvalidTrajectory: return "InvalidTrajectory";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::NotApproaching: return "NotApproaching";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::UnsortedProspect: return "UnsortedProspect";
    case ErrorCode::InvalidProspect: return "InvalidProspect";
    case ErrorCode::NegativeUtility: return "NegativeUtility";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnlabeledFrame: return "UnlabeledFrame";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InconsistentPair: return "InconsistentPair";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string & what)
: std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

void fail(ErrorCode code, const std::string & what) { throw Error(code, what); }

}  // namespace prospect_drive
