#include "langprofile/error.hpp"

namespace langprofile {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedTier: return "MalformedTier";
    case ErrorCode::OrphanDependentTier: return "OrphanDependentTier";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::UnbalancedScope: return "UnbalancedScope";
    case ErrorCode::DanglingMarker: return "DanglingMarker";
    case ErrorCode::EmptyTranscript: return "EmptyTranscript";
    case ErrorCode::DivisionDomain: return "DivisionDomain";
    case ErrorCode::NoScorableUtterances: return "NoScorableUtterances";
    case ErrorCode::ZeroSd: return "ZeroSd";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ZeroProbability: return "ZeroProbability";
    case ErrorCode::BadModelFile: return "BadModelFile";
    case ErrorCode::AllConstant: return "AllConstant";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::TooFewComponents: return "TooFewComponents";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TinyCluster: return "TinyCluster";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
      return ErrorClass::Usage;
    case ErrorCode::DivisionDomain:
    case ErrorCode::ZeroSd:
    case ErrorCode::ZeroProbability:
    case ErrorCode::AllConstant:
    case ErrorCode::NotSymmetric:
    case ErrorCode::NoConvergence:
    case ErrorCode::ZeroTotal:
    case ErrorCode::TooFewComponents:
    case ErrorCode::DegenerateInput:
    case ErrorCode::SingleCluster:
    case ErrorCode::TinyCluster:
      return ErrorClass::Numeric;
    default:
      return ErrorClass::Data;
  }
}

}  // namespace langprofile
