#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace langprofile {

enum class ErrorCode {
  // transcript parsing
  MalformedTier,
  OrphanDependentTier,
  BadHeader,
  UnbalancedScope,
  DanglingMarker,
  // feature extraction
  EmptyTranscript,
  DivisionDomain,
  NoScorableUtterances,
  ZeroSd,
  // language models
  EmptyCorpus,
  ZeroProbability,
  BadModelFile,
  // numerics
  AllConstant,
  NotSymmetric,
  NoConvergence,
  ZeroTotal,
  TooFewComponents,
  // clustering / statistics
  DegenerateInput,
  SingleCluster,
  LengthMismatch,
  TinyCluster,
  // pipeline
  SchemaMismatch,
  NonNumericCell,
  BadConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Failure category used by the CLI to pick an exit code.
enum class ErrorClass { Usage, Data, Numeric };

ErrorClass classify(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The description without the error-code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace langprofile
