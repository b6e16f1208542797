#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace riskforge {

enum class ErrorCode {
  MissingColumn,
  IoFailure,
  KeyMissing,
  NonNumericColumn,
  EmptyCohort,
  MissingIntime,
  MissingDischtime,
  UnlinkedEvent,
  ComponentOutOfRange,
  AllMissingColumn,
  SingularDesign,
  LayoutMismatch,
  EmptyCorpus,
  ConvergenceFailure,
  Separation,
  SingularHessian,
  ConstantColumn,
  NonConvergence,
  DegenerateFold,
  NoValidSplit,
  OutOfRange,
  SingleClass,
  TooFewRows,
  InfeasiblePrevalence,
  MissingArtifact,
  ConfigInvalid,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

struct Warning {
  ErrorCode code;
  std::string message;
};

// Non-fatal conditions (empty cohort, unlinked events, MICE fallbacks) are
// appended here when the caller supplies a sink.
using Warnings = std::vector<Warning>;

inline void warn(Warnings* sink, ErrorCode code, std::string message) {
  if (sink != nullptr) sink->push_back({code, std::move(message)});
}

}  // namespace riskforge
