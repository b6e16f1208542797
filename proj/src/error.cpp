#include "riskforge/error.hpp"

namespace riskforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::KeyMissing: return "KeyMissing";
    case ErrorCode::NonNumericColumn: return "NonNumericColumn";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::MissingIntime: return "MissingIntime";
    case ErrorCode::MissingDischtime: return "MissingDischtime";
    case ErrorCode::UnlinkedEvent: return "UnlinkedEvent";
    case ErrorCode::ComponentOutOfRange: return "ComponentOutOfRange";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateFold: return "DegenerateFold";
    case ErrorCode::NoValidSplit: return "NoValidSplit";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::InfeasiblePrevalence: return "InfeasiblePrevalence";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace riskforge
