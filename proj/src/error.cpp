#include "wvp/error.hpp"

namespace wvp {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::ParseError: return "ParseError";
    case Errc::NegativeVotes: return "NegativeVotes";
    case Errc::NegativeValue: return "NegativeValue";
    case Errc::NonPositiveValue: return "NonPositiveValue";
    case Errc::UnknownVariable: return "UnknownVariable";
    case Errc::NonBinaryIndicator: return "NonBinaryIndicator";
    case Errc::MissingClusterId: return "MissingClusterId";
    case Errc::TooFewObservations: return "TooFewObservations";
    case Errc::EmptySample: return "EmptySample";
    case Errc::EmptyRegime: return "EmptyRegime";
    case Errc::TooLargeForOracle: return "TooLargeForOracle";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::EmptyDesign: return "EmptyDesign";
    case Errc::AllColumnsAliased: return "AllColumnsAliased";
    case Errc::SingleCluster: return "SingleCluster";
    case Errc::SingularRestrictionVariance: return "SingularRestrictionVariance";
    case Errc::DegenerateGrid: return "DegenerateGrid";
    case Errc::EmptyProfile: return "EmptyProfile";
    case Errc::MissingCoefficient: return "MissingCoefficient";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category(Errc code) {
  switch (code) {
    case Errc::NoConvergence:
    case Errc::EmptyDesign:
    case Errc::AllColumnsAliased:
    case Errc::SingleCluster:
    case Errc::SingularRestrictionVariance:
    case Errc::DegenerateGrid:
    case Errc::EmptyProfile:
    case Errc::MissingCoefficient:
      return ErrorCategory::Numerical;
    case Errc::ConfigInvalid:
    case Errc::InvalidArgument:
      return ErrorCategory::Usage;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace wvp
