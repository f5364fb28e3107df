#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wvp {

enum class Errc {
  // data
  EmptyInput,
  MissingColumn,
  DuplicateKey,
  ParseError,
  NegativeVotes,
  NegativeValue,
  NonPositiveValue,
  UnknownVariable,
  NonBinaryIndicator,
  MissingClusterId,
  TooFewObservations,
  EmptySample,
  EmptyRegime,
  TooLargeForOracle,
  // numerical
  NoConvergence,
  EmptyDesign,
  AllColumnsAliased,
  SingleCluster,
  SingularRestrictionVariance,
  DegenerateGrid,
  EmptyProfile,
  MissingCoefficient,
  // usage
  ConfigInvalid,
  InvalidArgument,
  Io,
};

enum class ErrorCategory { Usage, Data, Numerical };

std::string_view to_string(Errc code);
ErrorCategory category(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace wvp
