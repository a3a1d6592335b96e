#pragma once

#include <stdexcept>
#include <string>

namespace contactlab {

enum class ErrorCode {
  // expression language
  SyntaxError,
  UnknownIdentifier,
  DomainError,
  NonSmoothPoint,
  DepthExceeded,
  // charts
  UnparametrizedLevelSet,
  RankDeficient,
  OffManifoldPoint,
  // calculus
  DegreeOverflow,
  DegreeUnderflow,
  DimensionMismatch,
  NotContact,
  // positivity
  EvenDimension,
  NotClosed,
  ZeroPolynomial,
  NumericallyIndeterminate,
  // open books
  EmptyBinding,
  TransversalityFailure,
  NotAdapted,
  TransversalityNotNegative,
  NotTransverse,
  NotContactFields,
  HypothesisFailure,
  KSearchExhausted,
  // bourgeois
  DomainConditionFailure,
  NotContactResult,
  FiberMismatch,
  SingularSplitting,
  NotClosedPotential,
  BaseNotDominated,
  EpsilonExhausted,
  // covers
  BranchRestrictionNotContact,
  DownstairsNotDominated,
  // reeb
  ProfileViolation,
  PredictionMismatch,
  StepCollapse,
  LeftDomain,
  // cli
  SceneParseError,
  UnknownCommand,
  SelectorNotFound,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace contactlab
