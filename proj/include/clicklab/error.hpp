/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clicklab {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidIdentifier,
  kDuplicateItem,
  kInvalidProbability,
  kNotInRanking,
  kMissingRelevance,
  kBehaviorCoverage,
  kDegenerateChoiceSet,
  kInsufficientPoints,
  kZeroPropensity,
  kDegenerateCorrection,
  kEmptyLog,
  kMissingContext,
  kNeverDisplayed,
  kMissingEstimate,
  kEmptyScenario,
  kModelCoverage,
  kFitDiverged,
  kInconsistent,
  kNoConvergence,
  kPrecondition,
  kBoundaryRelevance,
  kEmptyRank,
  kParse,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace clicklab
