// vaereg/error.hpp

// Copyright 2026  The vaereg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vaereg {

enum class Errc {
  // usage
  kUnknownKey,
  kTypeError,
  kInvalidConfig,
  kInvalidArchitecture,
  kInvalidDim,
  // data
  kShapeMismatch,
  kParseError,
  kDimMismatch,
  kDuplicateUtteranceId,
  kDuplicatePair,
  kEmptySet,
  kEmptyDataset,
  kUnknownSpeaker,
  kUnknownTrialId,
  kDegenerateTrials,
  kTooFewSamples,
  kInsufficientPairs,
  kZeroVector,
  kIoError,
  // numerical
  kNotPositiveDefinite,
  kConvergenceFailure,
  kRankDeficient,
  kSingularWithin,
  kDegenerateData,
  kZeroVariance,
  kNonFiniteLoss,
};

enum class ErrorClass { kUsage, kData, kNumerical };

inline std::string_view errc_name(Errc e) {
  switch (e) {
    case Errc::kUnknownKey: return "UnknownKey";
    case Errc::kTypeError: return "TypeError";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kInvalidArchitecture: return "InvalidArchitecture";
    case Errc::kInvalidDim: return "InvalidDim";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kParseError: return "ParseError";
    case Errc::kDimMismatch: return "DimMismatch";
    case Errc::kDuplicateUtteranceId: return "DuplicateUtteranceId";
    case Errc::kDuplicatePair: return "DuplicatePair";
    case Errc::kEmptySet: return "EmptySet";
    case Errc::kEmptyDataset: return "EmptyDataset";
    case Errc::kUnknownSpeaker: return "UnknownSpeaker";
    case Errc::kUnknownTrialId: return "UnknownTrialId";
    case Errc::kDegenerateTrials: return "DegenerateTrials";
    case Errc::kTooFewSamples: return "TooFewSamples";
    case Errc::kInsufficientPairs: return "InsufficientPairs";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kIoError: return "IoError";
    case Errc::kNotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::kConvergenceFailure: return "ConvergenceFailure";
    case Errc::kRankDeficient: return "RankDeficient";
    case Errc::kSingularWithin: return "SingularWithin";
    case Errc::kDegenerateData: return "DegenerateData";
    case Errc::kZeroVariance: return "ZeroVariance";
    case Errc::kNonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

inline ErrorClass error_class(Errc e) {
  switch (e) {
    case Errc::kUnknownKey:
    case Errc::kTypeError:
    case Errc::kInvalidConfig:
    case Errc::kInvalidArchitecture:
    case Errc::kInvalidDim:
      return ErrorClass::kUsage;
    case Errc::kNotPositiveDefinite:
    case Errc::kConvergenceFailure:
    case Errc::kRankDeficient:
    case Errc::kSingularWithin:
    case Errc::kDegenerateData:
    case Errc::kZeroVariance:
    case Errc::kNonFiniteLoss:
      return ErrorClass::kNumerical;
    default:
      return ErrorClass::kData;
  }
}

/// Every failure in the library is reported as an Error carrying its kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string &what) {
  throw Error(code, what);
}

}  // namespace vaereg
