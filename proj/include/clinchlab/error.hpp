// Copyright 2026 The clinchlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clinchlab {

enum class ErrorKind {
  kDuplicateValuation,
  kNegativeInput,
  kArrivalOrderViolation,
  kTooFewBidders,
  kNumericalFailure,
  kInvariantViolation,
  kDomainError,
  kNotSymmetric,
  kStepTooLarge,
  kParse,
};

constexpr std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDuplicateValuation: return "DuplicateValuation";
    case ErrorKind::kNegativeInput: return "NegativeInput";
    case ErrorKind::kArrivalOrderViolation: return "ArrivalOrderViolation";
    case ErrorKind::kTooFewBidders: return "TooFewBidders";
    case ErrorKind::kNumericalFailure: return "NumericalFailure";
    case ErrorKind::kInvariantViolation: return "InvariantViolation";
    case ErrorKind::kDomainError: return "DomainError";
    case ErrorKind::kNotSymmetric: return "NotSymmetric";
    case ErrorKind::kStepTooLarge: return "StepTooLarge";
    case ErrorKind::kParse: return "ParseError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` distinguishes causes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace clinchlab
