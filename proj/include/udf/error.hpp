/*
 * Copyright 2026 The UDF Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace udf {

enum class ErrorCode {
  // Input / configuration problems (CLI exit code 2).
  kUnknownColumn,
  kUnknownCategory,
  kNonNumericContinuous,
  kEmptyFile,
  kMalformedCsv,
  kInvalidSchema,
  kDegenerateBins,
  kEmptyDataset,
  kSchemaMismatch,
  kShapeMismatch,
  kLengthMismatch,
  kNotNormalized,
  kNotPrefix,
  kGroupTooLarge,
  kLambdaOutOfRange,
  kBetaOutOfRange,
  kBadProbability,
  kDegenerateLabels,
  kSingleClass,
  kSingleGroup,
  kNoEligibleGroups,
  kInvalidConfig,
  kIo,
  kBadModelFile,
  // Numerical failures (CLI exit code 3).
  kDivergedTraining,
};

std::string_view error_name(ErrorCode code);

// True for errors caused by bad inputs or configuration rather than numerics.
inline bool is_input_error(ErrorCode code) { return code != ErrorCode::kDivergedTraining; }

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace udf
