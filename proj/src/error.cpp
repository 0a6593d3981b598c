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

#include "udf/error.hpp"

namespace udf {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownColumn: return "UnknownColumn";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kNonNumericContinuous: return "NonNumericContinuous";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kInvalidSchema: return "InvalidSchema";
    case ErrorCode::kDegenerateBins: return "DegenerateBins";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kNotPrefix: return "NotPrefix";
    case ErrorCode::kGroupTooLarge: return "GroupTooLarge";
    case ErrorCode::kLambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorCode::kBetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::kBadProbability: return "BadProbability";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kSingleGroup: return "SingleGroup";
    case ErrorCode::kNoEligibleGroups: return "NoEligibleGroups";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kBadModelFile: return "BadModelFile";
    case ErrorCode::kDivergedTraining: return "DivergedTraining";
  }
  return "Unknown";
}

}  // namespace udf
