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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "udf/generator.hpp"

namespace udf {

// A dataset with an N x K missingness mask. Masked cells of `data` are set
// to 0 so nothing downstream can read the hidden value.
struct MaskedDataset {
  EncodedDataset data;
  std::vector<std::uint8_t> mask;  // row-major, 1 = missing
  double missing_prob = 0.0;

  bool missing(std::size_t i, std::size_t k) const { return mask[i * data.cols() + k] != 0; }
  std::size_t missing_count() const;
};

// Each cell missing independently with probability p; a row that comes out
// fully masked is redrawn. Row i uses its own derived stream.
// kBadProbability unless 0 < p < 1.
MaskedDataset mask_mcar(const EncodedDataset& data, double p, std::uint64_t seed);

// Applies a given mask (same shape) to a dataset.
MaskedDataset apply_mask(const EncodedDataset& data, std::vector<std::uint8_t> mask, double missing_prob);

nlohmann::json mask_to_json(const MaskedDataset& masked, std::uint64_t seed);

struct ImputeConfig {
  std::uint64_t enumeration_limit = 100000;  // completions per row for the exact path
  int gibbs_sweeps = 20;
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;
};

struct ImputeStats {
  std::size_t exact_rows = 0;
  std::size_t gibbs_rows = 0;
};

// Fills every masked cell by sampling from the generator's conditional given
// the observed cells of the row: exactly, by enumerating all completions,
// when there are at most enumeration_limit of them, else by Gibbs sweeps.
// Observed cells are copied unchanged. kSchemaMismatch on schema mismatch.
EncodedDataset impute(const Generator& gen, const MaskedDataset& masked, const ImputeConfig& config = {},
                      ImputeStats* stats = nullptr);

// Posterior over completions of one row, in mixed-radix order of the missing
// features taken in generation order. Exposed for tests.
std::vector<double> completion_posterior(const Generator& gen, std::span<const std::int32_t> record,
                                         const std::vector<bool>& missing);

struct ImputationScore {
  double accuracy = 0.0;  // percent over masked categorical cells
  double rmse = 0.0;      // over masked continuous cells, bin midpoints
  double mi = 0.0;        // nats, I(s; d_as) of the imputed table
  std::size_t categorical_cells = 0;
  std::size_t continuous_cells = 0;
};

// kShapeMismatch when the three tables disagree in shape.
ImputationScore score_imputation(const EncodedDataset& imputed, const EncodedDataset& truth,
                                 const MaskedDataset& masked);

}  // namespace udf
