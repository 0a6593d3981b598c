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
#include <span>
#include <vector>

#include "udf/dataset.hpp"

namespace udf {

// Area under the ROC curve in percent via the Mann-Whitney statistic; tied
// scores count one half. kSingleClass unless both labels occur.
double auroc(std::span<const double> scores, std::span<const int> labels);

// 100 * max over group pairs of |P(yhat = 1 | g) - P(yhat = 1 | g')|, over
// groups with at least one member. kSingleGroup with fewer than two.
double demographic_parity(std::span<const int> preds, std::span<const std::size_t> groups);

struct EqualizedOdds {
  double value = 0.0;  // percent points
  std::vector<std::size_t> skipped_groups;  // present but lacking a positive or a negative
};

// 100 * max over eligible group pairs of the TPR or FPR gap. A group is
// eligible with at least one positive and one negative label;
// kNoEligibleGroups with fewer than two eligible groups.
EqualizedOdds equalized_odds(std::span<const int> preds, std::span<const int> labels,
                             std::span<const std::size_t> groups);

// Plug-in MI (nats) of the empirical joint of (prediction, group).
double prediction_mi(std::span<const int> preds, std::span<const std::size_t> groups);

// Plug-in MI (nats) between the joint protected state and the joint
// advantaged state of a dataset.
double dataset_group_mi(const EncodedDataset& data);

double accuracy(std::span<const int> preds, std::span<const int> labels);

}  // namespace udf
