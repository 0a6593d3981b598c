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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "udf/dataset.hpp"
#include "udf/rng.hpp"

namespace udf {

// A binary prediction task: one advantaged feature turned into a label,
// evaluated for disparity across the joint state of some protected features.
struct TaskSpec {
  std::string name;
  int target = -1;
  std::vector<bool> positive;  // per category / bin of the target
  std::vector<int> protected_features;

  int label(std::span<const std::int32_t> record) const { return positive[static_cast<std::size_t>(record[target])] ? 1 : 0; }
};

// {"name", "target", "positive": [category, ...] | "threshold": x, "protected": [...]}.
// A threshold marks bins whose midpoint exceeds x as positive. Targets must
// be advantaged and groups protected (kInvalidConfig).
TaskSpec task_from_json(const nlohmann::json& doc, const FeatureSchema& schema, const Encoding& encoding);
// {"tasks": [...]}
std::vector<TaskSpec> load_tasks(const std::string& path, const FeatureSchema& schema, const Encoding& encoding);

std::vector<int> task_labels(const EncodedDataset& data, const TaskSpec& task);
std::vector<std::size_t> task_groups(const EncodedDataset& data, const TaskSpec& task);

struct DownstreamConfig {
  int hidden = 64;
  double lr = 5e-3;
  int max_epochs = 40;
  int patience = 4;
  std::size_t batch_size = 256;
  double validation_fraction = 0.1;
  bool exclude_protected = false;
};

// One-hidden-layer tanh network with a logistic output over one-hot inputs.
class Classifier {
 public:
  Classifier(const FeatureSchema& schema, std::vector<int> inputs, int hidden, Rng& init);

  double predict_proba(std::span<const std::int32_t> record) const;
  std::vector<double> predict_proba(const EncodedDataset& data) const;

  const std::vector<int>& inputs() const { return inputs_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // grad += d BCE(record, y) / d params; returns the loss.
  double accumulate_grad(std::span<const std::int32_t> record, int y, std::span<double> grad) const;

 private:
  double forward(std::span<const std::int32_t> record, std::span<double> z) const;

  std::vector<int> inputs_;
  std::vector<int> offsets_;
  int input_dim_ = 0;
  int hidden_ = 0;
  std::vector<double> params_;  // W1 [in x h], b1 [h], w2 [h], b2
};

// Trains on every non-target feature (protected ones optional), stopping
// early on a held-out slice. kDegenerateLabels if the labels are constant.
Classifier train_downstream(const EncodedDataset& train, const TaskSpec& task, std::uint64_t seed,
                            const DownstreamConfig& config = {});

}  // namespace udf
