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
#include <span>
#include <vector>

#include "udf/rng.hpp"

namespace udf {

enum class Backend { kTable, kMlp };

// Probability floor applied before any log.
inline constexpr double kProbFloor = 1e-12;

// p(feature | parents) as a softmax over logits. Parents are feature indices
// read from a full record in schema layout.
//
// Table backend: one logit row per joint parent state (mixed radix over the
// parents, first parent most significant).
// MLP backend: logits = b2 + W2 tanh(b1 + W1 x) where x is the one-hot
// concatenation of the parents. W1 is stored input-major so a one-hot input
// reduces the first layer to a sum of columns.
class Conditional {
 public:
  static Conditional table(int cardinality, std::vector<int> parents, std::vector<int> parent_cards);
  static Conditional mlp(int cardinality, std::vector<int> parents, std::vector<int> parent_cards, int hidden,
                         Rng& init_rng);

  Backend backend() const { return backend_; }
  int cardinality() const { return card_; }
  int hidden() const { return hidden_; }
  const std::vector<int>& parents() const { return parents_; }
  const std::vector<int>& parent_cards() const { return parent_cards_; }
  std::size_t parent_states() const { return parent_states_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Writes the floored, renormalized distribution into out[0..cardinality).
  void probs(std::span<const std::int32_t> record, std::span<double> out) const;

  // grad += weight * d log p(value | parents(record)) / d params; returns
  // log p(value | parents(record)). grad has params().size() entries.
  double accumulate_log_prob_grad(std::span<const std::int32_t> record, int value, double weight,
                                  std::span<double> grad) const;

  std::size_t parent_state(std::span<const std::int32_t> record) const;

  // Table backend only: overwrite one row of logits with log-probabilities.
  void set_table_row(std::size_t state, std::span<const double> probabilities);

  // Rebuilds a conditional from serialized parameters.
  static Conditional restore(Backend backend, int cardinality, std::vector<int> parents,
                             std::vector<int> parent_cards, int hidden, std::vector<double> params);

 private:
  Conditional() = default;
  void init_layout();
  void logits(std::span<const std::int32_t> record, std::span<double> out, std::span<double> hidden) const;

  Backend backend_ = Backend::kTable;
  int card_ = 0;
  int hidden_ = 0;
  std::vector<int> parents_;
  std::vector<int> parent_cards_;
  std::vector<int> input_offsets_;  // mlp: one-hot offset of each parent
  int input_dim_ = 0;
  std::size_t parent_states_ = 1;
  std::vector<double> params_;
};

// Softmax followed by the probability floor and renormalization.
void softmax_floored(std::span<const double> logits, std::span<double> out);

}  // namespace udf
