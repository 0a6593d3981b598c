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
#include <functional>
#include <span>
#include <vector>

#include "udf/generator.hpp"
#include "udf/optim.hpp"

namespace udf {

struct DpoConfig {
  int epochs = 5;
  std::size_t samples_per_epoch = 4096;
  std::size_t pairs_per_epoch = 0;  // pair attempts; 0 means samples_per_epoch
  double delta = 0.1;               // minimum reward gap (nats)
  double beta = 0.1;                // preference temperature / trade-off weight
  double lr = 0.01;
  std::size_t batch_size = 256;
  int passes = 1;  // sweeps over the epoch's pairs
  // When false the remaining-feature conditionals are not updated and their
  // terms cancel in the margin.
  bool update_remaining = false;
  std::uint64_t seed = 0;
  std::uint64_t enumeration_limit = kDefaultEnumerationLimit;
  Exec exec = Exec::kParallel;
};

// Row indices into the epoch's sample batch.
struct PreferencePair {
  std::size_t winner = 0;
  std::size_t loser = 0;
  double reward_gap = 0.0;
};

// r = log q(d_as) - log q(d_as | s) per row, from exact tables of q.
std::vector<double> score_samples(const GroupTables& tables, const EncodedDataset& batch,
                                  Exec exec = Exec::kParallel);

// `attempts` uniformly random index pairs (never i with itself); keeps those
// whose reward gap exceeds delta, higher reward as winner. Empty when fewer
// than two rows.
std::vector<PreferencePair> build_pairs(std::span<const double> rewards, std::size_t attempts, double delta,
                                        std::uint64_t seed);

// Mean over pairs of -log sigmoid(beta * margin), where
// margin = (log q(w) - log ref(w)) - (log q(l) - log ref(l)) on full records.
// ref_log_prob holds log ref(row) for every batch row. When grad is non-null
// it receives d loss / d q-params (overwritten, not accumulated).
double dpo_loss(const ChainGenerator& q, std::span<const double> ref_log_prob, const EncodedDataset& batch,
                std::span<const PreferencePair> pairs, double beta, GeneratorGrad* grad = nullptr,
                Exec exec = Exec::kParallel);

// One Adam state per conditional of the trained copy.
class DpoOptimizer {
 public:
  // Positions at or past `frozen_from` in the generation order are not updated.
  DpoOptimizer(const ChainGenerator& q, double lr, std::size_t frozen_from = SIZE_MAX);
  void step(ChainGenerator& q, const GeneratorGrad& grad);

 private:
  std::vector<Adam> adam_;
  std::size_t frozen_from_;
};

// One gradient step on the given pairs; returns the loss before the step.
// kDivergedTraining on a non-finite loss.
double dpo_step(ChainGenerator& q, DpoOptimizer& opt, std::span<const double> ref_log_prob,
                const EncodedDataset& batch, std::span<const PreferencePair> pairs, double beta,
                Exec exec = Exec::kParallel);

struct DpoEpochStats {
  int epoch = 0;          // 1-based
  double mi = 0.0;        // exact I(s; d_as) of q before this epoch's update
  double neg_reward = 0;  // exact E_q[-r] before the update
  double mc_neg_reward = 0.0;
  double mc_stderr = 0.0;
  std::size_t pairs = 0;
  double loss = 0.0;  // mean loss over the epoch's minibatches
  double seconds = 0.0;
};

struct DpoResult {
  ChainGenerator model;
  std::vector<DpoEpochStats> epochs;
  double final_mi = 0.0;
  double seconds = 0.0;
};

using DpoEpochCallback = std::function<void(const DpoEpochStats&, const ChainGenerator&)>;

// Approximately on-policy preference fine-tuning of a copy of `base`: every
// epoch samples from the current copy, scores with the exact reward, pairs
// and updates against the frozen base.
DpoResult run_udf_dpo(const ChainGenerator& base, const DpoConfig& config, const DpoEpochCallback& on_epoch = {});

}  // namespace udf
