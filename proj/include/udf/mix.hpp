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
#include <memory>
#include <span>
#include <vector>

#include "udf/fairness.hpp"
#include "udf/generator.hpp"

namespace udf {

inline constexpr double kDefaultBetaMax = 50.0;

// Mixing weight lambda(s, beta) in (0, 1): one tanh hidden layer over the
// one-hot protected state and beta / beta_max, sigmoid output.
//
// Parameter layout: W1 [(S + 1) x hidden] input-major, b1 [hidden],
// w2 [hidden], b2 [1].
class LambdaNet {
 public:
  LambdaNet(std::size_t s_states, int hidden, double beta_max, std::uint64_t seed);
  static LambdaNet restore(std::size_t s_states, int hidden, double beta_max, std::vector<double> params);

  double operator()(std::size_t s, double beta) const;
  // grad += weight * d lambda(s, beta) / d params; returns lambda(s, beta).
  double accumulate_grad(std::size_t s, double beta, double weight, std::span<double> grad) const;

  // Split forward/backward for callers that evaluate first and weight later.
  // `hidden` holds hidden() activations written by forward().
  double forward(std::size_t s, double beta, std::span<double> hidden) const;
  void backward(std::size_t s, double beta, std::span<const double> hidden, double lam, double weight,
                std::span<double> grad) const;

  std::size_t s_states() const { return s_states_; }
  int hidden() const { return hidden_; }
  double beta_max() const { return beta_max_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

 private:
  LambdaNet() = default;

  std::size_t s_states_ = 0;
  int hidden_ = 0;
  double beta_max_ = kDefaultBetaMax;
  std::vector<double> params_;
};

// lam * p_das + (1 - lam) * row. kLambdaOutOfRange unless lam is in [0, 1].
std::vector<double> mix_row(std::span<const double> p_das, std::span<const double> row, double lam);

// q(s, d_as, d_s) = p(s) [lambda(s) p(d_as) + (1 - lambda(s)) p(d_as | s)] p(d_s | s, d_as).
// The base generator is shared, never copied: protected and remaining steps
// delegate to it unchanged.
class MixedGenerator final : public Generator {
 public:
  // Fixed per-state weights (one per joint protected state).
  MixedGenerator(std::shared_ptr<const ChainGenerator> base, std::vector<double> lambda);
  // Weights from a trained network at the given beta.
  MixedGenerator(std::shared_ptr<const ChainGenerator> base, std::shared_ptr<const LambdaNet> net, double beta);

  const FeatureSchema& schema() const override { return base_->schema(); }
  const Encoding& encoding() const override { return base_->encoding(); }
  const std::vector<int>& order() const override { return base_->order(); }
  void step_probs(std::size_t pos, std::span<const std::int32_t> record, std::span<double> out) const override;
  GroupTables group_tables(std::uint64_t limit = kDefaultEnumerationLimit) const override;

  // With probability lambda(s) the whole d_as block is drawn from p(d_as),
  // otherwise from p(d_as | s). Row-seeded like Generator::sample.
  EncodedDataset sample(std::size_t n, std::uint64_t seed, Exec exec = Exec::kParallel) const override;

  const ChainGenerator& base() const { return *base_; }
  const std::shared_ptr<const ChainGenerator>& base_ptr() const { return base_; }
  const std::shared_ptr<const LambdaNet>& net() const { return net_; }
  double beta() const { return beta_; }
  const std::vector<double>& lambda() const { return lambda_; }
  const GroupTables& base_tables() const { return *base_tables_; }
  const GroupTables& mixed_tables() const { return mixed_; }

 private:
  void build();

  std::shared_ptr<const ChainGenerator> base_;
  std::shared_ptr<const LambdaNet> net_;
  std::shared_ptr<const GroupTables> base_tables_;
  double beta_ = 0.0;
  std::vector<double> lambda_;
  GroupTables mixed_;
  std::size_t ns_ = 0;
  std::size_t na_ = 0;
  std::vector<std::vector<double>> level_mass_;

  friend MixedGenerator set_beta(const MixedGenerator& mix, double beta);
};

// Same network, new beta; no optimization. kBetaOutOfRange outside
// [0, beta_max] or when the mixture has no network.
MixedGenerator set_beta(const MixedGenerator& mix, double beta);

struct MixConfig {
  double beta_max = kDefaultBetaMax;
  std::size_t n_beta = 1000;     // size of the beta set, drawn once
  std::size_t batch_betas = 64;  // betas per gradient step; 0 uses the whole set
  int iterations = 600;
  int eval_every = 100;  // full-set evaluations used to keep the best iterate
  // Weight each beta's term by 1 / (beta_offset + beta). Per-beta minimizers
  // are unchanged; small-beta terms are no longer swamped by the beta * kl
  // scale.
  bool scale_by_beta = true;
  double beta_offset = 1.0;
  double lr = 0.05;
  int hidden = 32;
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;
};

struct LambdaTraining {
  LambdaNet net;
  std::vector<double> betas;
  // Plain mean over the beta set of mi + beta * kl.
  double initial_objective = 0.0;
  double final_objective = 0.0;
  // The optimized quantity (equal to the above unless scale_by_beta).
  double initial_training_objective = 0.0;
  double final_training_objective = 0.0;
  std::vector<double> history;  // training objective at each full-set evaluation
  double seconds = 0.0;
};

// mixture_objective specialised for repeated evaluation on one base: the
// base logs are computed once. Returns only the total mi + beta * kl.
class MixtureKernel {
 public:
  explicit MixtureKernel(const GroupTables& base);
  double operator()(std::span<const double> lambda, double beta, std::span<double> grad_lambda = {}) const;
  const GroupTables& tables() const { return *base_; }

 private:
  const GroupTables* base_;
  std::vector<double> log_c_;
  std::vector<double> log_m_;
};

// Mean over `betas` of the exact mixture objective for the network, with the
// gradient w.r.t. the network parameters written into `grad` (if non-empty).
// Per-beta terms are reduced in index order, so the result does not depend
// on the execution policy.
double averaged_lambda_objective(const GroupTables& base, const LambdaNet& net, std::span<const double> betas,
                                 std::span<double> grad, Exec exec = Exec::kParallel);
// Same with optional per-beta weights on each term.
double averaged_lambda_objective(const MixtureKernel& kernel, const LambdaNet& net, std::span<const double> betas,
                                 std::span<double> grad, Exec exec, std::span<const double> weights = {});

// Trains lambda(s, beta) by Adam on the beta-averaged objective. Returns the
// best iterate, so the final objective never exceeds the initial one.
LambdaTraining train_lambda(const ChainGenerator& base, const MixConfig& config);

}  // namespace udf
