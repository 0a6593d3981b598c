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

#include "udf/dpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "udf/error.hpp"
#include "udf/fairness.hpp"

namespace udf {

namespace {

// Gradient partial sums are kept per fixed chunk of pairs and added in chunk
// order, so the result is identical for any thread count.
constexpr std::size_t kGradChunks = 16;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<double> score_samples(const GroupTables& tables, const EncodedDataset& batch, Exec exec) {
  std::vector<double> r(batch.rows());
  for_each_index(batch.rows(), exec, [&](std::size_t i) {
    const auto row = batch.row(i);
    r[i] = reward(tables, tables.s_view.index(row), tables.das_view.index(row));
  });
  return r;
}

std::vector<PreferencePair> build_pairs(std::span<const double> rewards, std::size_t attempts, double delta,
                                        std::uint64_t seed) {
  std::vector<PreferencePair> pairs;
  const std::size_t n = rewards.size();
  if (n < 2) return pairs;
  Rng rng(derive_seed(seed, {kStreamPairs}));
  for (std::size_t t = 0; t < attempts; ++t) {
    const auto i = static_cast<std::size_t>(rng.below(n));
    auto j = static_cast<std::size_t>(rng.below(n - 1));
    if (j >= i) ++j;
    const double gap = rewards[i] - rewards[j];
    if (std::abs(gap) > delta) {
      pairs.push_back(gap > 0 ? PreferencePair{i, j, gap} : PreferencePair{j, i, -gap});
    }
  }
  return pairs;
}

double dpo_loss(const ChainGenerator& q, std::span<const double> ref_log_prob, const EncodedDataset& batch,
                std::span<const PreferencePair> pairs, double beta, GeneratorGrad* grad, Exec exec) {
  if (ref_log_prob.size() != batch.rows()) throw Error(ErrorCode::kLengthMismatch, "one reference log-prob per row");
  if (pairs.empty()) {
    if (grad) *grad = q.zero_grad();
    return 0.0;
  }
  const std::size_t n = pairs.size();
  const std::size_t chunks = std::min(kGradChunks, n);
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<GeneratorGrad> chunk_grad(grad ? chunks : 0);
  const double inv = 1.0 / static_cast<double>(n);

  for_each_index(
      chunks, exec,
      [&](std::size_t c) {
        const std::size_t lo = c * n / chunks;
        const std::size_t hi = (c + 1) * n / chunks;
        if (grad) chunk_grad[c] = q.zero_grad();
        double loss = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
          const auto& p = pairs[k];
          const auto w = batch.row(p.winner);
          const auto l = batch.row(p.loser);
          const double margin = (q.log_prob(w) - ref_log_prob[p.winner]) - (q.log_prob(l) - ref_log_prob[p.loser]);
          loss += softplus(-beta * margin);
          if (grad) {
            const double g = beta * sigmoid(-beta * margin) * inv;
            q.accumulate_log_prob_grad(w, -g, chunk_grad[c]);
            q.accumulate_log_prob_grad(l, g, chunk_grad[c]);
          }
        }
        chunk_loss[c] = loss;
      },
      1);

  if (grad) {
    *grad = std::move(chunk_grad[0]);
    for (std::size_t c = 1; c < chunks; ++c) {
      for (std::size_t pos = 0; pos < grad->size(); ++pos) {
        auto& dst = (*grad)[pos];
        const auto& src = chunk_grad[c][pos];
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
  }
  double total = 0.0;
  for (double v : chunk_loss) total += v;
  return total * inv;
}

DpoOptimizer::DpoOptimizer(const ChainGenerator& q, double lr, std::size_t frozen_from) : frozen_from_(frozen_from) {
  adam_.reserve(q.conditionals().size());
  for (const auto& c : q.conditionals()) adam_.emplace_back(c.params().size(), lr);
}

void DpoOptimizer::step(ChainGenerator& q, const GeneratorGrad& grad) {
  const std::size_t end = std::min(adam_.size(), frozen_from_);
  for (std::size_t pos = 0; pos < end; ++pos) adam_[pos].step(q.conditional(pos).params(), grad[pos]);
}

double dpo_step(ChainGenerator& q, DpoOptimizer& opt, std::span<const double> ref_log_prob, const EncodedDataset& batch,
                std::span<const PreferencePair> pairs, double beta, Exec exec) {
  GeneratorGrad grad;
  const double loss = dpo_loss(q, ref_log_prob, batch, pairs, beta, &grad, exec);
  if (!std::isfinite(loss)) throw Error(ErrorCode::kDivergedTraining, "DPO loss is not finite");
  if (!pairs.empty()) opt.step(q, grad);
  return loss;
}

DpoResult run_udf_dpo(const ChainGenerator& base, const DpoConfig& config, const DpoEpochCallback& on_epoch) {
  if (!(config.delta > 0.0) || config.samples_per_epoch < 2 || !(config.beta >= 0.0) || config.epochs < 0 ||
      config.batch_size < 1 || !(config.lr > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "DPO config needs delta > 0, N >= 2, beta >= 0, batch >= 1, lr > 0");
  }
  const auto t0 = std::chrono::steady_clock::now();
  DpoResult out{base, {}, 0.0, 0.0};
  ChainGenerator& q = out.model;
  DpoOptimizer opt(q, config.lr,
                   config.update_remaining ? SIZE_MAX : q.protected_count() + q.advantaged_count());
  const std::size_t attempts = config.pairs_per_epoch ? config.pairs_per_epoch : config.samples_per_epoch;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto te = std::chrono::steady_clock::now();
    const auto e = static_cast<std::uint64_t>(epoch);
    DpoEpochStats st;
    st.epoch = epoch;

    const GroupTables tables = q.group_tables(config.enumeration_limit);
    st.mi = generator_mi(tables);
    st.neg_reward = expected_negative_reward(tables);

    const EncodedDataset batch = q.sample(config.samples_per_epoch, derive_seed(config.seed, {kStreamSample, e}),
                                          config.exec);
    const auto rewards = score_samples(tables, batch, config.exec);
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean -= r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (-r - mean) * (-r - mean);
    st.mc_neg_reward = mean;
    st.mc_stderr = std::sqrt(var / (n - 1.0) / n);

    std::vector<double> ref_lp(batch.rows());
    for_each_index(batch.rows(), config.exec, [&](std::size_t i) { ref_lp[i] = base.log_prob(batch.row(i)); });

    auto pairs = build_pairs(rewards, attempts, config.delta, derive_seed(config.seed, {kStreamPairs, e}));
    st.pairs = pairs.size();
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (int pass = 0; pass < config.passes; ++pass) {
      Rng shuffle(derive_seed(config.seed, {kStreamShuffle, e, static_cast<std::uint64_t>(pass)}));
      shuffle.shuffle(pairs.begin(), pairs.end());
      for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
        const std::size_t len = std::min(config.batch_size, pairs.size() - start);
        loss_sum += dpo_step(q, opt, ref_lp, batch, std::span<const PreferencePair>(pairs.data() + start, len),
                             config.beta, config.exec);
        ++steps;
      }
    }
    st.loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
    st.seconds = seconds_since(te);
    out.epochs.push_back(st);
    if (on_epoch) on_epoch(st, q);
  }
  out.final_mi = generator_mi(q.group_tables(config.enumeration_limit));
  out.seconds = seconds_since(t0);
  return out;
}

}  // namespace udf
