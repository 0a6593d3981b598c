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

#include "udf/mix.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "udf/error.hpp"
#include "udf/optim.hpp"

namespace udf {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t lambda_param_count(std::size_t s_states, int hidden) {
  const auto h = static_cast<std::size_t>(hidden);
  return (s_states + 1) * h + h + h + 1;
}

void check_beta(double beta, double beta_max) {
  if (!(beta >= 0.0 && beta <= beta_max)) {
    throw Error(ErrorCode::kBetaOutOfRange,
                "beta " + std::to_string(beta) + " outside [0, " + std::to_string(beta_max) + "]");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LambdaNet

LambdaNet::LambdaNet(std::size_t s_states, int hidden, double beta_max, std::uint64_t seed)
    : s_states_(s_states), hidden_(hidden), beta_max_(beta_max) {
  if (s_states == 0 || hidden < 1 || !(beta_max > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "lambda network needs s_states >= 1, hidden >= 1, beta_max > 0");
  }
  params_.assign(lambda_param_count(s_states, hidden), 0.0);
  Rng rng(derive_seed(seed, {kStreamMix, kStreamInit}));
  const auto h = static_cast<std::size_t>(hidden);
  // Two inputs are active per evaluation (the one-hot slot and beta').
  const double w1_scale = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < s_states * h; ++i) params_[i] = rng.normal(0.0, w1_scale);
  // beta' weights get log-uniform magnitudes in [1, 100] so hidden units start
  // out resolving both small and large beta.
  for (std::size_t i = s_states * h; i < (s_states + 1) * h; ++i) {
    const double mag = std::exp(rng.uniform() * std::log(100.0));
    params_[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  const double w2_scale = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = 0; i < h; ++i) params_[(s_states + 1) * h + h + i] = rng.normal(0.0, w2_scale);
}

LambdaNet LambdaNet::restore(std::size_t s_states, int hidden, double beta_max, std::vector<double> params) {
  if (s_states == 0 || hidden < 1 || !(beta_max > 0.0) || params.size() != lambda_param_count(s_states, hidden)) {
    throw Error(ErrorCode::kBadModelFile, "lambda network parameters do not match its shape");
  }
  LambdaNet net;
  net.s_states_ = s_states;
  net.hidden_ = hidden;
  net.beta_max_ = beta_max;
  net.params_ = std::move(params);
  return net;
}

double LambdaNet::forward(std::size_t s, double beta, std::span<double> z) const {
  if (s >= s_states_) throw Error(ErrorCode::kShapeMismatch, "protected state out of range");
  const auto h = static_cast<std::size_t>(hidden_);
  const double b = beta / beta_max_;
  const double* w_s = params_.data() + s * h;
  const double* w_b = params_.data() + s_states_ * h;
  const double* b1 = params_.data() + (s_states_ + 1) * h;
  const double* w2 = b1 + h;
  const double b2 = w2[h];
  double out = b2;
  for (std::size_t j = 0; j < h; ++j) {
    z[j] = std::tanh(w_s[j] + w_b[j] * b + b1[j]);
    out += w2[j] * z[j];
  }
  return sigmoid(out);
}

double LambdaNet::operator()(std::size_t s, double beta) const {
  thread_local std::vector<double> z;
  z.resize(static_cast<std::size_t>(hidden_));
  return forward(s, beta, z);
}

double LambdaNet::accumulate_grad(std::size_t s, double beta, double weight, std::span<double> grad) const {
  thread_local std::vector<double> z;
  z.resize(static_cast<std::size_t>(hidden_));
  const double lam = forward(s, beta, z);
  backward(s, beta, z, lam, weight, grad);
  return lam;
}

void LambdaNet::backward(std::size_t s, double beta, std::span<const double> z, double lam, double weight,
                         std::span<double> grad) const {
  const auto h = static_cast<std::size_t>(hidden_);
  const double b = beta / beta_max_;
  const double dout = weight * lam * (1.0 - lam);
  double* g_s = grad.data() + s * h;
  double* g_b = grad.data() + s_states_ * h;
  double* g_b1 = grad.data() + (s_states_ + 1) * h;
  double* g_w2 = g_b1 + h;
  const double* w2 = params_.data() + (s_states_ + 1) * h + h;
  for (std::size_t j = 0; j < h; ++j) {
    g_w2[j] += dout * z[j];
    const double dpre = dout * w2[j] * (1.0 - z[j] * z[j]);
    g_s[j] += dpre;
    g_b[j] += dpre * b;
    g_b1[j] += dpre;
  }
  g_w2[h] += dout;
}

// ---------------------------------------------------------------------------
// Mixture

std::vector<double> mix_row(std::span<const double> p_das, std::span<const double> row, double lam) {
  if (!(lam >= 0.0 && lam <= 1.0)) throw Error(ErrorCode::kLambdaOutOfRange, "lambda must lie in [0, 1]");
  if (p_das.size() != row.size()) throw Error(ErrorCode::kLengthMismatch, "p_das and row differ in length");
  std::vector<double> out(row.size());
  for (std::size_t a = 0; a < row.size(); ++a) out[a] = lam * p_das[a] + (1.0 - lam) * row[a];
  return out;
}

MixedGenerator::MixedGenerator(std::shared_ptr<const ChainGenerator> base, std::vector<double> lambda)
    : base_(std::move(base)), lambda_(std::move(lambda)) {
  if (!base_) throw Error(ErrorCode::kInvalidConfig, "mixture needs a base generator");
  for (double l : lambda_) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error(ErrorCode::kLambdaOutOfRange, "lambda must lie in [0, 1]");
  }
  build();
}

MixedGenerator::MixedGenerator(std::shared_ptr<const ChainGenerator> base, std::shared_ptr<const LambdaNet> net,
                               double beta)
    : base_(std::move(base)), net_(std::move(net)), beta_(beta) {
  if (!base_ || !net_) throw Error(ErrorCode::kInvalidConfig, "mixture needs a base generator and a network");
  check_beta(beta, net_->beta_max());
  build();
}

void MixedGenerator::build() {
  if (!base_tables_) base_tables_ = std::make_shared<const GroupTables>(base_->group_tables());
  const GroupTables& bt = *base_tables_;
  const std::size_t S = bt.s_states();
  const std::size_t A = bt.das_states();
  if (net_) {
    if (net_->s_states() != S) throw Error(ErrorCode::kShapeMismatch, "network protected states != base");
    lambda_.resize(S);
    for (std::size_t s = 0; s < S; ++s) lambda_[s] = (*net_)(s, beta_);
  } else if (lambda_.size() != S) {
    throw Error(ErrorCode::kLengthMismatch, "one mixing weight per protected state");
  }

  mixed_ = bt;
  for (std::size_t s = 0; s < S; ++s) {
    const auto row = mix_row(bt.p_das, bt.p_das_given_s.row(s), lambda_[s]);
    std::copy(row.begin(), row.end(), mixed_.p_das_given_s.row(s).begin());
  }
  recompute_marginal(mixed_);

  ns_ = bt.s_view.members().size();
  na_ = bt.das_view.members().size();
  const auto& cards = bt.das_view.cardinalities();
  // level_mass_[j][s * blocks_j + prefix]: q(first j d_as features = prefix | s).
  level_mass_.assign(na_ + 1, {});
  std::size_t blocks = A;
  level_mass_[na_].assign(mixed_.p_das_given_s.data().begin(), mixed_.p_das_given_s.data().end());
  for (std::size_t j = na_; j-- > 0;) {
    const auto c = static_cast<std::size_t>(cards[j]);
    const std::size_t parent_blocks = blocks / c;
    auto& up = level_mass_[j];
    const auto& down = level_mass_[j + 1];
    up.assign(S * parent_blocks, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t b = 0; b < parent_blocks; ++b) {
        double sum = 0.0;
        for (std::size_t v = 0; v < c; ++v) sum += down[s * blocks + b * c + v];
        up[s * parent_blocks + b] = sum;
      }
    }
    blocks = parent_blocks;
  }
}

void MixedGenerator::step_probs(std::size_t pos, std::span<const std::int32_t> record, std::span<double> out) const {
  if (pos < ns_ || pos >= ns_ + na_) {
    base_->step_probs(pos, record, out);
    return;
  }
  const GroupTables& bt = *base_tables_;
  const std::size_t s = bt.s_view.index(record);
  const std::size_t j = pos - ns_;
  const auto& cards = bt.das_view.cardinalities();
  const auto& members = bt.das_view.members();
  std::size_t prefix = 0;
  std::size_t blocks = 1;
  for (std::size_t k = 0; k < j; ++k) {
    prefix = prefix * static_cast<std::size_t>(cards[k]) + static_cast<std::size_t>(record[members[k]]);
    blocks *= static_cast<std::size_t>(cards[k]);
  }
  const auto c = static_cast<std::size_t>(cards[j]);
  const auto& down = level_mass_[j + 1];
  const double* child = down.data() + s * blocks * c + prefix * c;
  double total = 0.0;
  for (std::size_t v = 0; v < c; ++v) total += child[v];
  for (std::size_t v = 0; v < c; ++v) out[v] = child[v] / total;
}

GroupTables MixedGenerator::group_tables(std::uint64_t limit) const {
  if (mixed_.s_view.joint_cardinality() > limit || mixed_.das_view.joint_cardinality() > limit) {
    throw Error(ErrorCode::kGroupTooLarge, "protected or advantaged joint cardinality exceeds " + std::to_string(limit));
  }
  return mixed_;
}

EncodedDataset MixedGenerator::sample(std::size_t n, std::uint64_t seed, Exec exec) const {
  if (n == 0) throw Error(ErrorCode::kInvalidConfig, "sample size must be >= 1");
  const GroupTables& bt = *base_tables_;
  const std::size_t k = schema().size();
  const auto& ord = order();
  const auto width = static_cast<std::size_t>(max_cardinality());
  std::vector<std::int32_t> cells(n * k, 0);
  for_each_index(n, exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {kStreamSample, i}));
    std::span<std::int32_t> rec(cells.data() + i * k, k);
    thread_local std::vector<double> buf;
    buf.resize(width);
    auto draw = [&](std::size_t pos) {
      const auto card = static_cast<std::size_t>(schema()[ord[pos]].cardinality());
      base_->step_probs(pos, rec, buf);
      rec[ord[pos]] = rng.categorical(std::span<const double>(buf.data(), card));
    };
    for (std::size_t pos = 0; pos < ns_; ++pos) draw(pos);
    const std::size_t s = bt.s_view.index(rec);
    if (rng.uniform() < lambda_[s]) {
      bt.das_view.decode_into(static_cast<std::size_t>(rng.categorical(bt.p_das)), rec);
    } else {
      for (std::size_t pos = ns_; pos < ns_ + na_; ++pos) draw(pos);
    }
    for (std::size_t pos = ns_ + na_; pos < ord.size(); ++pos) draw(pos);
  });
  return EncodedDataset(schema(), encoding(), std::move(cells));
}

MixedGenerator set_beta(const MixedGenerator& mix, double beta) {
  if (!mix.net()) throw Error(ErrorCode::kBetaOutOfRange, "mixture has fixed weights and no beta input");
  check_beta(beta, mix.net()->beta_max());
  MixedGenerator out = mix;
  out.beta_ = beta;
  out.build();
  return out;
}

// ---------------------------------------------------------------------------
// Training

MixtureKernel::MixtureKernel(const GroupTables& base) : base_(&base) {
  const std::size_t S = base.s_states();
  const std::size_t A = base.das_states();
  log_c_.resize(S * A);
  log_m_.resize(A);
  for (std::size_t a = 0; a < A; ++a) log_m_[a] = std::log(std::max(base.p_das[a], kProbFloor));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) log_c_[s * A + a] = std::log(std::max(base.p_das_given_s(s, a), kProbFloor));
  }
}

double MixtureKernel::operator()(std::span<const double> lambda, double beta, std::span<double> grad_lambda) const {
  const GroupTables& b = *base_;
  const std::size_t S = b.s_states();
  const std::size_t A = b.das_states();
  const auto& m = b.p_das;
  thread_local std::vector<double> q, log_q, log_qbar;
  q.resize(S * A);
  log_q.resize(S * A);
  log_qbar.assign(A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const double l = lambda[s];
    const auto c = b.p_das_given_s.row(s);
    for (std::size_t a = 0; a < A; ++a) {
      const double v = l * m[a] + (1.0 - l) * c[a];
      q[s * A + a] = v;
      log_qbar[a] += b.p_s[s] * v;
    }
  }
  for (std::size_t a = 0; a < A; ++a) log_qbar[a] = std::log(std::max(log_qbar[a], kProbFloor));
  for (std::size_t i = 0; i < S * A; ++i) log_q[i] = std::log(std::max(q[i], kProbFloor));

  double mi = 0.0;
  double kl = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const auto c = b.p_das_given_s.row(s);
    const double* lq = log_q.data() + s * A;
    const double* qs = q.data() + s * A;
    const double* lc = log_c_.data() + s * A;
    double mi_s = 0.0, kl_s = 0.0, dmi = 0.0, dkl = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double ratio = lq[a] - log_qbar[a];
      const double dq = m[a] - c[a];
      mi_s += qs[a] * ratio;
      kl_s += c[a] * (lc[a] - lq[a]);
      dmi += dq * ratio;
      dkl -= c[a] * dq / std::max(qs[a], kProbFloor);
    }
    mi += b.p_s[s] * mi_s;
    kl += b.p_s[s] * kl_s;
    if (!grad_lambda.empty()) grad_lambda[s] = b.p_s[s] * (dmi + beta * dkl);
  }
  return std::max(mi, 0.0) + beta * std::max(kl, 0.0);
}

double averaged_lambda_objective(const MixtureKernel& kernel, const LambdaNet& net, std::span<const double> betas,
                                 std::span<double> grad, Exec exec, std::span<const double> weights) {
  if (betas.empty()) throw Error(ErrorCode::kInvalidConfig, "need at least one beta");
  if (!weights.empty() && weights.size() != betas.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one weight per beta");
  }
  const std::size_t S = kernel.tables().s_states();
  if (net.s_states() != S) throw Error(ErrorCode::kShapeMismatch, "network protected states != base");
  const std::size_t P = net.params().size();
  const bool want_grad = !grad.empty();
  const std::size_t M = betas.size();
  std::vector<double> values(M);
  std::vector<double> per_beta(want_grad ? M * P : 0, 0.0);

  for_each_index(
      M, exec,
      [&](std::size_t j) {
        thread_local std::vector<double> lam, g_lam, z;
        const auto h = static_cast<std::size_t>(net.hidden());
        lam.resize(S);
        g_lam.resize(want_grad ? S : 0);
        z.resize(S * h);
        const double w = weights.empty() ? 1.0 : weights[j];
        for (std::size_t s = 0; s < S; ++s) lam[s] = net.forward(s, betas[j], std::span<double>(z.data() + s * h, h));
        values[j] = w * kernel(lam, betas[j], g_lam);
        if (want_grad) {
          std::span<double> g(per_beta.data() + j * P, P);
          for (std::size_t s = 0; s < S; ++s) {
            net.backward(s, betas[j], std::span<const double>(z.data() + s * h, h), lam[s], w * g_lam[s], g);
          }
        }
      },
      4);

  const double inv = 1.0 / static_cast<double>(M);
  double total = 0.0;
  for (double v : values) total += v;
  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t j = 0; j < M; ++j) {
      for (std::size_t p = 0; p < P; ++p) grad[p] += per_beta[j * P + p];
    }
    for (double& g : grad) g *= inv;
  }
  return total * inv;
}

double averaged_lambda_objective(const GroupTables& base, const LambdaNet& net, std::span<const double> betas,
                                 std::span<double> grad, Exec exec) {
  return averaged_lambda_objective(MixtureKernel(base), net, betas, grad, exec);
}

LambdaTraining train_lambda(const ChainGenerator& base, const MixConfig& config) {
  if (!(config.beta_max > 0.0) || config.n_beta < 1 || config.iterations < 0 || config.hidden < 1 ||
      !(config.lr > 0.0) || config.eval_every < 1 || !(config.beta_offset > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "mix config needs beta_max > 0, n_beta >= 1, hidden >= 1, lr > 0");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const GroupTables tables = base.group_tables();
  const MixtureKernel kernel(tables);

  LambdaTraining out{LambdaNet(tables.s_states(), config.hidden, config.beta_max, config.seed), {}, 0, 0, 0, 0, {}, 0};
  Rng rng(derive_seed(config.seed, {kStreamMix, kStreamBeta}));
  out.betas.resize(config.n_beta);
  for (double& b : out.betas) b = rng.uniform() * config.beta_max;
  std::vector<double> weights;
  if (config.scale_by_beta) {
    for (double b : out.betas) weights.push_back(1.0 / (config.beta_offset + b));
  }

  LambdaNet& net = out.net;
  std::vector<double> grad(net.params().size());
  std::vector<double> best(net.params().begin(), net.params().end());
  Adam adam(grad.size(), config.lr);

  const std::size_t batch = config.batch_betas == 0 ? config.n_beta : std::min(config.batch_betas, config.n_beta);
  std::vector<std::size_t> perm(config.n_beta);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t cursor = perm.size();
  std::vector<double> mb(batch);
  std::vector<double> mb_w(config.scale_by_beta ? batch : 0);
  Rng shuffle(derive_seed(config.seed, {kStreamMix, kStreamShuffle}));

  out.initial_objective = averaged_lambda_objective(kernel, net, out.betas, {}, config.exec);
  out.initial_training_objective = averaged_lambda_objective(kernel, net, out.betas, {}, config.exec, weights);
  double best_value = out.initial_training_objective;
  out.history.push_back(best_value);
  for (int it = 1; it <= config.iterations; ++it) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == perm.size()) {
        shuffle.shuffle(perm.begin(), perm.end());
        cursor = 0;
      }
      mb[b] = out.betas[perm[cursor++]];
      if (config.scale_by_beta) mb_w[b] = 1.0 / (config.beta_offset + mb[b]);
    }
    const double v = averaged_lambda_objective(kernel, net, mb, grad, config.exec, mb_w);
    if (!std::isfinite(v)) throw Error(ErrorCode::kDivergedTraining, "lambda objective became non-finite");
    adam.step(net.params(), grad);
    if (it % config.eval_every == 0 || it == config.iterations) {
      const double value = averaged_lambda_objective(kernel, net, out.betas, {}, config.exec, weights);
      if (!std::isfinite(value)) throw Error(ErrorCode::kDivergedTraining, "lambda objective became non-finite");
      out.history.push_back(value);
      if (value < best_value) {
        best_value = value;
        std::copy(net.params().begin(), net.params().end(), best.begin());
      }
    }
  }
  std::copy(best.begin(), best.end(), net.params().begin());
  out.final_training_objective = best_value;
  out.final_objective = averaged_lambda_objective(kernel, net, out.betas, {}, config.exec);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace udf
