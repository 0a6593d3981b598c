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

#include "udf/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "udf/error.hpp"

namespace udf {

namespace {

// Per-thread scratch so probs() stays allocation-free after warm-up.
struct Scratch {
  std::vector<double> hidden;
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> dz;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

void softmax_floored(std::span<const double> logits, std::span<double> out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : logits) mx = std::max(mx, l);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::max(out[i] / sum, kProbFloor);
    total += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= total;
}

void Conditional::init_layout() {
  parent_states_ = 1;
  input_offsets_.clear();
  input_dim_ = 0;
  for (int c : parent_cards_) {
    input_offsets_.push_back(input_dim_);
    input_dim_ += c;
    if (parent_states_ > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(c)) {
      parent_states_ = std::numeric_limits<std::size_t>::max();
    } else {
      parent_states_ *= static_cast<std::size_t>(c);
    }
  }
}

Conditional Conditional::table(int cardinality, std::vector<int> parents, std::vector<int> parent_cards) {
  Conditional c;
  c.backend_ = Backend::kTable;
  c.card_ = cardinality;
  c.parents_ = std::move(parents);
  c.parent_cards_ = std::move(parent_cards);
  c.init_layout();
  c.params_.assign(c.parent_states_ * static_cast<std::size_t>(cardinality), 0.0);
  return c;
}

Conditional Conditional::mlp(int cardinality, std::vector<int> parents, std::vector<int> parent_cards, int hidden,
                             Rng& init_rng) {
  Conditional c;
  c.backend_ = Backend::kMlp;
  c.card_ = cardinality;
  c.hidden_ = hidden;
  c.parents_ = std::move(parents);
  c.parent_cards_ = std::move(parent_cards);
  c.init_layout();
  const auto h = static_cast<std::size_t>(hidden);
  const auto in = static_cast<std::size_t>(c.input_dim_);
  const auto k = static_cast<std::size_t>(cardinality);
  c.params_.assign(in * h + h + k * h + k, 0.0);
  // A one-hot input activates one column per parent.
  const double s1 = 1.0 / std::sqrt(std::max<double>(1.0, static_cast<double>(c.parents_.size())));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = 0; i < in * h; ++i) c.params_[i] = init_rng.normal(0.0, s1);
  for (std::size_t i = 0; i < k * h; ++i) c.params_[in * h + h + i] = init_rng.normal(0.0, s2);
  return c;
}

Conditional Conditional::restore(Backend backend, int cardinality, std::vector<int> parents,
                                 std::vector<int> parent_cards, int hidden, std::vector<double> params) {
  Conditional c;
  c.backend_ = backend;
  c.card_ = cardinality;
  c.hidden_ = backend == Backend::kMlp ? hidden : 0;
  c.parents_ = std::move(parents);
  c.parent_cards_ = std::move(parent_cards);
  c.init_layout();
  const auto k = static_cast<std::size_t>(cardinality);
  const auto h = static_cast<std::size_t>(c.hidden_);
  const std::size_t expected = backend == Backend::kTable
                                   ? c.parent_states_ * k
                                   : static_cast<std::size_t>(c.input_dim_) * h + h + k * h + k;
  if (params.size() != expected) throw Error(ErrorCode::kBadModelFile, "parameter count mismatch");
  c.params_ = std::move(params);
  return c;
}

std::size_t Conditional::parent_state(std::span<const std::int32_t> record) const {
  std::size_t state = 0;
  for (std::size_t j = 0; j < parents_.size(); ++j) {
    state = state * static_cast<std::size_t>(parent_cards_[j]) + static_cast<std::size_t>(record[parents_[j]]);
  }
  return state;
}

void Conditional::set_table_row(std::size_t state, std::span<const double> probabilities) {
  const auto k = static_cast<std::size_t>(card_);
  for (std::size_t c = 0; c < k; ++c) {
    params_[state * k + c] = std::log(std::max(probabilities[c], kProbFloor));
  }
}

void Conditional::logits(std::span<const std::int32_t> record, std::span<double> out,
                         std::span<double> hidden) const {
  const auto k = static_cast<std::size_t>(card_);
  if (backend_ == Backend::kTable) {
    const double* row = params_.data() + parent_state(record) * k;
    std::copy(row, row + k, out.begin());
    return;
  }
  const auto h = static_cast<std::size_t>(hidden_);
  const auto in = static_cast<std::size_t>(input_dim_);
  const double* w1 = params_.data();
  const double* b1 = w1 + in * h;
  const double* w2 = b1 + h;
  const double* b2 = w2 + k * h;
  std::copy(b1, b1 + h, hidden.begin());
  for (std::size_t j = 0; j < parents_.size(); ++j) {
    const double* col = w1 + (static_cast<std::size_t>(input_offsets_[j] + record[parents_[j]])) * h;
    for (std::size_t u = 0; u < h; ++u) hidden[u] += col[u];
  }
  for (std::size_t u = 0; u < h; ++u) hidden[u] = std::tanh(hidden[u]);
  for (std::size_t c = 0; c < k; ++c) {
    const double* w = w2 + c * h;
    double acc = b2[c];
    for (std::size_t u = 0; u < h; ++u) acc += w[u] * hidden[u];
    out[c] = acc;
  }
}

void Conditional::probs(std::span<const std::int32_t> record, std::span<double> out) const {
  Scratch& s = scratch();
  s.logits.resize(static_cast<std::size_t>(card_));
  s.hidden.resize(static_cast<std::size_t>(hidden_));
  logits(record, s.logits, s.hidden);
  softmax_floored(s.logits, out.first(static_cast<std::size_t>(card_)));
}

double Conditional::accumulate_log_prob_grad(std::span<const std::int32_t> record, int value, double weight,
                                             std::span<double> grad) const {
  Scratch& s = scratch();
  const auto k = static_cast<std::size_t>(card_);
  const auto h = static_cast<std::size_t>(hidden_);
  s.logits.resize(k);
  s.probs.resize(k);
  s.hidden.resize(h);
  logits(record, s.logits, s.hidden);
  softmax_floored(s.logits, s.probs);
  const double lp = std::log(s.probs[static_cast<std::size_t>(value)]);
  if (weight == 0.0) return lp;

  // d log p_v / d logit_c = [c == v] - p_c
  auto dlogit = [&](std::size_t c) {
    return weight * ((c == static_cast<std::size_t>(value) ? 1.0 : 0.0) - s.probs[c]);
  };

  if (backend_ == Backend::kTable) {
    double* g = grad.data() + parent_state(record) * k;
    for (std::size_t c = 0; c < k; ++c) g[c] += dlogit(c);
    return lp;
  }

  const auto in = static_cast<std::size_t>(input_dim_);
  const double* w2 = params_.data() + in * h + h;
  double* gw1 = grad.data();
  double* gb1 = gw1 + in * h;
  double* gw2 = gb1 + h;
  double* gb2 = gw2 + k * h;
  s.dz.assign(h, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const double d = dlogit(c);
    gb2[c] += d;
    double* gw = gw2 + c * h;
    const double* w = w2 + c * h;
    for (std::size_t u = 0; u < h; ++u) {
      gw[u] += d * s.hidden[u];
      s.dz[u] += d * w[u];
    }
  }
  for (std::size_t u = 0; u < h; ++u) s.dz[u] *= 1.0 - s.hidden[u] * s.hidden[u];
  for (std::size_t u = 0; u < h; ++u) gb1[u] += s.dz[u];
  for (std::size_t j = 0; j < parents_.size(); ++j) {
    double* col = gw1 + (static_cast<std::size_t>(input_offsets_[j] + record[parents_[j]])) * h;
    for (std::size_t u = 0; u < h; ++u) col[u] += s.dz[u];
  }
  return lp;
}

}  // namespace udf
