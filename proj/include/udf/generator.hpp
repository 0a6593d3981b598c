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

#include "udf/conditional.hpp"
#include "udf/dataset.hpp"
#include "udf/matrix.hpp"
#include "udf/parallel.hpp"

namespace udf {

inline constexpr std::uint64_t kDefaultEnumerationLimit = 4096;

// Exact group-level distributions of a generator: p(s), p(d_as | s) and the
// mixture p(d_as) = p(s)^T p(d_as | s). Joint indices follow GroupView.
struct GroupTables {
  GroupView s_view;
  GroupView das_view;
  std::vector<double> p_s;
  Matrix p_das_given_s;  // [s states x d_as states]
  std::vector<double> p_das;

  std::size_t s_states() const { return p_s.size(); }
  std::size_t das_states() const { return p_das.size(); }

  // p(s, d_as) as an [s states x d_as states] matrix.
  Matrix joint() const;
};

// Recomputes p_das from p_s and p_das_given_s.
void recompute_marginal(GroupTables& tables);

// Anything that generates records feature by feature in a fixed order with
// exact per-step distributions. Records are always in schema layout.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual const FeatureSchema& schema() const = 0;
  virtual const Encoding& encoding() const = 0;
  // Feature indices in generation order: protected, advantaged, remaining.
  virtual const std::vector<int>& order() const = 0;

  // Distribution of feature order()[pos] given the record's values at
  // order()[0..pos). Other slots of `record` are ignored.
  virtual void step_probs(std::size_t pos, std::span<const std::int32_t> record, std::span<double> out) const = 0;

  // Exact group tables; throws kGroupTooLarge past `limit` joint states.
  virtual GroupTables group_tables(std::uint64_t limit = kDefaultEnumerationLimit) const;

  // n i.i.d. ancestral samples. Row i draws from the stream
  // derive_seed(seed, {kStreamSample, i}) so the result does not depend on
  // the execution policy or thread count.
  virtual EncodedDataset sample(std::size_t n, std::uint64_t seed, Exec exec = Exec::kParallel) const;

  // Exact log-probability (nats) of a full record.
  double log_prob(std::span<const std::int32_t> record) const;

  std::size_t protected_count() const;
  std::size_t advantaged_count() const;
  int max_cardinality() const;

  // Completes one record in place from position `from` onward.
  void sample_from(std::size_t from, std::span<std::int32_t> record, Rng& rng) const;
};

// Generic exact enumeration of p(s) and p(d_as | s) through step_probs.
GroupTables extract_group_tables(const Generator& gen, std::uint64_t limit = kDefaultEnumerationLimit);

enum class BackendChoice { kAuto, kTable, kMlp };

struct FitConfig {
  BackendChoice backend = BackendChoice::kAuto;
  double alpha = 1.0;  // add-alpha smoothing for tables
  int hidden = 64;
  double lr = 1e-2;
  int epochs = 200;
  int batch_size = 256;
  std::uint64_t seed = 0;
  std::uint64_t table_limit = 4096;  // max parent joint states for a table
};

// Per-conditional parameter gradients, shaped like the generator's params.
using GeneratorGrad = std::vector<std::vector<double>>;

// The autoregressive chain p_theta: one conditional per feature, generated in
// the decomposed order s -> d_as -> d_s. Copyable; a copy is an independent
// set of parameters (used for the fine-tuned q_phi).
class ChainGenerator final : public Generator {
 public:
  ChainGenerator(FeatureSchema schema, Encoding encoding, std::vector<Conditional> conditionals);

  // Fits every conditional by maximum likelihood (smoothed counts for the
  // table backend, minibatch Adam for the mlp backend). Conditionals are
  // independent and are fitted in parallel.
  static ChainGenerator fit(const EncodedDataset& data, const FitConfig& config);

  // Protected, advantaged, remaining; schema order within each block.
  static std::vector<int> decomposed_order(const FeatureSchema& schema);

  const FeatureSchema& schema() const override { return schema_; }
  const Encoding& encoding() const override { return encoding_; }
  const std::vector<int>& order() const override { return order_; }
  void step_probs(std::size_t pos, std::span<const std::int32_t> record, std::span<double> out) const override;

  const std::vector<Conditional>& conditionals() const { return conditionals_; }
  // Conditional for generation position pos.
  Conditional& conditional(std::size_t pos) { return conditionals_[pos]; }
  const Conditional& conditional(std::size_t pos) const { return conditionals_[pos]; }

  GeneratorGrad zero_grad() const;
  std::size_t parameter_count() const;
  // grad += weight * d log p(record) / d params; returns log p(record).
  double accumulate_log_prob_grad(std::span<const std::int32_t> record, double weight, GeneratorGrad& grad) const;

  // Mean negative log-likelihood (nats per record).
  double mean_nll(const EncodedDataset& data, Exec exec = Exec::kParallel) const;

  // "table", "mlp" or "mixed" depending on the conditionals' backends.
  std::string backend_summary() const;

 private:
  FeatureSchema schema_;
  Encoding encoding_;
  std::vector<int> order_;
  std::vector<Conditional> conditionals_;  // indexed by generation position
};

// Exact per-step distributions of the features that follow a fixed prefix of
// the generation order. `partial` is a schema-layout record with -1 marking
// free features; the assigned features must be exactly order()[0..m).
class PrefixCompletion {
 public:
  PrefixCompletion(const Generator& gen, std::vector<std::int32_t> partial);

  std::size_t first_free() const { return first_free_; }
  std::size_t steps() const { return gen_->order().size() - first_free_; }
  const std::vector<std::int32_t>& prefix() const { return partial_; }

  // Distribution of the feature at step j (position first_free() + j) given a
  // record whose earlier positions are filled.
  void step_probs(std::size_t j, std::span<const std::int32_t> record, std::span<double> out) const;

  std::vector<std::int32_t> sample(Rng& rng) const;

 private:
  const Generator* gen_;
  std::vector<std::int32_t> partial_;
  std::size_t first_free_ = 0;
};

PrefixCompletion conditional_group_sampler(const Generator& gen, std::vector<std::int32_t> partial);

}  // namespace udf
