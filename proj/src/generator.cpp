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

#include "udf/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "udf/error.hpp"
#include "udf/optim.hpp"

namespace udf {

namespace {

std::vector<double>& prob_buffer(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace

Matrix GroupTables::joint() const {
  Matrix j(s_states(), das_states());
  for (std::size_t s = 0; s < s_states(); ++s)
    for (std::size_t a = 0; a < das_states(); ++a) j(s, a) = p_s[s] * p_das_given_s(s, a);
  return j;
}

void recompute_marginal(GroupTables& tables) {
  tables.p_das.assign(tables.p_das_given_s.cols(), 0.0);
  for (std::size_t s = 0; s < tables.p_s.size(); ++s) {
    for (std::size_t a = 0; a < tables.p_das.size(); ++a) {
      tables.p_das[a] += tables.p_s[s] * tables.p_das_given_s(s, a);
    }
  }
}

// ---------------------------------------------------------------------------
// Generator

GroupTables Generator::group_tables(std::uint64_t limit) const { return extract_group_tables(*this, limit); }

std::size_t Generator::protected_count() const { return schema().members(Role::kProtected).size(); }
std::size_t Generator::advantaged_count() const { return schema().members(Role::kAdvantaged).size(); }

int Generator::max_cardinality() const {
  const auto cards = schema().cardinalities();
  return *std::max_element(cards.begin(), cards.end());
}

double Generator::log_prob(std::span<const std::int32_t> record) const {
  const auto& ord = order();
  auto& buf = prob_buffer(static_cast<std::size_t>(max_cardinality()));
  double lp = 0.0;
  for (std::size_t pos = 0; pos < ord.size(); ++pos) {
    step_probs(pos, record, buf);
    lp += std::log(buf[static_cast<std::size_t>(record[ord[pos]])]);
  }
  return lp;
}

void Generator::sample_from(std::size_t from, std::span<std::int32_t> record, Rng& rng) const {
  const auto& ord = order();
  auto& buf = prob_buffer(static_cast<std::size_t>(max_cardinality()));
  for (std::size_t pos = from; pos < ord.size(); ++pos) {
    const auto card = static_cast<std::size_t>(schema()[ord[pos]].cardinality());
    step_probs(pos, record, buf);
    record[ord[pos]] = rng.categorical(std::span<const double>(buf.data(), card));
  }
}

EncodedDataset Generator::sample(std::size_t n, std::uint64_t seed, Exec exec) const {
  if (n == 0) throw Error(ErrorCode::kInvalidConfig, "sample size must be >= 1");
  const std::size_t k = schema().size();
  std::vector<std::int32_t> cells(n * k, 0);
  for_each_index(n, exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {kStreamSample, i}));
    sample_from(0, std::span<std::int32_t>(cells.data() + i * k, k), rng);
  });
  return EncodedDataset(schema(), encoding(), std::move(cells));
}

GroupTables extract_group_tables(const Generator& gen, std::uint64_t limit) {
  const FeatureSchema& schema = gen.schema();
  GroupTables t;
  t.s_view = GroupView::of_role(schema, Role::kProtected);
  t.das_view = GroupView::of_role(schema, Role::kAdvantaged);
  if (t.s_view.joint_cardinality() > limit || t.das_view.joint_cardinality() > limit) {
    throw Error(ErrorCode::kGroupTooLarge, "protected or advantaged joint cardinality exceeds " +
                                               std::to_string(limit));
  }
  const auto& ord = gen.order();
  const std::size_t ns = t.s_view.members().size();
  const std::size_t na = t.das_view.members().size();
  if (!std::equal(t.s_view.members().begin(), t.s_view.members().end(), ord.begin()) ||
      !std::equal(t.das_view.members().begin(), t.das_view.members().end(), ord.begin() + static_cast<long>(ns))) {
    throw Error(ErrorCode::kSchemaMismatch, "generator order is not protected-then-advantaged");
  }
  const auto S = static_cast<std::size_t>(t.s_view.joint_cardinality());
  const auto A = static_cast<std::size_t>(t.das_view.joint_cardinality());
  t.p_s.assign(S, 0.0);
  t.p_das_given_s = Matrix(S, A);

  std::vector<std::int32_t> record(schema.size(), 0);
  std::vector<std::vector<double>> level(na, std::vector<double>(static_cast<std::size_t>(gen.max_cardinality())));
  std::vector<double> buf(static_cast<std::size_t>(gen.max_cardinality()));

  for (std::size_t s = 0; s < S; ++s) {
    t.s_view.decode_into(s, record);
    double ps = 1.0;
    for (std::size_t pos = 0; pos < ns; ++pos) {
      gen.step_probs(pos, record, buf);
      ps *= buf[static_cast<std::size_t>(record[ord[pos]])];
    }
    t.p_s[s] = ps;

    // Depth-first over d_as in mixed-radix order; each prefix is evaluated once.
    auto row = t.p_das_given_s.row(s);
    auto visit = [&](auto&& self, std::size_t j, double prob, std::size_t index) -> void {
      if (j == na) {
        row[index] = prob;
        return;
      }
      const int feature = ord[ns + j];
      const int card = schema[feature].cardinality();
      gen.step_probs(ns + j, record, level[j]);
      for (int v = 0; v < card; ++v) {
        record[feature] = v;
        self(self, j + 1, prob * level[j][static_cast<std::size_t>(v)],
             index * static_cast<std::size_t>(card) + static_cast<std::size_t>(v));
      }
    };
    visit(visit, 0, 1.0, 0);
  }
  recompute_marginal(t);
  return t;
}

// ---------------------------------------------------------------------------
// ChainGenerator

std::vector<int> ChainGenerator::decomposed_order(const FeatureSchema& schema) {
  std::vector<int> order = schema.members(Role::kProtected);
  for (Role r : {Role::kAdvantaged, Role::kRemaining}) {
    const auto m = schema.members(r);
    order.insert(order.end(), m.begin(), m.end());
  }
  return order;
}

ChainGenerator::ChainGenerator(FeatureSchema schema, Encoding encoding, std::vector<Conditional> conditionals)
    : schema_(std::move(schema)),
      encoding_(std::move(encoding)),
      order_(decomposed_order(schema_)),
      conditionals_(std::move(conditionals)) {
  if (encoding_.size() != schema_.size()) encoding_.resize(schema_.size());
  if (conditionals_.size() != schema_.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "one conditional per feature required");
  }
  for (std::size_t pos = 0; pos < order_.size(); ++pos) {
    const auto& c = conditionals_[pos];
    if (c.cardinality() != schema_[order_[pos]].cardinality() ||
        !std::equal(c.parents().begin(), c.parents().end(), order_.begin(), order_.begin() + static_cast<long>(pos)) ||
        c.parents().size() != pos) {
      throw Error(ErrorCode::kSchemaMismatch, "conditional " + std::to_string(pos) + " does not match the order");
    }
  }
}

void ChainGenerator::step_probs(std::size_t pos, std::span<const std::int32_t> record, std::span<double> out) const {
  conditionals_[pos].probs(record, out);
}

namespace {

void fit_table(Conditional& cond, const EncodedDataset& data, int feature, double alpha) {
  const auto k = static_cast<std::size_t>(cond.cardinality());
  std::vector<double> counts(cond.parent_states() * k, 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto r = data.row(i);
    counts[cond.parent_state(r) * k + static_cast<std::size_t>(r[feature])] += 1.0;
  }
  std::vector<double> probs(k);
  for (std::size_t state = 0; state < cond.parent_states(); ++state) {
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += counts[state * k + c];
    for (std::size_t c = 0; c < k; ++c) {
      probs[c] = (counts[state * k + c] + alpha) / (total + alpha * static_cast<double>(k));
    }
    cond.set_table_row(state, probs);
  }
}

void fit_mlp(Conditional& cond, const EncodedDataset& data, int feature, const FitConfig& config, std::size_t pos) {
  const auto k = static_cast<std::size_t>(cond.cardinality());
  const std::size_t n = data.rows();
  auto params = cond.params();

  // Output bias starts at the smoothed marginal log-frequencies.
  std::vector<double> marginal(k, config.alpha > 0 ? config.alpha : 1.0);
  for (std::size_t i = 0; i < n; ++i) marginal[static_cast<std::size_t>(data.at(i, feature))] += 1.0;
  const double total = std::accumulate(marginal.begin(), marginal.end(), 0.0);
  for (std::size_t c = 0; c < k; ++c) params[params.size() - k + c] = std::log(marginal[c] / total);

  Adam adam(params.size(), config.lr);
  std::vector<double> grad(params.size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, {kStreamFit, pos}));
  const auto batch = static_cast<std::size_t>(std::max(1, config.batch_size));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(idx.begin(), idx.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const double w = -1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto r = data.row(idx[b]);
        epoch_loss -= cond.accumulate_log_prob_grad(r, r[feature], w, grad);
      }
      adam.step(params, grad);
    }
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::kDivergedTraining, "non-finite loss fitting feature " + std::to_string(feature));
    }
  }
}

}  // namespace

ChainGenerator ChainGenerator::fit(const EncodedDataset& data, const FitConfig& config) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot fit a generator on zero rows");
  const FeatureSchema& schema = data.schema();
  const auto order = decomposed_order(schema);
  const auto cards = schema.cardinalities();

  std::vector<Conditional> conds;
  conds.reserve(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    std::vector<int> parents(order.begin(), order.begin() + static_cast<long>(pos));
    std::vector<int> parent_cards;
    std::uint64_t states = 1;
    for (int p : parents) {
      parent_cards.push_back(cards[p]);
      states = states > config.table_limit ? states : states * static_cast<std::uint64_t>(cards[p]);
    }
    bool use_table = config.backend == BackendChoice::kTable ||
                     (config.backend == BackendChoice::kAuto && states <= config.table_limit);
    if (config.backend == BackendChoice::kTable && states > (std::uint64_t{1} << 22)) {
      throw Error(ErrorCode::kInvalidConfig, "table backend too large for feature '" + schema[order[pos]].name + "'");
    }
    const int card = cards[order[pos]];
    if (use_table) {
      conds.push_back(Conditional::table(card, std::move(parents), std::move(parent_cards)));
    } else {
      Rng init(derive_seed(config.seed, {kStreamInit, pos}));
      conds.push_back(Conditional::mlp(card, std::move(parents), std::move(parent_cards), config.hidden, init));
    }
  }

  for_each_index(
      conds.size(), Exec::kParallel,
      [&](std::size_t pos) {
        if (conds[pos].backend() == Backend::kTable) {
          fit_table(conds[pos], data, order[pos], config.alpha);
        } else {
          fit_mlp(conds[pos], data, order[pos], config, pos);
        }
      },
      1);
  return ChainGenerator(schema, data.encoding(), std::move(conds));
}

GeneratorGrad ChainGenerator::zero_grad() const {
  GeneratorGrad g;
  g.reserve(conditionals_.size());
  for (const auto& c : conditionals_) g.emplace_back(c.params().size(), 0.0);
  return g;
}

std::size_t ChainGenerator::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : conditionals_) n += c.params().size();
  return n;
}

double ChainGenerator::accumulate_log_prob_grad(std::span<const std::int32_t> record, double weight,
                                                GeneratorGrad& grad) const {
  double lp = 0.0;
  for (std::size_t pos = 0; pos < conditionals_.size(); ++pos) {
    lp += conditionals_[pos].accumulate_log_prob_grad(record, record[order_[pos]], weight, grad[pos]);
  }
  return lp;
}

double ChainGenerator::mean_nll(const EncodedDataset& data, Exec exec) const {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "mean_nll on zero rows");
  std::vector<double> lp(data.rows());
  for_each_index(data.rows(), exec, [&](std::size_t i) { lp[i] = log_prob(data.row(i)); });
  double total = 0.0;
  for (double v : lp) total -= v;
  return total / static_cast<double>(data.rows());
}

std::string ChainGenerator::backend_summary() const {
  bool table = false;
  bool mlp = false;
  for (const auto& c : conditionals_) (c.backend() == Backend::kTable ? table : mlp) = true;
  if (table && mlp) return "mixed";
  return mlp ? "mlp" : "table";
}

// ---------------------------------------------------------------------------
// PrefixCompletion

PrefixCompletion::PrefixCompletion(const Generator& gen, std::vector<std::int32_t> partial)
    : gen_(&gen), partial_(std::move(partial)) {
  const auto& schema = gen.schema();
  if (partial_.size() != schema.size()) throw Error(ErrorCode::kShapeMismatch, "partial record length != K");
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < partial_.size(); ++k) {
    if (partial_[k] < 0) continue;
    if (partial_[k] >= schema[k].cardinality()) {
      throw Error(ErrorCode::kShapeMismatch, "fixed value out of range for '" + schema[k].name + "'");
    }
    ++assigned;
  }
  const auto& ord = gen.order();
  for (std::size_t pos = 0; pos < assigned; ++pos) {
    if (partial_[ord[pos]] < 0) {
      throw Error(ErrorCode::kNotPrefix, "fixed features do not form a prefix of the generation order");
    }
  }
  first_free_ = assigned;
}

void PrefixCompletion::step_probs(std::size_t j, std::span<const std::int32_t> record, std::span<double> out) const {
  gen_->step_probs(first_free_ + j, record, out);
}

std::vector<std::int32_t> PrefixCompletion::sample(Rng& rng) const {
  std::vector<std::int32_t> record = partial_;
  gen_->sample_from(first_free_, record, rng);
  return record;
}

PrefixCompletion conditional_group_sampler(const Generator& gen, std::vector<std::int32_t> partial) {
  return PrefixCompletion(gen, std::move(partial));
}

}  // namespace udf
