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

#include "udf/imputation.hpp"

#include <algorithm>
#include <cmath>

#include "udf/error.hpp"
#include "udf/metrics.hpp"

namespace udf {

std::size_t MaskedDataset::missing_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

MaskedDataset apply_mask(const EncodedDataset& data, std::vector<std::uint8_t> mask, double missing_prob) {
  const std::size_t k = data.cols();
  if (mask.size() != data.rows() * k) throw Error(ErrorCode::kShapeMismatch, "mask shape != data shape");
  std::vector<std::int32_t> cells = data.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (mask[c]) cells[c] = 0;
  }
  return {EncodedDataset(data.schema(), data.encoding(), std::move(cells)), std::move(mask), missing_prob};
}

MaskedDataset mask_mcar(const EncodedDataset& data, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kBadProbability, "missing probability must lie in (0, 1)");
  const std::size_t k = data.cols();
  std::vector<std::uint8_t> mask(data.rows() * k, 0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    Rng rng(derive_seed(seed, {kStreamMask, i}));
    std::uint8_t* m = mask.data() + i * k;
    for (;;) {
      std::size_t count = 0;
      for (std::size_t c = 0; c < k; ++c) {
        m[c] = rng.uniform() < p ? 1 : 0;
        count += m[c];
      }
      if (count < k) break;
    }
  }
  return apply_mask(data, std::move(mask), p);
}

nlohmann::json mask_to_json(const MaskedDataset& masked, std::uint64_t seed) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& f : masked.data.schema().features()) cols.push_back(f.name);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < masked.data.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t c = 0; c < masked.data.cols(); ++c) {
      if (masked.missing(i, c)) r.push_back(c);
    }
    rows.push_back(std::move(r));
  }
  return {{"missing_prob", masked.missing_prob}, {"seed", seed}, {"columns", cols}, {"missing", rows}};
}

namespace {

std::uint64_t completion_count(const Generator& gen, const std::vector<bool>& missing) {
  std::uint64_t n = 1;
  for (std::size_t k = 0; k < missing.size(); ++k) {
    if (!missing[k]) continue;
    const auto c = static_cast<std::uint64_t>(gen.schema()[k].cardinality());
    n = n > (UINT64_MAX / c) ? UINT64_MAX : n * c;
  }
  return n;
}

// Depth-first over the generation order: observed features multiply in
// their probability, missing ones branch. Leaves land in mixed-radix order.
void enumerate(const Generator& gen, std::vector<std::int32_t>& record, const std::vector<bool>& missing,
               std::vector<std::vector<double>>& level, std::size_t pos, double w, std::size_t leaf,
               std::vector<double>& out) {
  const auto& ord = gen.order();
  if (pos == ord.size()) {
    out[leaf] = w;
    return;
  }
  const int f = ord[pos];
  auto& probs = level[pos];
  gen.step_probs(pos, record, probs);
  if (!missing[static_cast<std::size_t>(f)]) {
    enumerate(gen, record, missing, level, pos + 1, w * probs[static_cast<std::size_t>(record[f])], leaf, out);
    return;
  }
  const int card = gen.schema()[f].cardinality();
  for (int v = 0; v < card; ++v) {
    record[f] = v;
    enumerate(gen, record, missing, level, pos + 1, w * probs[static_cast<std::size_t>(v)],
              leaf * static_cast<std::size_t>(card) + static_cast<std::size_t>(v), out);
  }
}

std::vector<double> unnormalized_posterior(const Generator& gen, std::vector<std::int32_t>& record,
                                           const std::vector<bool>& missing, std::size_t count) {
  std::vector<std::vector<double>> level(gen.order().size(),
                                         std::vector<double>(static_cast<std::size_t>(gen.max_cardinality())));
  std::vector<double> w(count, 0.0);
  enumerate(gen, record, missing, level, 0, 1.0, 0, w);
  return w;
}

// Missing features in generation order.
std::vector<int> missing_in_order(const Generator& gen, const std::vector<bool>& missing) {
  std::vector<int> out;
  for (int f : gen.order()) {
    if (missing[static_cast<std::size_t>(f)]) out.push_back(f);
  }
  return out;
}

void impute_exact(const Generator& gen, std::vector<std::int32_t>& record, const std::vector<bool>& missing,
                  std::size_t count, Rng& rng) {
  const auto w = unnormalized_posterior(gen, record, missing, count);
  double total = 0.0;
  for (double v : w) total += v;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t pick = w.size() - 1;
  for (std::size_t c = 0; c < w.size(); ++c) {
    acc += w[c];
    if (u < acc) {
      pick = c;
      break;
    }
  }
  const auto feats = missing_in_order(gen, missing);
  for (std::size_t j = feats.size(); j-- > 0;) {
    const auto card = static_cast<std::size_t>(gen.schema()[feats[j]].cardinality());
    record[feats[j]] = static_cast<std::int32_t>(pick % card);
    pick /= card;
  }
}

void impute_gibbs(const Generator& gen, std::vector<std::int32_t>& record, const std::vector<bool>& missing,
                  int sweeps, Rng& rng) {
  const auto& ord = gen.order();
  const auto& schema = gen.schema();
  std::vector<double> probs(static_cast<std::size_t>(gen.max_cardinality()));
  std::vector<std::size_t> pos_of(schema.size());
  for (std::size_t p = 0; p < ord.size(); ++p) pos_of[static_cast<std::size_t>(ord[p])] = p;

  // Start from forward draws that see the observed earlier features.
  for (std::size_t p = 0; p < ord.size(); ++p) {
    const int f = ord[p];
    if (!missing[static_cast<std::size_t>(f)]) continue;
    gen.step_probs(p, record, probs);
    record[f] = rng.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(schema[f].cardinality())));
  }

  const auto feats = missing_in_order(gen, missing);
  std::vector<double> logw(static_cast<std::size_t>(gen.max_cardinality()));
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int f : feats) {
      const std::size_t p0 = pos_of[static_cast<std::size_t>(f)];
      const auto card = static_cast<std::size_t>(schema[f].cardinality());
      // Only factors at or after f's position depend on its value.
      gen.step_probs(p0, record, probs);
      for (std::size_t v = 0; v < card; ++v) logw[v] = std::log(probs[v]);
      for (std::size_t v = 0; v < card; ++v) {
        record[f] = static_cast<std::int32_t>(v);
        for (std::size_t p = p0 + 1; p < ord.size(); ++p) {
          gen.step_probs(p, record, probs);
          logw[v] += std::log(probs[static_cast<std::size_t>(record[ord[p]])]);
        }
      }
      const double mx = *std::max_element(logw.begin(), logw.begin() + static_cast<long>(card));
      double total = 0.0;
      for (std::size_t v = 0; v < card; ++v) {
        logw[v] = std::exp(logw[v] - mx);
        total += logw[v];
      }
      for (std::size_t v = 0; v < card; ++v) logw[v] /= total;
      record[f] = rng.categorical(std::span<const double>(logw.data(), card));
    }
  }
}

}  // namespace

std::vector<double> completion_posterior(const Generator& gen, std::span<const std::int32_t> record,
                                         const std::vector<bool>& missing) {
  if (missing.size() != gen.schema().size() || record.size() != gen.schema().size()) {
    throw Error(ErrorCode::kShapeMismatch, "record and mask must have one entry per feature");
  }
  const std::uint64_t count = completion_count(gen, missing);
  if (count > (std::uint64_t{1} << 26)) throw Error(ErrorCode::kGroupTooLarge, "too many completions to enumerate");
  std::vector<std::int32_t> rec(record.begin(), record.end());
  auto w = unnormalized_posterior(gen, rec, missing, static_cast<std::size_t>(count));
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

EncodedDataset impute(const Generator& gen, const MaskedDataset& masked, const ImputeConfig& config,
                      ImputeStats* stats) {
  if (!(gen.schema() == masked.data.schema())) throw Error(ErrorCode::kSchemaMismatch, "generator and data schemas differ");
  if (config.gibbs_sweeps < 1) throw Error(ErrorCode::kInvalidConfig, "gibbs_sweeps must be >= 1");
  const std::size_t n = masked.data.rows();
  const std::size_t k = masked.data.cols();
  std::vector<std::int32_t> cells = masked.data.cells();
  std::vector<std::uint8_t> used_gibbs(n, 0);

  for_each_index(
      n, config.exec,
      [&](std::size_t i) {
        std::vector<bool> missing(k);
        bool any = false;
        for (std::size_t c = 0; c < k; ++c) {
          missing[c] = masked.missing(i, c);
          any = any || missing[c];
        }
        if (!any) return;
        Rng rng(derive_seed(config.seed, {kStreamImpute, i}));
        std::vector<std::int32_t> record(cells.begin() + static_cast<long>(i * k),
                                         cells.begin() + static_cast<long>((i + 1) * k));
        const std::uint64_t count = completion_count(gen, missing);
        if (count <= config.enumeration_limit) {
          impute_exact(gen, record, missing, static_cast<std::size_t>(count), rng);
        } else {
          impute_gibbs(gen, record, missing, config.gibbs_sweeps, rng);
          used_gibbs[i] = 1;
        }
        for (std::size_t c = 0; c < k; ++c) {
          if (missing[c]) cells[i * k + c] = record[c];
        }
      },
      4);

  if (stats) {
    stats->gibbs_rows = static_cast<std::size_t>(std::count(used_gibbs.begin(), used_gibbs.end(), std::uint8_t{1}));
    std::size_t touched = 0;
    for (std::size_t i = 0; i < n; ++i) {
      touched += std::any_of(masked.mask.begin() + static_cast<long>(i * k),
                             masked.mask.begin() + static_cast<long>((i + 1) * k), [](std::uint8_t m) { return m; })
                     ? 1
                     : 0;
    }
    stats->exact_rows = touched - stats->gibbs_rows;
  }
  return EncodedDataset(masked.data.schema(), masked.data.encoding(), std::move(cells));
}

ImputationScore score_imputation(const EncodedDataset& imputed, const EncodedDataset& truth,
                                 const MaskedDataset& masked) {
  if (imputed.rows() != truth.rows() || imputed.cols() != truth.cols() || masked.data.rows() != truth.rows() ||
      masked.data.cols() != truth.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "imputed, truth and mask differ in shape");
  }
  ImputationScore s;
  std::size_t hits = 0;
  double sq = 0.0;
  const auto& schema = truth.schema();
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      if (!masked.missing(i, c)) continue;
      if (schema[c].kind == Kind::kCategorical) {
        ++s.categorical_cells;
        hits += imputed.at(i, c) == truth.at(i, c) ? 1 : 0;
      } else {
        ++s.continuous_cells;
        const double d = imputed.numeric_value(i, c) - truth.numeric_value(i, c);
        sq += d * d;
      }
    }
  }
  s.accuracy = s.categorical_cells ? 100.0 * static_cast<double>(hits) / static_cast<double>(s.categorical_cells) : 0.0;
  s.rmse = s.continuous_cells ? std::sqrt(sq / static_cast<double>(s.continuous_cells)) : 0.0;
  s.mi = dataset_group_mi(imputed);
  return s;
}

}  // namespace udf
