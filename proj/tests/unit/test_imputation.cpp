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

#include <cmath>
#include <functional>

#include "doctest.h"

#include "oracles.hpp"
#include "udf/error.hpp"
#include "udf/imputation.hpp"
#include "udf/metrics.hpp"
#include "udf/recipes.hpp"

using namespace udf;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

EncodedDataset uniform_binary(std::size_t n, int k, std::uint64_t seed) {
  const auto schema = oracle::binary_schema(1, 1, k - 2);
  Rng rng(seed);
  std::vector<std::int32_t> cells(n * static_cast<std::size_t>(k));
  for (auto& c : cells) c = static_cast<std::int32_t>(rng.below(2));
  return EncodedDataset(schema, Encoding(schema.size()), cells);
}

// s -> a -> r with strong coupling.
ChainGenerator three_feature_chain() {
  return oracle::table_chain(oracle::binary_schema(1, 1, 1),
                             {{{0.35, 0.65}}, {{0.9, 0.1}, {0.2, 0.8}}, {{0.7, 0.3}, {0.4, 0.6}, {0.25, 0.75}, {0.1, 0.9}}});
}

// n copies of the record (?, ?, r) with s and a missing.
MaskedDataset two_missing(std::size_t n, std::int32_t r) {
  const auto schema = oracle::binary_schema(1, 1, 1);
  std::vector<std::int32_t> cells;
  std::vector<std::uint8_t> mask;
  for (std::size_t i = 0; i < n; ++i) {
    cells.insert(cells.end(), {0, 0, r});
    mask.insert(mask.end(), {1, 1, 0});
  }
  return apply_mask(EncodedDataset(schema, Encoding(3), cells), mask, 0.0);
}

std::vector<double> pair_frequencies(const EncodedDataset& d) {
  std::vector<double> f(4, 0.0);
  for (std::size_t i = 0; i < d.rows(); ++i) f[static_cast<std::size_t>(d.at(i, 0) * 2 + d.at(i, 1))] += 1.0;
  for (double& v : f) v /= static_cast<double>(d.rows());
  return f;
}

}  // namespace

TEST_CASE("mcar masking") {
  SUBCASE("rare masking rate") {
    const auto d = uniform_binary(100000, 10, 1);
    const auto m = mask_mcar(d, 0.001, 2);
    const double cells = 1e6;
    const double frac = static_cast<double>(m.missing_count()) / cells;
    CHECK(std::abs(frac - 0.001) <= 4.0 * std::sqrt(0.001 * 0.999 / cells));
  }
  SUBCASE("eleven features at 0.4") {
    const auto d = uniform_binary(20000, 11, 3);
    const auto m = mask_mcar(d, 0.4, 4);
    const double per_row = static_cast<double>(m.missing_count()) / 20000.0;
    CHECK(std::abs(per_row - 4.4) <= 4.0 * std::sqrt(11 * 0.4 * 0.6 / 20000.0));
    for (std::size_t i = 0; i < d.rows(); ++i) {
      bool observed = false;
      for (std::size_t k = 0; k < d.cols(); ++k) observed = observed || !m.missing(i, k);
      CHECK(observed);
    }
  }
  SUBCASE("seeded") {
    const auto d = uniform_binary(1000, 6, 5);
    CHECK(mask_mcar(d, 0.4, 9).mask == mask_mcar(d, 0.4, 9).mask);
    CHECK(mask_mcar(d, 0.4, 9).mask != mask_mcar(d, 0.4, 10).mask);
  }
  SUBCASE("bad probabilities") {
    const auto d = uniform_binary(10, 3, 5);
    CHECK(code_of([&] { mask_mcar(d, 0.0, 1); }) == ErrorCode::kBadProbability);
    CHECK(code_of([&] { mask_mcar(d, 1.0, 1); }) == ErrorCode::kBadProbability);
    CHECK(code_of([&] { mask_mcar(d, std::nan(""), 1); }) == ErrorCode::kBadProbability);
  }
  SUBCASE("mask json lists missing columns per row") {
    const auto d = uniform_binary(50, 4, 5);
    const auto m = mask_mcar(d, 0.4, 1);
    const auto j = mask_to_json(m, 1);
    CHECK(j.at("missing_prob").get<double>() == 0.4);
    REQUIRE(j.at("missing").size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
      std::size_t count = 0;
      for (std::size_t k = 0; k < 4; ++k) count += m.missing(i, k);
      CHECK(j.at("missing")[i].size() == count);
    }
  }
}

TEST_CASE("impute basics") {
  const auto gen = three_feature_chain();
  const auto data = gen.sample(500, 1);

  SUBCASE("nothing missing is the identity") {
    const auto m = apply_mask(data, std::vector<std::uint8_t>(data.cells().size(), 0), 0.0);
    CHECK(impute(gen, m).cells() == data.cells());
  }
  SUBCASE("point-mass posterior") {
    const auto schema = oracle::binary_schema(1, 1, 0);
    const auto det = oracle::table_chain(schema, {{{0.5, 0.5}}, {{0.0, 1.0}, {1.0, 0.0}}});
    std::vector<std::int32_t> cells;
    std::vector<std::uint8_t> mask;
    for (int i = 0; i < 200; ++i) {
      cells.insert(cells.end(), {i % 2, 0});
      mask.insert(mask.end(), {0, 1});
    }
    const auto out = impute(det, apply_mask(EncodedDataset(schema, Encoding(2), cells), mask, 0.5));
    for (std::size_t i = 0; i < out.rows(); ++i) CHECK(out.at(i, 1) == 1 - out.at(i, 0));
  }
  SUBCASE("schema mismatch") {
    const auto other = uniform_binary(10, 4, 1);
    CHECK(code_of([&] { impute(gen, mask_mcar(other, 0.3, 1)); }) == ErrorCode::kSchemaMismatch);
  }
  SUBCASE("shape mismatch in apply_mask") {
    CHECK(code_of([&] { apply_mask(data, std::vector<std::uint8_t>(3, 0), 0.0); }) == ErrorCode::kShapeMismatch);
  }
}

TEST_CASE("two missing binaries follow the enumerated posterior") {
  const auto gen = three_feature_chain();
  const auto fj = oracle::full_joint(gen);
  for (std::int32_t r : {0, 1}) {
    std::vector<double> post(4, 0.0);
    double z = 0;
    for (std::size_t i = 0; i < fj.records.size(); ++i) {
      if (fj.records[i][2] != r) continue;
      post[static_cast<std::size_t>(fj.records[i][0] * 2 + fj.records[i][1])] += fj.p[i];
      z += fj.p[i];
    }
    for (double& v : post) v /= z;

    std::vector<std::int32_t> probe{0, 0, r};
    const auto cp = completion_posterior(gen, probe, {true, true, false});
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(cp[k] - post[k]) < 1e-12);

    const std::size_t n = 100000;
    const auto masked = two_missing(n, r);
    ImputeConfig exact_cfg;
    exact_cfg.seed = 7;
    ImputeStats es;
    const auto f = pair_frequencies(impute(gen, masked, exact_cfg, &es));
    CHECK(es.exact_rows == n);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(f[k] - post[k]) <= 4.0 * std::sqrt(post[k] * (1 - post[k]) / n));

    ImputeConfig gibbs_cfg = exact_cfg;
    gibbs_cfg.enumeration_limit = 1;
    ImputeStats gs;
    const auto g = pair_frequencies(impute(gen, masked, gibbs_cfg, &gs));
    CHECK(gs.gibbs_rows == n);
    double tv = 0;
    for (std::size_t k = 0; k < 4; ++k) tv += 0.5 * std::abs(f[k] - g[k]);
    CHECK(tv <= 0.02);
  }
}

TEST_CASE("exact and gibbs paths agree on random small models") {
  Rng rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    const auto schema = random_schema(rng, 3);
    const auto gen = random_table_model(schema, rng, 1.0);
    // Every row hides the same two leading features given one fixed record.
    const auto rec = gen.sample(1, trial);
    const std::size_t n = 100000, k = schema.size();
    std::vector<std::int32_t> cells;
    std::vector<std::uint8_t> mask;
    for (std::size_t i = 0; i < n; ++i) {
      cells.insert(cells.end(), rec.cells().begin(), rec.cells().end());
      for (std::size_t c = 0; c < k; ++c) mask.push_back(c < 2 ? 1 : 0);
    }
    const auto masked = apply_mask(EncodedDataset(schema, Encoding(k), cells), mask, 0.0);
    ImputeConfig a;
    a.seed = 1;
    ImputeConfig b = a;
    b.enumeration_limit = 1;
    const auto ia = impute(gen, masked, a), ib = impute(gen, masked, b);
    const int c0 = schema[0].cardinality(), c1 = schema[1].cardinality();
    std::vector<double> fa(static_cast<std::size_t>(c0 * c1), 0.0), fb(fa.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      fa[static_cast<std::size_t>(ia.at(i, 0) * c1 + ia.at(i, 1))] += 1.0 / n;
      fb[static_cast<std::size_t>(ib.at(i, 0) * c1 + ib.at(i, 1))] += 1.0 / n;
    }
    double tv = 0;
    for (std::size_t j = 0; j < fa.size(); ++j) tv += 0.5 * std::abs(fa[j] - fb[j]);
    CHECK(tv <= 0.02);
  }
}

TEST_CASE("property: observed cells pass through and the untouched sub-table keeps its bias") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto schema = random_schema(rng, 3);
    const auto gen = random_table_model(schema, rng, 0.5);
    const auto truth = gen.sample(3000, trial);
    const auto masked = mask_mcar(truth, 0.4, trial);
    ImputeConfig cfg;
    cfg.seed = trial;
    const auto out = impute(gen, masked, cfg);
    for (std::size_t i = 0; i < truth.rows(); ++i)
      for (std::size_t k = 0; k < truth.cols(); ++k)
        if (!masked.missing(i, k)) CHECK(out.at(i, k) == truth.at(i, k));

    std::vector<std::size_t> untouched;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
      bool hit = false;
      for (std::size_t k = 0; k < truth.cols(); ++k)
        if (schema[k].role != Role::kRemaining && masked.missing(i, k)) hit = true;
      if (!hit) untouched.push_back(i);
    }
    CHECK(dataset_group_mi(out.subset(untouched)) == dataset_group_mi(truth.subset(untouched)));
  }
}

TEST_CASE("imputation is reproducible and policy independent") {
  const auto schema = planted_schema();
  const auto truth = encode_table(planted_table(2000, 3), schema);
  FitConfig fc;
  fc.backend = BackendChoice::kTable;
  const auto gen = ChainGenerator::fit(truth, fc);
  const auto masked = mask_mcar(truth, 0.4, 5);
  ImputeConfig a;
  a.seed = 2;
  a.exec = Exec::kSerial;
  ImputeConfig b = a;
  b.exec = Exec::kParallel;
  CHECK(impute(gen, masked, a).cells() == impute(gen, masked, b).cells());
  a.enumeration_limit = b.enumeration_limit = 4;
  CHECK(impute(gen, masked, a).cells() == impute(gen, masked, b).cells());
}

TEST_CASE("score_imputation") {
  const auto schema = planted_schema();
  const auto truth = encode_table(planted_table(4000, 8), schema);
  const auto masked = mask_mcar(truth, 0.4, 1);

  const auto perfect = score_imputation(truth, truth, masked);
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.mi == dataset_group_mi(truth));

  // Uniform guesses on the three-valued region column only.
  std::vector<std::uint8_t> mask(truth.cells().size(), 0);
  const int region = schema.index_of("region");
  for (std::size_t i = 0; i < truth.rows(); ++i) mask[i * truth.cols() + region] = 1;
  const auto only_region = apply_mask(truth, mask, 1.0);
  Rng rng(6);
  std::vector<std::int32_t> cells = truth.cells();
  for (std::size_t i = 0; i < truth.rows(); ++i) cells[i * truth.cols() + region] = static_cast<std::int32_t>(rng.below(3));
  const EncodedDataset guessed(schema, truth.encoding(), cells);
  const auto s = score_imputation(guessed, truth, only_region);
  const double n = static_cast<double>(truth.rows());
  CHECK(s.categorical_cells == truth.rows());
  CHECK(std::abs(s.accuracy - 100.0 / 3.0) <= 4.0 * 100.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n));

  const auto small = encode_table(planted_table(10, 8), schema, truth.encoding());
  CHECK(code_of([&] { score_imputation(small, truth, masked); }) == ErrorCode::kShapeMismatch);
}
