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

#include "udf/recipes.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

#include "udf/error.hpp"

#ifndef UDF_DATA_DIR
#define UDF_DATA_DIR "data"
#endif

namespace udf {

std::string data_dir() {
  if (const char* env = std::getenv("UDF_DATA_DIR"); env && *env) return env;
  return UDF_DATA_DIR;
}

AdultPaths adult_paths() {
  const std::string dir = data_dir() + "/adult/";
  return {dir + "adult.csv", dir + "schema.json", dir + "tasks.json"};
}

FeatureSchema planted_schema() {
  return FeatureSchema({
      {"group", Role::kProtected, Kind::kCategorical, {"a", "b"}, 0},
      {"outcome", Role::kAdvantaged, Kind::kCategorical, {"no", "yes"}, 0},
      {"level", Role::kAdvantaged, Kind::kCategorical, {"low", "mid", "high"}, 0},
      {"region", Role::kRemaining, Kind::kCategorical, {"north", "south", "east"}, 0},
      {"score", Role::kRemaining, Kind::kContinuous, {}, 4},
  });
}

RawTable planted_table(std::size_t n, std::uint64_t seed, double agreement) {
  if (!(agreement >= 0.0 && agreement <= 1.0)) throw Error(ErrorCode::kBadProbability, "agreement must lie in [0, 1]");
  const auto schema = planted_schema();
  RawTable t;
  for (const auto& f : schema.features()) t.header.push_back(f.name);
  t.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {kStreamSample, i}));
    const int g = rng.uniform() < 0.5 ? 0 : 1;
    const int y = rng.uniform() < agreement ? g : 1 - g;
    const double u = rng.uniform();
    const int level = y ? (u < 0.2 ? 0 : (u < 0.5 ? 1 : 2)) : (u < 0.6 ? 0 : (u < 0.9 ? 1 : 2));
    const double r = rng.uniform();
    const int region = g == 0 ? (r < 0.6 ? 0 : (r < 0.8 ? 1 : 2)) : (r < 0.2 ? 0 : (r < 0.4 ? 1 : 2));
    const double score = rng.normal(10.0 * y, 4.0);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", score);
    t.rows.push_back({schema[0].categories[g], schema[1].categories[y], schema[2].categories[level],
                      schema[3].categories[region], buf});
  }
  return t;
}

ChainGenerator planted_model(double agreement) {
  if (!(agreement > 0.0 && agreement < 1.0)) throw Error(ErrorCode::kBadProbability, "agreement must lie in (0, 1)");
  FeatureSchema schema({
      {"s", Role::kProtected, Kind::kCategorical, {"0", "1"}, 0},
      {"y", Role::kAdvantaged, Kind::kCategorical, {"0", "1"}, 0},
      {"z", Role::kRemaining, Kind::kCategorical, {"0", "1"}, 0},
  });
  auto c0 = Conditional::table(2, {}, {});
  const double half[] = {0.5, 0.5};
  c0.set_table_row(0, half);
  auto c1 = Conditional::table(2, {0}, {2});
  const double row0[] = {agreement, 1.0 - agreement};
  const double row1[] = {1.0 - agreement, agreement};
  c1.set_table_row(0, row0);
  c1.set_table_row(1, row1);
  auto c2 = Conditional::table(2, {0, 1}, {2, 2});
  const double z[] = {0.3, 0.7};
  for (std::size_t st = 0; st < 4; ++st) c2.set_table_row(st, z);
  return ChainGenerator(schema, Encoding(3), {c0, c1, c2});
}

FeatureSchema random_schema(Rng& rng, int max_card) {
  if (max_card < 2) throw Error(ErrorCode::kInvalidConfig, "max_card must be >= 2");
  std::vector<FeatureDef> feats;
  auto add = [&](Role role, std::size_t count) {
    for (std::size_t j = 0; j < count; ++j) {
      FeatureDef f;
      f.name = "f" + std::to_string(feats.size());
      f.role = role;
      const auto card = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_card - 1)));
      for (int v = 0; v < card; ++v) f.categories.push_back(std::to_string(v));
      feats.push_back(std::move(f));
    }
  };
  add(Role::kProtected, 1 + rng.below(2));
  add(Role::kAdvantaged, 1 + rng.below(2));
  add(Role::kRemaining, rng.below(3));
  return FeatureSchema(std::move(feats));
}

ChainGenerator random_table_model(const FeatureSchema& schema, Rng& rng, double concentration) {
  const auto order = ChainGenerator::decomposed_order(schema);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<Conditional> cs;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    std::vector<int> parents(order.begin(), order.begin() + static_cast<long>(pos));
    std::vector<int> cards;
    for (int p : parents) cards.push_back(schema[p].cardinality());
    const int card = schema[order[pos]].cardinality();
    auto c = Conditional::table(card, parents, cards);
    std::vector<double> row(static_cast<std::size_t>(card));
    for (std::size_t st = 0; st < c.parent_states(); ++st) {
      double total = 0.0;
      for (double& v : row) {
        v = std::max(gamma(rng.engine()), 1e-6);
        total += v;
      }
      for (double& v : row) v /= total;
      c.set_table_row(st, row);
    }
    cs.push_back(std::move(c));
  }
  return ChainGenerator(schema, Encoding(schema.size()), std::move(cs));
}

}  // namespace udf
