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
#include <string>

#include "udf/dataset.hpp"
#include "udf/generator.hpp"
#include "udf/rng.hpp"

namespace udf {

// Directory holding the bundled recipes: $UDF_DATA_DIR if set, else the
// source tree's data/ directory baked in at build time.
std::string data_dir();

struct AdultPaths {
  std::string csv;
  std::string schema;
  std::string tasks;
};
AdultPaths adult_paths();

// Planted-bias synthetic recipe with five columns:
//   group   protected, {a, b}, uniform
//   outcome advantaged, {no, yes}, P(outcome matches group) = agreement
//   level   advantaged, {low, mid, high}, shifted up by outcome
//   region  remaining, {north, south, east}, depends on group
//   score   remaining, continuous (4 bins), normal with mean 10 * outcome
FeatureSchema planted_schema();
RawTable planted_table(std::size_t n, std::uint64_t seed, double agreement = 0.8);

// Exact two-feature model p(s, y) = [[a/2, (1-a)/2], [(1-a)/2, a/2]] plus a
// remaining binary feature independent of both. At agreement 0.8 the joint is
// [[0.4, 0.1], [0.1, 0.4]] and I(s; y) = 0.192745 nats.
ChainGenerator planted_model(double agreement = 0.8);

// Random small all-categorical schema: 1-2 protected, 1-2 advantaged and
// 0-2 remaining features with cardinalities in [2, max_card].
FeatureSchema random_schema(Rng& rng, int max_card = 3);

// Table-backend chain over `schema` with Dirichlet(concentration) rows.
ChainGenerator random_table_model(const FeatureSchema& schema, Rng& rng, double concentration = 1.0);

}  // namespace udf
