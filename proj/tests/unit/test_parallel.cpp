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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "oracles.hpp"
#include "udf/error.hpp"
#include "udf/fairness.hpp"
#include "udf/imputation.hpp"
#include "udf/parallel.hpp"
#include "udf/recipes.hpp"

using namespace udf;

// Oversubscribe on purpose so the parallel path really interleaves even on a
// single-core machine.
struct ThreadGuard {
  int saved = thread_count();
  explicit ThreadGuard(int n) { set_thread_count(n); }
  ~ThreadGuard() { set_thread_count(saved); }
};

TEST_CASE("for_each_index visits every index once") {
  ThreadGuard g(4);
  for (Exec e : {Exec::kSerial, Exec::kParallel}) {
    std::vector<std::atomic<int>> hits(1000);
    for_each_index(hits.size(), e, [&](std::size_t i) { hits[i].fetch_add(1); }, 7);
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  for_each_index(0, Exec::kParallel, [](std::size_t) { FAIL("called on empty range"); });
}

TEST_CASE("exceptions escape the parallel region") {
  ThreadGuard g(4);
  CHECK_THROWS_AS(for_each_index(100, Exec::kParallel,
                                 [](std::size_t i) {
                                   if (i == 57) throw Error(ErrorCode::kInvalidConfig, "boom");
                                 }),
                  Error);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_thread_count(3) == 3);
  setenv("UDF_THREADS", "5", 1);
  CHECK(resolve_thread_count(0) == 5);
  setenv("UDF_THREADS", "junk", 1);
  CHECK(resolve_thread_count(0) == 0);
  unsetenv("UDF_THREADS");
  CHECK(resolve_thread_count(0) == 0);
}

TEST_CASE("kernels give identical results serially and in parallel") {
  ThreadGuard g(4);
  const auto schema = planted_schema();
  const auto data = encode_table(planted_table(3000, 1), schema);

  FitConfig fc;
  fc.backend = BackendChoice::kMlp;
  fc.epochs = 2;
  fc.hidden = 8;
  const auto model = ChainGenerator::fit(data, fc);
  for (int threads : {1, 2, 4}) {
    set_thread_count(threads);
    const auto again = ChainGenerator::fit(data, fc);
    for (std::size_t i = 0; i < model.conditionals().size(); ++i) {
      const auto a = model.conditional(i).params(), b = again.conditional(i).params();
      CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
  }
  set_thread_count(4);

  CHECK(model.sample(4000, 3, Exec::kSerial).cells() == model.sample(4000, 3, Exec::kParallel).cells());
  CHECK(model.mean_nll(data, Exec::kSerial) == model.mean_nll(data, Exec::kParallel));

  KlConfig ks, kp;
  ks.exec = Exec::kSerial;
  kp.exec = Exec::kParallel;
  ks.enumeration_limit = kp.enumeration_limit = 4;
  Rng rng(2);
  const auto p = random_table_model(oracle::binary_schema(2, 2, 2), rng);
  const auto q = random_table_model(oracle::binary_schema(2, 2, 2), rng);
  CHECK(model_kl(p, q, ks).value == model_kl(p, q, kp).value);

  const auto masked = mask_mcar(data, 0.4, 1);
  ImputeConfig is, ip;
  is.exec = Exec::kSerial;
  ip.exec = Exec::kParallel;
  CHECK(impute(model, masked, is).cells() == impute(model, masked, ip).cells());
}
