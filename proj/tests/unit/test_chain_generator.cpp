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
#include "udf/generator.hpp"
#include "udf/recipes.hpp"

using namespace udf;
using oracle::binary_schema;
using oracle::table_chain;

namespace {

// p(s=1) = ps1, p(y=1 | s) = py[s].
ChainGenerator coin_model(double ps1, double py0, double py1) {
  return table_chain(binary_schema(1, 1, 0), {{{1 - ps1, ps1}}, {{1 - py0, py0}, {1 - py1, py1}}});
}

ChainGenerator random_mlp_chain(const FeatureSchema& schema, int hidden, std::uint64_t seed) {
  const auto order = ChainGenerator::decomposed_order(schema);
  Rng rng(seed);
  std::vector<Conditional> cs;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    std::vector<int> parents(order.begin(), order.begin() + static_cast<long>(pos));
    std::vector<int> cards;
    for (int p : parents) cards.push_back(schema[p].cardinality());
    auto c = Conditional::mlp(schema[order[pos]].cardinality(), parents, cards, hidden, rng);
    for (double& v : c.params()) v += rng.normal(0.0, 0.3);
    cs.push_back(std::move(c));
  }
  return ChainGenerator(schema, Encoding(schema.size()), std::move(cs));
}

}  // namespace

TEST_CASE("add-one smoothing on a single binary feature") {
  const auto schema = binary_schema(1, 1, 0);
  const EncodedDataset d(schema, Encoding(2), {1, 0, 1, 1, 1, 0, 0, 1});
  FitConfig cfg;
  cfg.backend = BackendChoice::kTable;
  const auto g = ChainGenerator::fit(d, cfg);
  std::vector<double> p(2);
  const std::int32_t rec[] = {0, 0};
  g.step_probs(0, rec, p);
  CHECK(p[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("independent fair coins fit to one half") {
  const auto truth = coin_model(0.5, 0.5, 0.5);
  const auto d = truth.sample(10000, 4);
  for (auto backend : {BackendChoice::kTable, BackendChoice::kMlp}) {
    FitConfig cfg;
    cfg.backend = backend;
    cfg.epochs = 20;
    const auto g = ChainGenerator::fit(d, cfg);
    std::vector<double> p(2);
    for (std::int32_t s = 0; s < 2; ++s) {
      const std::int32_t rec[] = {s, 0};
      g.step_probs(1, rec, p);
      CHECK(std::abs(p[1] - 0.5) < 0.05);
    }
  }
}

TEST_CASE("fit on an empty dataset") {
  const EncodedDataset d(binary_schema(1, 1, 0), Encoding(2), {});
  try {
    ChainGenerator::fit(d, FitConfig{});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyDataset);
  }
}

TEST_CASE("log_prob is the sum of factor logs") {
  const auto g = coin_model(0.5, 0.2, 0.8);
  const std::int32_t rec[] = {1, 1};
  CHECK(g.log_prob(rec) == doctest::Approx(-0.916291).epsilon(1e-6));
  CHECK(g.log_prob(rec) == doctest::Approx(std::log(0.4)).epsilon(1e-12));

  const auto det = coin_model(1.0, 1.0, 1.0);
  CHECK(std::abs(det.log_prob(rec)) < 1e-9);

  Rng rng(3);
  const auto m3 = random_table_model(binary_schema(1, 1, 1), rng);
  const auto fj = oracle::full_joint(m3);
  double total = 0.0;
  for (const auto& r : fj.records) total += std::exp(m3.log_prob(r));
  CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("sampling") {
  const auto det = coin_model(1.0, 1.0, 1.0);
  const auto d = det.sample(50, 1);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    CHECK(d.at(i, 0) == 1);
    CHECK(d.at(i, 1) == 1);
  }

  const auto g = coin_model(0.6, 0.3, 0.3);
  const std::size_t n = 100000;
  const auto big = g.sample(n, 9);
  double ones = 0;
  for (std::size_t i = 0; i < n; ++i) ones += big.at(i, 0);
  CHECK(std::abs(ones / n - 0.6) <= 3.0 * std::sqrt(0.24 / n));

  CHECK(g.sample(1000, 5).cells() == g.sample(1000, 5).cells());
  CHECK(g.sample(1000, 5, Exec::kSerial).cells() == g.sample(1000, 5, Exec::kParallel).cells());
}

TEST_CASE("group tables") {
  SUBCASE("independent model has equal rows") {
    Rng rng(8);
    const auto schema = binary_schema(2, 2, 1);
    auto rows = std::vector<oracle::Table>{{{0.3, 0.7}}, {{0.5, 0.5}, {0.2, 0.8}}};
    // advantaged features ignore s: same row for every parent state
    rows.push_back(oracle::Table(4, {0.6, 0.4}));
    rows.push_back(oracle::Table(8, {0.1, 0.9}));
    rows.push_back(oracle::Table(16, {0.5, 0.5}));
    const auto g = table_chain(schema, rows);
    const auto t = g.group_tables();
    for (std::size_t s = 0; s < t.s_states(); ++s)
      for (std::size_t a = 0; a < t.das_states(); ++a) CHECK(t.p_das_given_s(s, a) == doctest::Approx(t.p_das[a]));
  }
  SUBCASE("hand mixture") {
    const auto t = coin_model(0.5, 0.9, 0.1).group_tables();
    CHECK(t.p_das[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.p_das[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("too many protected states") {
    const auto g = random_mlp_chain(binary_schema(20, 1, 0), 2, 1);
    try {
      g.group_tables();
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kGroupTooLarge);
    }
  }
  SUBCASE("property: matches full enumeration and invariants") {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
      const auto g = random_table_model(random_schema(rng), rng, 0.7);
      const auto t = g.group_tables();
      const auto j = oracle::group_joint(g);
      double ps_total = 0.0;
      for (std::size_t s = 0; s < t.s_states(); ++s) {
        double ps = 0.0;
        for (double v : j[s]) ps += v;
        CHECK(std::abs(t.p_s[s] - ps) < 1e-12);
        ps_total += t.p_s[s];
        double row = 0.0;
        for (std::size_t a = 0; a < t.das_states(); ++a) {
          CHECK(std::abs(t.p_s[s] * t.p_das_given_s(s, a) - j[s][a]) < 1e-12);
          row += t.p_das_given_s(s, a);
        }
        CHECK(std::abs(row - 1.0) < 1e-9);
      }
      CHECK(std::abs(ps_total - 1.0) < 1e-9);
      for (std::size_t a = 0; a < t.das_states(); ++a) {
        double m = 0.0;
        for (std::size_t s = 0; s < t.s_states(); ++s) m += t.p_s[s] * t.p_das_given_s(s, a);
        CHECK(std::abs(m - t.p_das[a]) < 1e-9);
      }
    }
  }
}

TEST_CASE("prefix completion") {
  Rng rng(2);
  const auto schema = binary_schema(1, 2, 1);
  const auto g = random_table_model(schema, rng);
  SUBCASE("full record leaves nothing") {
    const auto pc = conditional_group_sampler(g, {1, 0, 1, 0});
    CHECK(pc.steps() == 0);
  }
  SUBCASE("s only reproduces the group table row") {
    const auto t = g.group_tables();
    for (std::int32_t s = 0; s < 2; ++s) {
      const auto pc = conditional_group_sampler(g, {s, -1, -1, -1});
      REQUIRE(pc.steps() == 3);
      std::vector<double> p0(2), p1(2);
      for (std::int32_t a0 = 0; a0 < 2; ++a0) {
        for (std::int32_t a1 = 0; a1 < 2; ++a1) {
          const std::vector<std::int32_t> rec{s, a0, a1, 0};
          pc.step_probs(0, rec, p0);
          pc.step_probs(1, rec, p1);
          CHECK(p0[a0] * p1[a1] == doctest::Approx(t.p_das_given_s(s, a0 * 2 + a1)).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("skipping a middle feature") {
    try {
      conditional_group_sampler(g, {1, -1, 0, -1});
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNotPrefix);
    }
  }
}

TEST_CASE("property: conditionals are normalized and positive") {
  Rng rng(17);
  const auto schema = binary_schema(2, 1, 2);
  const auto mlp = random_mlp_chain(schema, 8, 5);
  const auto tab = random_table_model(schema, rng, 0.3);
  for (const ChainGenerator* g : {&mlp, &tab}) {
    for (int probe = 0; probe < 50; ++probe) {
      std::vector<std::int32_t> rec(schema.size());
      for (auto& v : rec) v = static_cast<std::int32_t>(rng.below(2));
      for (std::size_t pos = 0; pos < schema.size(); ++pos) {
        std::vector<double> p(2);
        g->step_probs(pos, rec, p);
        CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-9);
        CHECK(p[0] > 0.0);
        CHECK(p[1] > 0.0);
      }
    }
  }
}

TEST_CASE("property: sampled group frequencies match the exact tables") {
  Rng rng(33);
  const auto g = random_table_model(binary_schema(1, 2, 1), rng);
  const auto t = g.group_tables();
  const std::size_t n = 200000;
  const auto d = g.sample(n, 77);
  const GroupView sv = GroupView::of_role(g.schema(), Role::kProtected);
  const GroupView av = GroupView::of_role(g.schema(), Role::kAdvantaged);
  std::vector<double> counts(t.s_states() * t.das_states(), 0.0);
  for (std::size_t i = 0; i < n; ++i) counts[sv.index(d.row(i)) * t.das_states() + av.index(d.row(i))] += 1;
  for (std::size_t s = 0; s < t.s_states(); ++s) {
    for (std::size_t a = 0; a < t.das_states(); ++a) {
      const double p = t.p_s[s] * t.p_das_given_s(s, a);
      const double sd = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(counts[s * t.das_states() + a] / n - p) <= 4 * sd);
    }
  }
}

TEST_CASE("gradient check: mlp log_prob") {
  auto g = random_mlp_chain(FeatureSchema({{"s", Role::kProtected, Kind::kCategorical, {"0", "1", "2"}, 0},
                                           {"a", Role::kAdvantaged, Kind::kCategorical, {"0", "1"}, 0},
                                           {"r", Role::kRemaining, Kind::kCategorical, {"0", "1", "2", "3"}, 0}}),
                            6, 12);
  Rng rng(4);
  const std::vector<std::int32_t> rec{2, 1, 3};
  auto grad = g.zero_grad();
  g.accumulate_log_prob_grad(rec, 1.0, grad);
  for (int probe = 0; probe < 10; ++probe) {
    const auto pos = static_cast<std::size_t>(rng.below(g.conditionals().size()));
    auto params = g.conditional(pos).params();
    const auto i = static_cast<std::size_t>(rng.below(params.size()));
    const double numeric = oracle::central_diff([&] { return g.log_prob(rec); }, params, i);
    CHECK(oracle::rel_close(grad[pos][i], numeric));
  }
}

TEST_CASE("fit and sample are reproducible") {
  const auto truth = coin_model(0.4, 0.3, 0.7);
  const auto d = truth.sample(2000, 1);
  FitConfig cfg;
  cfg.backend = BackendChoice::kMlp;
  cfg.epochs = 5;
  cfg.hidden = 8;
  const auto a = ChainGenerator::fit(d, cfg);
  const auto b = ChainGenerator::fit(d, cfg);
  for (std::size_t pos = 0; pos < a.conditionals().size(); ++pos) {
    const auto pa = a.conditional(pos).params();
    const auto pb = b.conditional(pos).params();
    CHECK(std::equal(pa.begin(), pa.end(), pb.begin()));
  }
  CHECK(a.sample(500, 3).cells() == b.sample(500, 3).cells());
}

TEST_CASE("order puts protected, then advantaged, then remaining") {
  const FeatureSchema schema({{"r", Role::kRemaining, Kind::kCategorical, {"0", "1"}, 0},
                              {"a", Role::kAdvantaged, Kind::kCategorical, {"0", "1"}, 0},
                              {"s", Role::kProtected, Kind::kCategorical, {"0", "1"}, 0}});
  CHECK(ChainGenerator::decomposed_order(schema) == std::vector<int>{2, 1, 0});
}
