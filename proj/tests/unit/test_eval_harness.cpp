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

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include "doctest.h"
#include "json.hpp"

#include "oracles.hpp"
#include "udf/benchmark.hpp"
#include "udf/downstream.hpp"
#include "udf/error.hpp"
#include "udf/metrics.hpp"
#include "udf/mix.hpp"
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

// Predictions with the given positive rate per group, n per group.
void fill_group(std::vector<int>& preds, std::vector<std::size_t>& groups, std::size_t g, int n, int positives) {
  for (int i = 0; i < n; ++i) {
    preds.push_back(i < positives ? 1 : 0);
    groups.push_back(g);
  }
}

// Binary-feature dataset where y copies x0; the other inputs are noise.
EncodedDataset copy_task_data(std::size_t n, std::uint64_t seed) {
  const auto schema = oracle::binary_schema(2, 1, 2);
  Rng rng(seed);
  std::vector<std::int32_t> cells;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s0 = static_cast<std::int32_t>(rng.below(2));
    cells.push_back(s0);
    cells.push_back(static_cast<std::int32_t>(rng.below(2)));
    cells.push_back(s0);
    cells.push_back(static_cast<std::int32_t>(rng.below(2)));
    cells.push_back(static_cast<std::int32_t>(rng.below(2)));
  }
  return EncodedDataset(schema, Encoding(schema.size()), cells);
}

TaskSpec copy_task(const FeatureSchema& schema) {
  return task_from_json(nlohmann::json::parse(R"({"name":"t","target":"a0","positive":["1"],"protected":["s1"]})"),
                        schema, Encoding(schema.size()));
}

}  // namespace

TEST_CASE("auroc") {
  CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 100.0);
  CHECK(auroc(std::vector<double>{0.9, 0.4, 0.6, 0.2}, std::vector<int>{1, 0, 0, 1}) == 50.0);
  CHECK(auroc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1}) == 50.0);
  CHECK(code_of([] { auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }) == ErrorCode::kSingleClass);

  SUBCASE("property: matches the pair-count oracle") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng.below(60);
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = static_cast<double>(rng.below(6)) / 5.0;
        y[i] = static_cast<int>(rng.below(2));
      }
      y[0] = 0;
      y[1] = 1;
      double wins = 0, pairs = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (y[i] == 1 && y[j] == 0) {
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
          }
      CHECK(auroc(s, y) == doctest::Approx(100.0 * wins / pairs).epsilon(1e-12));
    }
  }
}

TEST_CASE("demographic parity") {
  std::vector<int> p;
  std::vector<std::size_t> g;
  fill_group(p, g, 0, 10, 7);
  fill_group(p, g, 1, 10, 4);
  CHECK(demographic_parity(p, g) == doctest::Approx(30.0));
  fill_group(p, g, 2, 10, 5);
  CHECK(demographic_parity(p, g) == doctest::Approx(30.0));

  std::vector<int> same;
  std::vector<std::size_t> sg;
  fill_group(same, sg, 0, 10, 3);
  fill_group(same, sg, 1, 20, 6);
  CHECK(demographic_parity(same, sg) == 0.0);
  CHECK(code_of([] { demographic_parity(std::vector<int>{1, 0}, std::vector<std::size_t>{3, 3}); }) ==
        ErrorCode::kSingleGroup);

  SUBCASE("property: permutation invariant and scale free") {
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 20 + rng.below(100);
      std::vector<int> pr(n);
      std::vector<std::size_t> gr(n);
      for (std::size_t i = 0; i < n; ++i) {
        pr[i] = static_cast<int>(rng.below(2));
        gr[i] = i < 3 ? i : rng.below(3);
      }
      std::vector<std::size_t> relabel(n);
      for (std::size_t i = 0; i < n; ++i) relabel[i] = 2 - gr[i];
      std::vector<int> p3;
      std::vector<std::size_t> g3;
      for (int r = 0; r < 3; ++r) {
        p3.insert(p3.end(), pr.begin(), pr.end());
        g3.insert(g3.end(), gr.begin(), gr.end());
      }
      const double base = demographic_parity(pr, gr);
      CHECK(demographic_parity(pr, relabel) == doctest::Approx(base).epsilon(1e-12));
      CHECK(demographic_parity(p3, g3) == doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("equalized odds") {
  // 10 positives and 10 negatives per group; TPR and FPR set by counts.
  auto group = [](std::vector<int>& p, std::vector<int>& y, std::vector<std::size_t>& g, std::size_t id, int tp,
                  int fp) {
    for (int i = 0; i < 10; ++i) {
      p.push_back(i < tp ? 1 : 0);
      y.push_back(1);
      g.push_back(id);
    }
    for (int i = 0; i < 10; ++i) {
      p.push_back(i < fp ? 1 : 0);
      y.push_back(0);
      g.push_back(id);
    }
  };
  std::vector<int> p, y;
  std::vector<std::size_t> g;
  group(p, y, g, 0, 9, 2);
  group(p, y, g, 1, 6, 3);
  CHECK(equalized_odds(p, y, g).value == doctest::Approx(30.0));

  std::vector<int> p2, y2;
  std::vector<std::size_t> g2;
  group(p2, y2, g2, 0, 9, 1);
  group(p2, y2, g2, 1, 6, 1);
  group(p2, y2, g2, 2, 7, 1);
  CHECK(equalized_odds(p2, y2, g2).value == doctest::Approx(30.0));

  std::vector<int> p3, y3;
  std::vector<std::size_t> g3;
  group(p3, y3, g3, 0, 5, 5);
  group(p3, y3, g3, 1, 5, 5);
  CHECK(equalized_odds(p3, y3, g3).value == 0.0);

  SUBCASE("groups lacking a class are skipped and flagged") {
    auto pp = p;
    auto yy = y;
    auto gg = g;
    pp.push_back(1);
    yy.push_back(1);
    gg.push_back(7);
    const auto eo = equalized_odds(pp, yy, gg);
    CHECK(eo.value == doctest::Approx(30.0));
    REQUIRE(eo.skipped_groups.size() == 1);
    CHECK(eo.skipped_groups[0] == 7);
  }
  CHECK(code_of([] {
          equalized_odds(std::vector<int>{1, 0}, std::vector<int>{1, 1}, std::vector<std::size_t>{0, 1});
        }) == ErrorCode::kNoEligibleGroups);
}

TEST_CASE("prediction mi") {
  Rng rng(2);
  const std::size_t n = 10000;
  std::vector<int> p(n);
  std::vector<std::size_t> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = static_cast<int>(rng.below(2));
    g[i] = rng.below(3);
  }
  CHECK(prediction_mi(p, g) <= 0.01);

  for (std::size_t i = 0; i < n; ++i) {
    g[i] = rng.below(2);
    p[i] = static_cast<int>(g[i]);
  }
  CHECK(prediction_mi(p, g) == doctest::Approx(std::log(2.0)).epsilon(1e-3));
  CHECK(prediction_mi(p, g) <= std::log(2.0) + 1e-12);

  std::fill(p.begin(), p.end(), 1);
  CHECK(prediction_mi(p, g) == 0.0);
}

TEST_CASE("group-constant predictions carry no bias") {
  std::vector<int> p, y;
  std::vector<std::size_t> g;
  for (std::size_t grp = 0; grp < 3; ++grp)
    for (int i = 0; i < 20; ++i) {
      p.push_back(1);
      y.push_back(i % 2);
      g.push_back(grp);
    }
  CHECK(demographic_parity(p, g) == 0.0);
  CHECK(equalized_odds(p, y, g).value == 0.0);
  CHECK(prediction_mi(p, g) == 0.0);
}

TEST_CASE("downstream classifier") {
  const auto data = copy_task_data(2000, 1);
  const auto task = copy_task(data.schema());

  SUBCASE("learns a copied input") {
    const auto clf = train_downstream(data, task, 3);
    const auto probs = clf.predict_proba(data);
    const auto labels = task_labels(data, task);
    std::vector<int> preds(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = probs[i] >= 0.5 ? 1 : 0;
    CHECK(accuracy(preds, labels) >= 99.0);
    CHECK(std::find(clf.inputs().begin(), clf.inputs().end(), task.target) == clf.inputs().end());
  }
  SUBCASE("deterministic given the seed") {
    const auto a = train_downstream(data, task, 5);
    const auto b = train_downstream(data, task, 5);
    CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin(), b.params().end()));
  }
  SUBCASE("protected inputs can be excluded") {
    DownstreamConfig c;
    c.exclude_protected = true;
    const auto clf = train_downstream(data, task, 5, c);
    for (int k : clf.inputs()) CHECK(data.schema()[k].role != Role::kProtected);
  }
  SUBCASE("single-class labels are rejected") {
    std::vector<std::int32_t> cells = data.cells();
    for (std::size_t i = 0; i < data.rows(); ++i) cells[i * data.cols() + 2] = 1;
    const EncodedDataset all_pos(data.schema(), data.encoding(), cells);
    CHECK(code_of([&] { train_downstream(all_pos, task, 1); }) == ErrorCode::kDegenerateLabels);
  }
  SUBCASE("loss gradient matches central differences") {
    Rng init(8);
    Classifier clf(data.schema(), {0, 1, 3, 4}, 6, init);
    for (double& w : clf.params()) w += 0.3 * init.normal();
    std::vector<double> grad(clf.params().size(), 0.0);
    auto loss = [&] {
      std::vector<double> scratch(clf.params().size());
      double l = 0;
      for (std::size_t i = 0; i < 20; ++i) l += clf.accumulate_grad(data.row(i), task.label(data.row(i)), scratch);
      return l;
    };
    for (std::size_t i = 0; i < 20; ++i) clf.accumulate_grad(data.row(i), task.label(data.row(i)), grad);
    for (std::size_t k = 0; k < grad.size(); k += 2) {
      CHECK(oracle::rel_close(grad[k], oracle::central_diff(loss, clf.params(), k)));
    }
  }
}

TEST_CASE("task specs") {
  const auto schema = planted_schema();
  const auto data = encode_table(planted_table(500, 1), schema);
  const auto t = task_from_json(
      nlohmann::json::parse(R"({"name":"lvl","target":"level","positive":["mid","high"],"protected":["group"]})"),
      schema, data.encoding());
  CHECK(t.positive == std::vector<bool>{false, true, true});
  CHECK(code_of([&] {
          task_from_json(nlohmann::json::parse(R"({"target":"region","positive":["north"],"protected":["group"]})"),
                         schema, data.encoding());
        }) == ErrorCode::kInvalidConfig);
  CHECK(code_of([&] {
          task_from_json(nlohmann::json::parse(R"({"target":"outcome","positive":["no"],"protected":["level"]})"),
                         schema, data.encoding());
        }) == ErrorCode::kInvalidConfig);
  CHECK(code_of([&] {
          task_from_json(nlohmann::json::parse(R"({"target":"outcome","positive":["maybe"],"protected":["group"]})"),
                         schema, data.encoding());
        }) == ErrorCode::kUnknownCategory);
}

TEST_CASE("benchmark protocol on the planted recipe") {
  const auto schema = planted_schema();
  const auto real = encode_table(planted_table(3000, 11), schema);
  const auto tasks_doc = nlohmann::json::parse(R"([
    {"name":"group-outcome","target":"outcome","positive":["yes"],"protected":["group"]},
    {"name":"group-level","target":"level","positive":["mid","high"],"protected":["group"]}])");
  std::vector<TaskSpec> tasks;
  for (const auto& t : tasks_doc) tasks.push_back(task_from_json(t, schema, real.encoding()));

  FitConfig fc;
  fc.backend = BackendChoice::kTable;
  const auto split = split_dataset(real, 0.2, 0);
  auto base = std::make_shared<const ChainGenerator>(ChainGenerator::fit(split.train, fc));
  const MixedGenerator fair(base, std::vector<double>{1.0, 1.0});

  BenchmarkConfig cfg;
  cfg.seeds = {0, 1, 2};
  const std::vector<BenchmarkGenerator> gens{{"real", nullptr, "real", 0.0, 0.0},
                                             {"base", base.get(), "base", 0.0, 0.0},
                                             {"fair", &fair, "mix", 0.1, 0.0}};
  const auto report = run_benchmark(real, gens, tasks, cfg);
  REQUIRE(report.cells.size() == 3 * 2 * 3);

  for (const auto& c : report.cells) {
    CHECK(c.acc >= 0.0);
    CHECK(c.acc <= 100.0);
    CHECK(c.auroc >= 0.0);
    CHECK(c.auroc <= 100.0);
    CHECK(c.dp >= 0.0);
    CHECK(c.dp <= 100.0);
    CHECK(c.eo >= 0.0);
    CHECK(c.eo <= 100.0);
    CHECK(c.mi >= 0.0);
  }

  SUBCASE("real pass-through matches a hand-run of the protocol") {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto clf = train_downstream(split.train, tasks[t], 1);
      const auto r = score_classifier(clf, split.test, tasks[t]);
      const auto& cell = report.cells[t * 3 + 1];
      CHECK(cell.generator == "real");
      CHECK(cell.seed == 1);
      CHECK(cell.acc == r.acc);
      CHECK(cell.dp == r.dp);
      CHECK(cell.data_mi == dataset_group_mi(split.train));
    }
  }
  SUBCASE("summary is the mean and sample deviation over seeds") {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      double m = 0;
      for (std::size_t k = 0; k < 3; ++k) m += report.cells[(1 * 2 + t) * 3 + k].dp;
      m /= 3;
      double v = 0;
      for (std::size_t k = 0; k < 3; ++k) v += std::pow(report.cells[(1 * 2 + t) * 3 + k].dp - m, 2);
      const auto& s = report.find("base", tasks[t].name, "dp");
      CHECK(s.mean == doctest::Approx(m).epsilon(1e-12));
      CHECK(s.std == doctest::Approx(std::sqrt(v / 2)).epsilon(1e-12));
    }
  }
  SUBCASE("data mi of the generated training tables") {
    for (const auto& t : tasks) {
      CHECK(report.find("fair", t.name, "data_mi").mean < 0.01);
      CHECK(report.find("base", t.name, "data_mi").mean > 0.1);
    }
  }
  SUBCASE("deterministic apart from timings") {
    const auto again = run_benchmark(real, gens, tasks, cfg);
    CHECK(report_to_json(again, false).dump() == report_to_json(report, false).dump());
    CHECK(report_to_csv(again, false) == report_to_csv(report, false));
    BenchmarkConfig serial = cfg;
    serial.exec = Exec::kSerial;
    CHECK(report_to_csv(run_benchmark(real, gens, tasks, serial), false) == report_to_csv(report, false));
  }
  SUBCASE("json report layout") {
    const auto j = report_to_json(report);
    CHECK(j.at("cells").size() == 18);
    CHECK(j.at("cells")[0].contains("timings"));
    CHECK(j.at("cells")[0].contains("mi_x100"));
    CHECK_FALSE(report_to_json(report, false).at("cells")[0].contains("timings"));
    CHECK(j.at("run_id").get<std::string>().size() == 16);
  }
}
