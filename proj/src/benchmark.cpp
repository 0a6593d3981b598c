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

#include "udf/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "udf/error.hpp"
#include "udf/metrics.hpp"

namespace udf {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* const kMetricNames[] = {"acc", "auroc", "mi", "dp", "eo", "data_mi"};

double metric_value(const MetricsReport& r, const std::string& name) {
  if (name == "acc") return r.acc;
  if (name == "auroc") return r.auroc;
  if (name == "mi") return r.mi;
  if (name == "dp") return r.dp;
  if (name == "eo") return r.eo;
  return r.data_mi;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

const MetricSummary& BenchmarkReport::find(const std::string& generator, const std::string& task,
                                           const std::string& metric) const {
  for (const auto& s : summary) {
    if (s.generator == generator && s.task == task && s.metric == metric) return s;
  }
  throw Error(ErrorCode::kInvalidConfig, "no summary for " + generator + "/" + task + "/" + metric);
}

MetricsReport score_classifier(const Classifier& clf, const EncodedDataset& test, const TaskSpec& task) {
  MetricsReport r;
  r.task = task.name;
  const auto labels = task_labels(test, task);
  const auto groups = task_groups(test, task);
  const auto scores = clf.predict_proba(test);
  std::vector<int> preds(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= 0.5 ? 1 : 0;
  r.acc = accuracy(preds, labels);
  r.auroc = auroc(scores, labels);
  r.dp = demographic_parity(preds, groups);
  const auto eo = equalized_odds(preds, labels, groups);
  r.eo = eo.value;
  r.eo_skipped_groups = eo.skipped_groups;
  r.mi = prediction_mi(preds, groups);
  return r;
}

BenchmarkReport run_benchmark(const EncodedDataset& real, const std::vector<BenchmarkGenerator>& generators,
                              const std::vector<TaskSpec>& tasks, const BenchmarkConfig& config) {
  if (config.seeds.empty()) throw Error(ErrorCode::kInvalidConfig, "benchmark needs at least one seed");
  for (const auto& g : generators) {
    if (g.generator && !(g.generator->schema() == real.schema())) {
      throw Error(ErrorCode::kSchemaMismatch, "generator '" + g.name + "' has a different schema");
    }
  }
  const Split split = split_dataset(real, config.test_fraction, config.split_seed);
  const std::size_t G = generators.size();
  const std::size_t T = tasks.size();
  const std::size_t S = config.seeds.size();

  // Training tables per (generator, seed); sampling is row-parallel inside.
  std::vector<EncodedDataset> tables(G * S);
  std::vector<double> gen_seconds(G * S, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t k = 0; k < S; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      tables[g * S + k] = generators[g].generator
                              ? generators[g].generator->sample(split.train.rows(),
                                                                derive_seed(config.seeds[k], {kStreamSample}),
                                                                config.exec)
                              : split.train;
      gen_seconds[g * S + k] = seconds_since(t0);
    }
  }

  BenchmarkReport report;
  report.cells.resize(G * T * S);
  for_each_index(
      G * T * S, config.exec,
      [&](std::size_t c) {
        const std::size_t g = c / (T * S);
        const std::size_t t = (c / S) % T;
        const std::size_t k = c % S;
        const EncodedDataset& train = tables[g * S + k];
        const auto t0 = std::chrono::steady_clock::now();
        const Classifier clf = train_downstream(train, tasks[t], config.seeds[k], config.downstream);
        MetricsReport r = score_classifier(clf, split.test, tasks[t]);
        r.downstream_seconds = seconds_since(t0);
        r.generator = generators[g].name;
        r.method = generators[g].method;
        r.beta = generators[g].beta;
        r.seed = config.seeds[k];
        r.data_mi = dataset_group_mi(train);
        r.generate_seconds = gen_seconds[g * S + k];
        r.generator_train_seconds = generators[g].train_seconds;
        report.cells[c] = std::move(r);
      },
      1);

  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t t = 0; t < T; ++t) {
      for (const char* name : kMetricNames) {
        double mean = 0.0;
        for (std::size_t k = 0; k < S; ++k) mean += metric_value(report.cells[(g * T + t) * S + k], name);
        mean /= static_cast<double>(S);
        double var = 0.0;
        for (std::size_t k = 0; k < S; ++k) {
          const double d = metric_value(report.cells[(g * T + t) * S + k], name) - mean;
          var += d * d;
        }
        const double sd = S > 1 ? std::sqrt(var / static_cast<double>(S - 1)) : 0.0;
        report.summary.push_back({generators[g].name, tasks[t].name, name, mean, sd});
      }
    }
  }

  std::uint64_t id = derive_seed(config.split_seed, {G, T, S, real.rows()});
  for (auto s : config.seeds) id = derive_seed(id, {s});
  report.run_id = hex64(id);
  nlohmann::json seeds = nlohmann::json::array();
  for (auto s : config.seeds) seeds.push_back(s);
  report.config = {{"seeds", seeds},
                   {"test_fraction", config.test_fraction},
                   {"split_seed", config.split_seed},
                   {"train_rows", split.train.rows()},
                   {"test_rows", split.test.rows()},
                   {"exclude_protected", config.downstream.exclude_protected}};
  return report;
}

nlohmann::json report_to_json(const BenchmarkReport& report, bool timings) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& r : report.cells) {
    nlohmann::json cell = {{"generator", r.generator},
                     {"method", r.method},
                     {"beta", r.beta},
                     {"task", r.task},
                     {"seed", r.seed},
                     {"acc", r.acc},
                     {"auroc", r.auroc},
                     {"mi", r.mi},
                     {"mi_x100", r.mi * 100.0},
                     {"dp", r.dp},
                     {"eo", r.eo},
                     {"eo_skipped_groups", r.eo_skipped_groups},
                     {"data_mi", r.data_mi},
                     {"data_mi_x100", r.data_mi * 100.0}};
    if (timings) {
      cell["timings"] = {{"generate_s", r.generate_seconds},
                         {"downstream_s", r.downstream_seconds},
                         {"generator_train_s", r.generator_train_seconds}};
    }
    cells.push_back(std::move(cell));
  }
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"generator", s.generator}, {"task", s.task}, {"metric", s.metric}, {"mean", s.mean}, {"std", s.std}});
  }
  return {{"run_id", report.run_id}, {"config", report.config}, {"cells", cells}, {"summary", summary}};
}

std::string report_to_csv(const BenchmarkReport& report, bool timings) {
  std::ostringstream out;
  out.precision(10);
  out << "generator,method,beta,task,seed,acc,auroc,mi,dp,eo,data_mi";
  out << (timings ? ",generate_s,downstream_s,generator_train_s\n" : "\n");
  for (const auto& r : report.cells) {
    out << r.generator << ',' << r.method << ',' << r.beta << ',' << r.task << ',' << r.seed << ',' << r.acc << ','
        << r.auroc << ',' << r.mi << ',' << r.dp << ',' << r.eo << ',' << r.data_mi;
    if (timings) out << ',' << r.generate_seconds << ',' << r.downstream_seconds << ',' << r.generator_train_seconds;
    out << '\n';
  }
  return out.str();
}

}  // namespace udf
