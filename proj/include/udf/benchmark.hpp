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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "udf/downstream.hpp"
#include "udf/generator.hpp"

namespace udf {

struct BenchmarkGenerator {
  std::string name;
  const Generator* generator = nullptr;  // nullptr: the real training split itself
  std::string method = "real";           // real | base | mix | dpo
  double beta = 0.0;
  double train_seconds = 0.0;  // reported alongside, not measured here
};

struct BenchmarkConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  DownstreamConfig downstream;
  Exec exec = Exec::kParallel;
};

struct MetricsReport {
  std::string generator;
  std::string method;
  double beta = 0.0;
  std::string task;
  std::uint64_t seed = 0;
  double acc = 0.0;    // percent
  double auroc = 0.0;  // percent
  double mi = 0.0;     // nats, prediction vs task groups
  double dp = 0.0;     // percent points
  double eo = 0.0;     // percent points
  std::vector<std::size_t> eo_skipped_groups;
  double data_mi = 0.0;  // nats, I(s; d_as) of the generated training table
  double generate_seconds = 0.0;
  double downstream_seconds = 0.0;
  double generator_train_seconds = 0.0;
};

struct MetricSummary {
  std::string generator;
  std::string task;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over seeds
};

struct BenchmarkReport {
  std::string run_id;
  nlohmann::json config;
  std::vector<MetricsReport> cells;  // generator-major, then task, then seed
  std::vector<MetricSummary> summary;

  const MetricSummary& find(const std::string& generator, const std::string& task, const std::string& metric) const;
};

// Splits `real` into train/test once (split_seed), then for every seed and
// generator draws a training table the size of the real train split, trains
// a downstream classifier per task and scores it on the real test split.
BenchmarkReport run_benchmark(const EncodedDataset& real, const std::vector<BenchmarkGenerator>& generators,
                              const std::vector<TaskSpec>& tasks, const BenchmarkConfig& config = {});

// Scores one trained classifier on a labelled table.
MetricsReport score_classifier(const Classifier& clf, const EncodedDataset& test, const TaskSpec& task);

// Wall-clock fields are the only non-deterministic part of a report; leave
// them out to get byte-identical files across runs.
nlohmann::json report_to_json(const BenchmarkReport& report, bool timings = true);
std::string report_to_csv(const BenchmarkReport& report, bool timings = true);

}  // namespace udf
