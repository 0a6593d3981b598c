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

#include "udf/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "udf/error.hpp"
#include "udf/optim.hpp"

namespace udf {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

TaskSpec task_from_json(const nlohmann::json& doc, const FeatureSchema& schema, const Encoding& encoding) {
  TaskSpec t;
  try {
    t.target = schema.index_of(doc.at("target").get<std::string>());
    t.name = doc.value("name", schema[t.target].name);
    const FeatureDef& f = schema[t.target];
    if (f.role != Role::kAdvantaged) {
      throw Error(ErrorCode::kInvalidConfig, "task target '" + f.name + "' is not an advantaged feature");
    }
    t.positive.assign(static_cast<std::size_t>(f.cardinality()), false);
    if (doc.contains("positive")) {
      if (f.kind != Kind::kCategorical) throw Error(ErrorCode::kInvalidConfig, "'positive' needs a categorical target");
      for (const auto& c : doc.at("positive")) {
        const auto name = c.get<std::string>();
        const auto it = std::find(f.categories.begin(), f.categories.end(), name);
        if (it == f.categories.end()) throw Error(ErrorCode::kUnknownCategory, "unknown category '" + name + "'");
        t.positive[static_cast<std::size_t>(it - f.categories.begin())] = true;
      }
    } else if (doc.contains("threshold")) {
      if (f.kind != Kind::kContinuous || encoding.size() != schema.size()) {
        throw Error(ErrorCode::kInvalidConfig, "'threshold' needs a binned continuous target");
      }
      const double x = doc.at("threshold").get<double>();
      const auto& mids = encoding[static_cast<std::size_t>(t.target)].midpoints;
      for (std::size_t b = 0; b < mids.size(); ++b) t.positive[b] = mids[b] > x;
    } else {
      throw Error(ErrorCode::kInvalidConfig, "task needs 'positive' or 'threshold'");
    }
    if (std::none_of(t.positive.begin(), t.positive.end(), [](bool b) { return b; }) ||
        std::all_of(t.positive.begin(), t.positive.end(), [](bool b) { return b; })) {
      throw Error(ErrorCode::kInvalidConfig, "task '" + t.name + "' has a constant label rule");
    }
    for (const auto& p : doc.at("protected")) {
      const int k = schema.index_of(p.get<std::string>());
      if (schema[k].role != Role::kProtected) {
        throw Error(ErrorCode::kInvalidConfig, "task group '" + schema[k].name + "' is not a protected feature");
      }
      t.protected_features.push_back(k);
    }
    if (t.protected_features.empty()) throw Error(ErrorCode::kInvalidConfig, "task needs at least one protected feature");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed task: ") + e.what());
  }
  return t;
}

std::vector<TaskSpec> load_tasks(const std::string& path, const FeatureSchema& schema, const Encoding& encoding) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open task file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path + ": " + e.what());
  }
  std::vector<TaskSpec> tasks;
  if (!doc.contains("tasks") || !doc["tasks"].is_array()) throw Error(ErrorCode::kInvalidConfig, path + ": no 'tasks' array");
  for (const auto& t : doc["tasks"]) tasks.push_back(task_from_json(t, schema, encoding));
  return tasks;
}

std::vector<int> task_labels(const EncodedDataset& data, const TaskSpec& task) {
  std::vector<int> y(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) y[i] = task.label(data.row(i));
  return y;
}

std::vector<std::size_t> task_groups(const EncodedDataset& data, const TaskSpec& task) {
  const GroupView view(data.schema(), task.protected_features);
  std::vector<std::size_t> g(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) g[i] = view.index(data.row(i));
  return g;
}

// ---------------------------------------------------------------------------
// Classifier

Classifier::Classifier(const FeatureSchema& schema, std::vector<int> inputs, int hidden, Rng& init)
    : inputs_(std::move(inputs)), hidden_(hidden) {
  for (int k : inputs_) {
    offsets_.push_back(input_dim_);
    input_dim_ += schema[k].cardinality();
  }
  const auto h = static_cast<std::size_t>(hidden_);
  const auto in = static_cast<std::size_t>(input_dim_);
  params_.assign(in * h + h + h + 1, 0.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(inputs_.size(), 1)));
  for (std::size_t i = 0; i < in * h; ++i) params_[i] = init.normal(0.0, s1);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t j = 0; j < h; ++j) params_[in * h + h + j] = init.normal(0.0, s2);
}

double Classifier::forward(std::span<const std::int32_t> record, std::span<double> z) const {
  const auto h = static_cast<std::size_t>(hidden_);
  const auto in = static_cast<std::size_t>(input_dim_);
  const double* b1 = params_.data() + in * h;
  std::copy(b1, b1 + h, z.begin());
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const auto col = static_cast<std::size_t>(offsets_[i] + record[inputs_[i]]);
    const double* w = params_.data() + col * h;
    for (std::size_t j = 0; j < h; ++j) z[j] += w[j];
  }
  const double* w2 = b1 + h;
  double out = w2[h];
  for (std::size_t j = 0; j < h; ++j) {
    z[j] = std::tanh(z[j]);
    out += w2[j] * z[j];
  }
  return out;
}

double Classifier::predict_proba(std::span<const std::int32_t> record) const {
  thread_local std::vector<double> z;
  z.resize(static_cast<std::size_t>(hidden_));
  return sigmoid(forward(record, z));
}

std::vector<double> Classifier::predict_proba(const EncodedDataset& data) const {
  std::vector<double> p(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) p[i] = predict_proba(data.row(i));
  return p;
}

double Classifier::accumulate_grad(std::span<const std::int32_t> record, int y, std::span<double> grad) const {
  thread_local std::vector<double> z;
  const auto h = static_cast<std::size_t>(hidden_);
  const auto in = static_cast<std::size_t>(input_dim_);
  z.resize(h);
  const double logit = forward(record, z);
  const double p = sigmoid(logit);
  // BCE with logits, written to stay finite for large |logit|.
  const double loss = std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
  const double d = p - y;
  const double* w2 = params_.data() + in * h + h;
  double* g_b1 = grad.data() + in * h;
  double* g_w2 = g_b1 + h;
  g_w2[h] += d;
  for (std::size_t j = 0; j < h; ++j) {
    g_w2[j] += d * z[j];
    const double dpre = d * w2[j] * (1.0 - z[j] * z[j]);
    g_b1[j] += dpre;
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
      const auto col = static_cast<std::size_t>(offsets_[i] + record[inputs_[i]]);
      grad[col * h + j] += dpre;
    }
  }
  return loss;
}

Classifier train_downstream(const EncodedDataset& train, const TaskSpec& task, std::uint64_t seed,
                            const DownstreamConfig& config) {
  if (train.empty()) throw Error(ErrorCode::kEmptyDataset, "downstream training on zero rows");
  const FeatureSchema& schema = train.schema();
  std::vector<int> inputs;
  for (int k = 0; k < static_cast<int>(schema.size()); ++k) {
    if (k == task.target) continue;
    if (config.exclude_protected && schema[k].role == Role::kProtected) continue;
    inputs.push_back(k);
  }
  const auto labels = task_labels(train, task);
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0 || n_pos == labels.size()) {
    throw Error(ErrorCode::kDegenerateLabels, "task '" + task.name + "' has a single class in the training data");
  }

  Rng init(derive_seed(seed, {kStreamDownstream, kStreamInit}));
  Classifier clf(schema, inputs, config.hidden, init);

  std::vector<std::size_t> idx(train.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng split(derive_seed(seed, {kStreamDownstream, kStreamSplit}));
  split.shuffle(idx.begin(), idx.end());
  auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(idx.size())));
  if (idx.size() < 10) n_val = 0;
  const std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> fit(idx.begin() + static_cast<long>(n_val), idx.end());

  auto params = clf.params();
  std::vector<double> grad(params.size());
  std::vector<double> best(params.begin(), params.end());
  Adam adam(params.size(), config.lr);
  Rng shuffle(derive_seed(seed, {kStreamDownstream, kStreamShuffle}));
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

  auto val_loss = [&]() {
    double total = 0.0;
    for (std::size_t i : val) {
      const double p = clf.predict_proba(train.row(i));
      total -= std::log(std::max(labels[i] == 1 ? p : 1.0 - p, 1e-15));
    }
    return total / static_cast<double>(val.size());
  };

  double best_loss = n_val ? val_loss() : 0.0;
  int stale = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle.shuffle(fit.begin(), fit.end());
    for (std::size_t start = 0; start < fit.size(); start += batch) {
      const std::size_t end = std::min(fit.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) clf.accumulate_grad(train.row(fit[b]), labels[fit[b]], grad);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      adam.step(params, grad);
    }
    if (n_val == 0) continue;
    const double l = val_loss();
    if (!std::isfinite(l)) throw Error(ErrorCode::kDivergedTraining, "downstream loss is not finite");
    if (l < best_loss) {
      best_loss = l;
      std::copy(params.begin(), params.end(), best.begin());
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  if (n_val) std::copy(best.begin(), best.end(), params.begin());
  return clf;
}

}  // namespace udf
