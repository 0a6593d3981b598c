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

#include "udf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "udf/error.hpp"
#include "udf/fairness.hpp"
#include "udf/matrix.hpp"

namespace udf {

namespace {

std::size_t group_count(std::span<const std::size_t> groups) {
  return groups.empty() ? 0 : *std::max_element(groups.begin(), groups.end()) + 1;
}

Matrix empirical_joint(std::span<const std::size_t> rows, std::size_t n_rows, std::span<const std::size_t> cols,
                       std::size_t n_cols) {
  Matrix j(n_rows, n_cols);
  const double w = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) j(rows[i], cols[i]) += w;
  return j;
}

// Summation order above can leave the total a few ulps off 1; rescale so
// the normalization check is about the data, not the rounding.
double mi_of(Matrix j) {
  double total = 0.0;
  for (double v : j.data()) total += v;
  for (double& v : j.data()) v /= total;
  return mutual_information(j);
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over tie blocks, then the rank-sum form of Mann-Whitney U.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);  // mean of 1-based ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        pos_rank_sum += rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kSingleClass, "AUROC needs both classes");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return 100.0 * u / (np * static_cast<double>(n_neg));
}

double demographic_parity(std::span<const int> preds, std::span<const std::size_t> groups) {
  if (preds.size() != groups.size()) throw Error(ErrorCode::kLengthMismatch, "preds and groups differ in length");
  const std::size_t G = group_count(groups);
  std::vector<double> pos(G, 0.0), count(G, 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    count[groups[i]] += 1.0;
    pos[groups[i]] += preds[i] == 1 ? 1.0 : 0.0;
  }
  double lo = 2.0, hi = -1.0;
  std::size_t present = 0;
  for (std::size_t g = 0; g < G; ++g) {
    if (count[g] == 0.0) continue;
    ++present;
    const double r = pos[g] / count[g];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (present < 2) throw Error(ErrorCode::kSingleGroup, "demographic parity needs two non-empty groups");
  return 100.0 * (hi - lo);
}

EqualizedOdds equalized_odds(std::span<const int> preds, std::span<const int> labels,
                             std::span<const std::size_t> groups) {
  if (preds.size() != labels.size() || preds.size() != groups.size()) {
    throw Error(ErrorCode::kLengthMismatch, "preds, labels and groups differ in length");
  }
  const std::size_t G = group_count(groups);
  std::vector<double> tp(G, 0.0), fp(G, 0.0), np(G, 0.0), nn(G, 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::size_t g = groups[i];
    if (labels[i] == 1) {
      np[g] += 1.0;
      tp[g] += preds[i] == 1 ? 1.0 : 0.0;
    } else {
      nn[g] += 1.0;
      fp[g] += preds[i] == 1 ? 1.0 : 0.0;
    }
  }
  EqualizedOdds out;
  double tpr_lo = 2.0, tpr_hi = -1.0, fpr_lo = 2.0, fpr_hi = -1.0;
  std::size_t eligible = 0;
  for (std::size_t g = 0; g < G; ++g) {
    if (np[g] + nn[g] == 0.0) continue;
    if (np[g] == 0.0 || nn[g] == 0.0) {
      out.skipped_groups.push_back(g);
      continue;
    }
    ++eligible;
    const double tpr = tp[g] / np[g];
    const double fpr = fp[g] / nn[g];
    tpr_lo = std::min(tpr_lo, tpr);
    tpr_hi = std::max(tpr_hi, tpr);
    fpr_lo = std::min(fpr_lo, fpr);
    fpr_hi = std::max(fpr_hi, fpr);
  }
  if (eligible < 2) throw Error(ErrorCode::kNoEligibleGroups, "equalized odds needs two groups with both labels");
  out.value = 100.0 * std::max(tpr_hi - tpr_lo, fpr_hi - fpr_lo);
  return out;
}

double prediction_mi(std::span<const int> preds, std::span<const std::size_t> groups) {
  if (preds.size() != groups.size()) throw Error(ErrorCode::kLengthMismatch, "preds and groups differ in length");
  if (preds.empty()) throw Error(ErrorCode::kEmptyDataset, "prediction MI of zero rows");
  std::vector<std::size_t> p(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) p[i] = preds[i] == 1 ? 1 : 0;
  return mi_of(empirical_joint(groups, group_count(groups), p, 2));
}

double dataset_group_mi(const EncodedDataset& data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "dataset MI of zero rows");
  const auto s_view = GroupView::of_role(data.schema(), Role::kProtected);
  const auto a_view = GroupView::of_role(data.schema(), Role::kAdvantaged);
  std::vector<std::size_t> s(data.rows()), a(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    s[i] = s_view.index(data.row(i));
    a[i] = a_view.index(data.row(i));
  }
  return mi_of(empirical_joint(s, static_cast<std::size_t>(s_view.joint_cardinality()), a,
                               static_cast<std::size_t>(a_view.joint_cardinality())));
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "preds and labels differ in length");
  if (preds.empty()) throw Error(ErrorCode::kEmptyDataset, "accuracy of zero rows");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(preds.size());
}

}  // namespace udf
