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

#include "udf/fairness.hpp"

#include <algorithm>
#include <cmath>

#include "udf/error.hpp"
#include "udf/mix.hpp"

namespace udf {

namespace {

constexpr double kNormTol = 1e-9;

double safe_log(double x) { return std::log(std::max(x, kProbFloor)); }

bool same_parameters(const ChainGenerator& a, const ChainGenerator& b) {
  if (!(a.schema() == b.schema())) return false;
  for (std::size_t pos = 0; pos < a.conditionals().size(); ++pos) {
    const auto pa = a.conditional(pos).params();
    const auto pb = b.conditional(pos).params();
    if (a.conditional(pos).backend() != b.conditional(pos).backend() || !std::equal(pa.begin(), pa.end(), pb.begin(), pb.end())) {
      return false;
    }
  }
  return true;
}

}  // namespace

double mutual_information(const Matrix& joint) {
  double total = 0.0;
  for (double v : joint.data()) {
    if (!(v >= 0.0)) throw Error(ErrorCode::kNotNormalized, "joint has a negative or NaN entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kNormTol) {
    throw Error(ErrorCode::kNotNormalized, "joint sums to " + std::to_string(total));
  }
  std::vector<double> row(joint.rows(), 0.0);
  std::vector<double> col(joint.cols(), 0.0);
  for (std::size_t i = 0; i < joint.rows(); ++i) {
    for (std::size_t j = 0; j < joint.cols(); ++j) {
      row[i] += joint(i, j);
      col[j] += joint(i, j);
    }
  }
  // Terms are summed in sorted order so that J and its transpose give the
  // same bits.
  std::vector<double> terms;
  terms.reserve(joint.data().size());
  for (std::size_t i = 0; i < joint.rows(); ++i) {
    for (std::size_t j = 0; j < joint.cols(); ++j) {
      const double p = joint(i, j);
      if (p > 0.0) terms.push_back(p * std::log(p / (row[i] * col[j])));
    }
  }
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  return std::max(mi, 0.0);
}

double generator_mi(const GroupTables& tables) {
  // Equivalent to mutual_information(tables.joint()) but uses the stored
  // conditionals directly: sum_s p(s) sum_a p(a|s) log(p(a|s) / p(a)).
  double mi = 0.0;
  for (std::size_t s = 0; s < tables.s_states(); ++s) {
    double inner = 0.0;
    for (std::size_t a = 0; a < tables.das_states(); ++a) {
      const double c = tables.p_das_given_s(s, a);
      if (c > 0.0) inner += c * std::log(c / tables.p_das[a]);
    }
    mi += tables.p_s[s] * inner;
  }
  return std::max(mi, 0.0);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::kLengthMismatch, "p and q differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - safe_log(q[i]));
  }
  return std::max(kl, 0.0);
}

double reward(const GroupTables& tables, std::size_t s_state, std::size_t das_state) {
  return safe_log(tables.p_das[das_state]) - safe_log(tables.p_das_given_s(s_state, das_state));
}

double expected_negative_reward(const GroupTables& tables) {
  double e = 0.0;
  for (std::size_t s = 0; s < tables.s_states(); ++s) {
    double inner = 0.0;
    for (std::size_t a = 0; a < tables.das_states(); ++a) {
      inner -= tables.p_das_given_s(s, a) * reward(tables, s, a);
    }
    e += tables.p_s[s] * inner;
  }
  return e;
}

double surrogate_mi(const GroupTables& q, std::span<const double> p_ref_das) {
  double v = 0.0;
  for (std::size_t s = 0; s < q.s_states(); ++s) v += q.p_s[s] * kl_divergence(q.p_das_given_s.row(s), p_ref_das);
  return v;
}

ObjectiveValue mixture_objective(const GroupTables& base, std::span<const double> lambda, double beta,
                                 std::span<double> grad_lambda, double* surrogate) {
  const std::size_t S = base.s_states();
  const std::size_t A = base.das_states();
  if (lambda.size() != S) throw Error(ErrorCode::kLengthMismatch, "one mixing weight per protected state");
  const auto& m = base.p_das;

  thread_local std::vector<double> q;
  thread_local std::vector<double> qbar;
  q.assign(S * A, 0.0);
  qbar.assign(A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const double l = lambda[s];
    const auto c = base.p_das_given_s.row(s);
    for (std::size_t a = 0; a < A; ++a) {
      q[s * A + a] = l * m[a] + (1.0 - l) * c[a];
      qbar[a] += base.p_s[s] * q[s * A + a];
    }
  }

  double mi = 0.0;
  double kl = 0.0;
  double sur = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const auto c = base.p_das_given_s.row(s);
    const double ps = base.p_s[s];
    double mi_s = 0.0, kl_s = 0.0, sur_s = 0.0, dmi = 0.0, dkl = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double qa = q[s * A + a];
      const double log_ratio = safe_log(qa) - safe_log(qbar[a]);
      if (qa > 0.0) {
        mi_s += qa * log_ratio;
        sur_s += qa * (safe_log(qa) - safe_log(m[a]));
      }
      if (c[a] > 0.0) kl_s += c[a] * (std::log(c[a]) - safe_log(qa));
      const double dq = m[a] - c[a];
      dmi += dq * log_ratio;
      dkl -= c[a] * dq / std::max(qa, kProbFloor);
    }
    mi += ps * mi_s;
    kl += ps * kl_s;
    sur += ps * sur_s;
    if (!grad_lambda.empty()) grad_lambda[s] = ps * (dmi + beta * dkl);
  }
  if (surrogate) *surrogate = std::max(sur, 0.0);

  ObjectiveValue v;
  v.mi = std::max(mi, 0.0);
  v.kl = std::max(kl, 0.0);
  v.beta = beta;
  v.total = v.mi + beta * v.kl;
  return v;
}

KlEstimate model_kl(const Generator& p, const Generator& q, const KlConfig& config) {
  if (!(p.schema() == q.schema()) || p.order() != q.order()) {
    throw Error(ErrorCode::kSchemaMismatch, "generators differ in schema or order");
  }

  // Mixture over p: only the d_as block differs.
  if (const auto* mix = dynamic_cast<const MixedGenerator*>(&q)) {
    const auto* chain = dynamic_cast<const ChainGenerator*>(&p);
    if (&mix->base() == &p || (chain && same_parameters(*chain, mix->base()))) {
      const GroupTables& pt = mix->base_tables();
      const GroupTables& qt = mix->mixed_tables();
      double kl = 0.0;
      for (std::size_t s = 0; s < pt.s_states(); ++s) {
        kl += pt.p_s[s] * kl_divergence(pt.p_das_given_s.row(s), qt.p_das_given_s.row(s));
      }
      return {kl, 0.0, true};
    }
  }

  const auto cards = p.schema().cardinalities();
  std::uint64_t states = 1;
  for (int c : cards) {
    states = states > config.enumeration_limit ? states : states * static_cast<std::uint64_t>(c);
  }
  if (states <= config.enumeration_limit) {
    const std::size_t K = cards.size();
    std::vector<double> terms(static_cast<std::size_t>(states));
    for_each_index(static_cast<std::size_t>(states), config.exec, [&](std::size_t idx) {
      std::vector<std::int32_t> rec(K);
      std::size_t rest = idx;
      for (std::size_t k = K; k-- > 0;) {
        rec[k] = static_cast<std::int32_t>(rest % static_cast<std::size_t>(cards[k]));
        rest /= static_cast<std::size_t>(cards[k]);
      }
      const double lp = p.log_prob(rec);
      terms[idx] = std::exp(lp) * (lp - q.log_prob(rec));
    });
    double kl = 0.0;
    for (double t : terms) kl += t;
    return {std::max(kl, 0.0), 0.0, true};
  }

  const auto draws = p.sample(config.n_samples, derive_seed(config.seed, {kStreamKl}), config.exec);
  std::vector<double> d(draws.rows());
  for_each_index(draws.rows(), config.exec,
                 [&](std::size_t i) { d[i] = p.log_prob(draws.row(i)) - q.log_prob(draws.row(i)); });
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d.size() > 1 ? d.size() - 1 : 1);
  return {mean, std::sqrt(var / static_cast<double>(d.size())), false};
}

ObjectiveValue objective(const Generator& p, const Generator& q, double beta, const KlConfig& config) {
  if (!(beta >= 0.0)) throw Error(ErrorCode::kBetaOutOfRange, "beta must be >= 0");
  ObjectiveValue v;
  v.mi = generator_mi(q.group_tables());
  const KlEstimate kl = model_kl(p, q, config);
  v.kl = kl.value;
  v.kl_stderr = kl.std_error;
  v.kl_exact = kl.exact;
  v.beta = beta;
  v.total = v.mi + beta * v.kl;
  return v;
}

}  // namespace udf
