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
#include <span>

#include "udf/generator.hpp"
#include "udf/matrix.hpp"

namespace udf {

// Reports additionally print MI scaled by 100 to sit on the same scale as
// published tables; all computation is in nats.
inline constexpr double kReportScale = 100.0;

// Mutual information (nats) of a joint distribution given as a matrix.
// Entries must be >= 0 and sum to 1 within 1e-9 (kNotNormalized otherwise).
// 0 log 0 := 0; the result is clamped at 0 from below.
double mutual_information(const Matrix& joint);

// Exact I(s; d_as) of the joint induced by p(s) and p(d_as | s).
double generator_mi(const GroupTables& tables);

// Sum p log(p / q) with q floored at 1e-12; kLengthMismatch on size mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// r(s, d_as) = log q(d_as) - log q(d_as | s). Its negated expectation under
// the generator is the generator's mutual information.
double reward(const GroupTables& tables, std::size_t s_state, std::size_t das_state);

// Exact E_q[-r] by enumeration of all (s, d_as) states.
double expected_negative_reward(const GroupTables& tables);

// Sum_s p(s) KL(q(d_as | s) || p_ref(d_as)); equals the true MI only when
// the mixture marginal q(d_as) equals p_ref(d_as).
double surrogate_mi(const GroupTables& q, std::span<const double> p_ref_das);

struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 when exact
  bool exact = true;
};

struct KlConfig {
  std::size_t n_samples = 100000;            // Monte-Carlo fallback size
  std::uint64_t seed = 0;
  std::uint64_t enumeration_limit = 1 << 20;  // full-joint states for exact KL
  Exec exec = Exec::kParallel;
};

class MixedGenerator;

// KL(p || q). Exact on the d_as block when q is a mixture over p; exact by
// full enumeration when the joint state space fits the limit; otherwise a
// Monte-Carlo estimate with standard error. Schemas/orders must match
// (kSchemaMismatch).
KlEstimate model_kl(const Generator& p, const Generator& q, const KlConfig& config = {});

struct ObjectiveValue {
  double mi = 0.0;
  double kl = 0.0;
  double beta = 0.0;
  double total = 0.0;  // mi + beta * kl
  double kl_stderr = 0.0;
  bool kl_exact = true;
};

ObjectiveValue objective(const Generator& p, const Generator& q, double beta, const KlConfig& config = {});

// Closed-form objective of the mixture q(d_as|s) = l_s p(d_as) + (1-l_s) p(d_as|s)
// for per-state weights l. Writes d total / d l_s into grad_lambda when it is
// non-empty. Also reports the surrogate MI through `surrogate` when non-null.
ObjectiveValue mixture_objective(const GroupTables& base, std::span<const double> lambda, double beta,
                                 std::span<double> grad_lambda = {}, double* surrogate = nullptr);

}  // namespace udf
