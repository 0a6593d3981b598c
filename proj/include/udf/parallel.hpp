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
#include <exception>

namespace udf {

// Execution policy for the data-parallel kernels. `kSerial` runs the plain
// reference loop; `kParallel` distributes independent iterations over OpenMP
// threads. Both produce bit-identical results: iterations never share RNG
// state and reductions are done in a fixed order after the parallel region.
enum class Exec { kSerial, kParallel };

// Caps the number of OpenMP workers. n <= 0 keeps the current setting.
void set_thread_count(int n);
int thread_count();

// Resolves the worker count from an explicit flag, falling back to the
// UDF_THREADS environment variable; returns 0 when neither is set.
int resolve_thread_count(int flag_value);

// Runs fn(i) for i in [0, n) under the given policy. `grain` is the dynamic
// scheduling chunk; use 1 when iterations are few and uneven.
template <class Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn, int grain = 16) {
  if (exec == Exec::kSerial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  // Exceptions must not escape an OpenMP region; keep the first and rethrow.
  const auto count = static_cast<std::int64_t>(n);
  std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic, grain)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(udf_for_each_index_error)
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace udf
