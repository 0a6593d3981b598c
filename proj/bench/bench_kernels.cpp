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

// Serial reference vs OpenMP path for the kernels that take an Exec policy.
// Arg 0 runs Exec::kSerial, arg 1 Exec::kParallel. Thread count follows
// UDF_THREADS / OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "udf/dpo.hpp"
#include "udf/fairness.hpp"
#include "udf/imputation.hpp"
#include "udf/mix.hpp"
#include "udf/recipes.hpp"

using namespace udf;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::kParallel : Exec::kSerial; }

const EncodedDataset& planted_data() {
  static const EncodedDataset d = encode_table(planted_table(20000, 1), planted_schema());
  return d;
}

const ChainGenerator& mlp_model() {
  static const ChainGenerator g = [] {
    FitConfig fc;
    fc.backend = BackendChoice::kMlp;
    fc.epochs = 3;
    fc.hidden = 32;
    return ChainGenerator::fit(planted_data(), fc);
  }();
  return g;
}

void BM_Sample(benchmark::State& st) {
  const auto& g = mlp_model();
  for (auto _ : st) benchmark::DoNotOptimize(g.sample(20000, 3, exec_of(st)));
}
BENCHMARK(BM_Sample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MeanNll(benchmark::State& st) {
  const auto& g = mlp_model();
  for (auto _ : st) benchmark::DoNotOptimize(g.mean_nll(planted_data(), exec_of(st)));
}
BENCHMARK(BM_MeanNll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MonteCarloKl(benchmark::State& st) {
  const auto& p = mlp_model();
  FitConfig fc;
  fc.backend = BackendChoice::kMlp;
  fc.epochs = 1;
  fc.hidden = 32;
  fc.seed = 9;
  static const ChainGenerator q = ChainGenerator::fit(planted_data(), fc);
  KlConfig kc;
  kc.enumeration_limit = 1;
  kc.n_samples = 20000;
  kc.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(model_kl(p, q, kc));
}
BENCHMARK(BM_MonteCarloKl)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Impute(benchmark::State& st) {
  std::vector<std::size_t> idx(5000);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto m = mask_mcar(planted_data().subset(idx), 0.4, 1);
  ImputeConfig ic;
  ic.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(impute(mlp_model(), m, ic));
}
BENCHMARK(BM_Impute)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LambdaObjective(benchmark::State& st) {
  Rng rng(5);
  const auto base = random_table_model(random_schema(rng, 4), rng, 0.5);
  const auto bt = base.group_tables();
  LambdaNet net(bt.s_states(), 32, kDefaultBetaMax, 1);
  std::vector<double> betas(1000);
  for (double& b : betas) b = kDefaultBetaMax * rng.uniform();
  std::vector<double> grad(net.params().size());
  for (auto _ : st) benchmark::DoNotOptimize(averaged_lambda_objective(bt, net, betas, grad, exec_of(st)));
}
BENCHMARK(BM_LambdaObjective)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DpoLoss(benchmark::State& st) {
  const auto& ref = mlp_model();
  const auto batch = ref.sample(4096, 2);
  std::vector<double> lp(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) lp[i] = ref.log_prob(batch.row(i));
  Rng rng(3);
  std::vector<double> r(batch.rows());
  for (double& v : r) v = -rng.uniform();
  const auto pairs = build_pairs(r, 4096, 0.1, 4);
  GeneratorGrad grad;
  for (auto _ : st) benchmark::DoNotOptimize(dpo_loss(ref, lp, batch, pairs, 0.1, &grad, exec_of(st)));
}
BENCHMARK(BM_DpoLoss)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
