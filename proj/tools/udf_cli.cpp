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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "udf/benchmark.hpp"
#include "udf/dpo.hpp"
#include "udf/error.hpp"
#include "udf/fairness.hpp"
#include "udf/imputation.hpp"
#include "udf/mix.hpp"
#include "udf/model_io.hpp"
#include "udf/parallel.hpp"
#include "udf/recipes.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace udf;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_kv(const char* key, double value) { std::printf("%s=%.6f\n", key, value); }

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string data, schema, out;
  std::string backend = "auto";
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  FitConfig fit;
};

void cmd_fit(const FitArgs& a) {
  static const std::map<std::string, BackendChoice> kBackends{
      {"auto", BackendChoice::kAuto}, {"table", BackendChoice::kTable}, {"mlp", BackendChoice::kMlp}};
  FitConfig cfg = a.fit;
  cfg.backend = kBackends.at(a.backend);
  const auto schema = load_schema(a.schema);
  const auto data = load_csv(a.data, schema);
  const auto t0 = std::chrono::steady_clock::now();
  EncodedDataset train = data;
  EncodedDataset held;
  if (a.test_fraction > 0.0) {
    auto split = split_dataset(data, a.test_fraction, a.split_seed);
    train = std::move(split.train);
    held = std::move(split.test);
  }
  const auto model = ChainGenerator::fit(train, cfg);
  const double train_nll = model.mean_nll(train);
  json doc = chain_to_json(model);
  doc["training"] = {{"method", "base"},
                     {"backend", a.backend},
                     {"epochs", cfg.epochs},
                     {"hidden", cfg.hidden},
                     {"seed", cfg.seed},
                     {"train_rows", train.rows()},
                     {"test_fraction", a.test_fraction},
                     {"split_seed", a.split_seed},
                     {"train_nll", train_nll}};
  if (!held.empty()) doc["training"]["heldout_nll"] = model.mean_nll(held);
  save_json(doc, a.out);
  std::printf("backend=%s\n", model.backend_summary().c_str());
  print_kv("train_nll", train_nll);
  if (!held.empty()) print_kv("heldout_nll", doc["training"]["heldout_nll"].get<double>());
  print_kv("generator_mi", generator_mi(model.group_tables()));
  print_kv("seconds", seconds_since(t0));
}

// ---- debias ----------------------------------------------------------------

struct DebiasArgs {
  std::string model, out, method, checkpoint_dir;
  double beta = 0.1;
  MixConfig mix;
  DpoConfig dpo;
};

std::string default_checkpoint_dir(const std::string& out) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + "_checkpoints")).string();
}

void print_objective(const ObjectiveValue& v, double mi_before) {
  print_kv("mi_before", mi_before);
  print_kv("mi_after", v.mi);
  print_kv("kl", v.kl);
  print_kv("beta", v.beta);
  print_kv("objective", v.total);
}

void cmd_debias(const DebiasArgs& a) {
  const auto loaded = load_model(a.model);
  if (loaded.is_mix()) throw Error(ErrorCode::kInvalidConfig, "debias needs a base chain model, got a mix artifact");
  const auto& base = *loaded.chain;
  const double mi_before = generator_mi(base.group_tables());
  const auto t0 = std::chrono::steady_clock::now();

  if (a.method == "mix") {
    if (!(a.beta >= 0.0 && a.beta <= a.mix.beta_max)) {
      throw Error(ErrorCode::kBetaOutOfRange, "mix beta must lie in [0, " + std::to_string(a.mix.beta_max) + "]");
    }
    const auto tr = train_lambda(base, a.mix);
    const double secs = seconds_since(t0);
    const auto net = std::make_shared<const LambdaNet>(tr.net);
    const MixedGenerator q(loaded.chain, net, a.beta);
    const auto v = objective(base, q, a.beta);
    json training = {{"method", "mix"},
                     {"iterations", a.mix.iterations},
                     {"n_beta", a.mix.n_beta},
                     {"batch_betas", a.mix.batch_betas},
                     {"lr", a.mix.lr},
                     {"seed", a.mix.seed},
                     {"initial_objective", tr.initial_objective},
                     {"final_objective", tr.final_objective},
                     {"history", tr.history}};
    save_json(mix_to_json(base, tr.net, training), a.out);
    print_objective(v, mi_before);
    print_kv("averaged_objective_before", tr.initial_objective);
    print_kv("averaged_objective_after", tr.final_objective);
    print_kv("train_seconds", secs);
    return;
  }

  DpoConfig cfg = a.dpo;
  cfg.beta = a.beta;
  const std::string dir = a.checkpoint_dir.empty() ? default_checkpoint_dir(a.out) : a.checkpoint_dir;
  fs::create_directories(dir);
  json epochs = json::array();
  const auto result = run_udf_dpo(base, cfg, [&](const DpoEpochStats& st, const ChainGenerator& q) {
    json e = {{"epoch", st.epoch}, {"mi", st.mi},   {"neg_reward", st.neg_reward}, {"mc_neg_reward", st.mc_neg_reward},
              {"mc_stderr", st.mc_stderr}, {"pairs", st.pairs}, {"loss", st.loss}};
    epochs.push_back(e);
    json doc = chain_to_json(q);
    doc["training"] = {{"method", "dpo"}, {"beta", cfg.beta}, {"epoch", st.epoch}};
    save_json(doc, (fs::path(dir) / ("epoch_" + std::to_string(st.epoch) + ".json")).string());
    std::printf("epoch=%d mi=%.6f neg_reward=%.6f mc_neg_reward=%.6f+-%.6f pairs=%zu loss=%.6f\n", st.epoch, st.mi,
                st.neg_reward, st.mc_neg_reward, st.mc_stderr, st.pairs, st.loss);
  });
  const double secs = seconds_since(t0);
  json doc = chain_to_json(result.model);
  doc["training"] = {{"method", "dpo"},
                     {"beta", cfg.beta},
                     {"epochs", cfg.epochs},
                     {"samples_per_epoch", cfg.samples_per_epoch},
                     {"delta", cfg.delta},
                     {"lr", cfg.lr},
                     {"seed", cfg.seed},
                     {"update_remaining", cfg.update_remaining},
                     {"history", epochs}};
  save_json(doc, a.out);
  print_objective(objective(base, result.model, cfg.beta), mi_before);
  print_kv("train_seconds", secs);
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string model, out;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double beta = 0.1;
};

void cmd_generate(const GenerateArgs& a) {
  const auto loaded = load_model(a.model);
  const auto gen = loaded.generator(a.beta);
  write_csv(gen->sample(a.n, a.seed), a.out);
}

// ---- impute ----------------------------------------------------------------

struct ImputeArgs {
  std::string model, in, out, mask_in, mask_out;
  double missing_prob = 0.4;
  double beta = 0.1;
  ImputeConfig cfg;
};

MaskedDataset mask_from_file(const EncodedDataset& data, const std::string& path) {
  const json doc = load_json(path);
  const auto& rows = doc.at("missing");
  if (!rows.is_array() || rows.size() != data.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "mask has " + std::to_string(rows.size()) + " rows, data has " +
                                               std::to_string(data.rows()));
  }
  std::vector<std::uint8_t> mask(data.rows() * data.cols(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& c : rows[i]) {
      const auto k = c.get<std::size_t>();
      if (k >= data.cols()) throw Error(ErrorCode::kShapeMismatch, "mask column out of range");
      mask[i * data.cols() + k] = 1;
    }
  }
  return apply_mask(data, std::move(mask), doc.value("missing_prob", 0.0));
}

void cmd_impute(const ImputeArgs& a) {
  const auto loaded = load_model(a.model);
  const auto gen = loaded.generator(a.beta);
  const auto truth = load_csv(a.in, gen->schema(), gen->encoding());
  const auto masked = a.mask_in.empty() ? mask_mcar(truth, a.missing_prob, a.cfg.seed) : mask_from_file(truth, a.mask_in);
  ImputeStats stats;
  const auto imputed = impute(*gen, masked, a.cfg, &stats);
  write_csv(imputed, a.out);
  save_json(mask_to_json(masked, a.cfg.seed), a.mask_out.empty() ? a.out + ".mask.json" : a.mask_out);
  const auto score = score_imputation(imputed, truth, masked);
  std::printf("missing_cells=%zu exact_rows=%zu gibbs_rows=%zu\n", masked.missing_count(), stats.exact_rows,
              stats.gibbs_rows);
  print_kv("accuracy", score.accuracy);
  print_kv("rmse", score.rmse);
  print_kv("mi_x100", score.mi * 100.0);
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string data, tasks, out, csv;
  std::vector<std::string> generators;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  bool include_real = false;
  bool no_timings = false;
  BenchmarkConfig bench;
};

// NAME=PATH or NAME=PATH@BETA
struct GenSpec {
  std::string name, path;
  double beta = 0.1;
  bool has_beta = false;
};

GenSpec parse_gen_arg(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kInvalidConfig, "--gen expects NAME=PATH[@BETA]: " + s);
  GenSpec g;
  g.name = s.substr(0, eq);
  g.path = s.substr(eq + 1);
  if (const auto at = g.path.rfind('@'); at != std::string::npos) {
    try {
      g.beta = std::stod(g.path.substr(at + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "bad beta in --gen " + s);
    }
    g.has_beta = true;
    g.path.resize(at);
  }
  return g;
}

void cmd_evaluate(const EvaluateArgs& a) {
  std::vector<LoadedModel> models;
  std::vector<std::unique_ptr<Generator>> gens;
  std::vector<BenchmarkGenerator> entries;
  if (a.include_real) entries.push_back({"real", nullptr, "real", 0.0, 0.0});
  for (const auto& s : a.generators) {
    const auto gen_arg = parse_gen_arg(s);
    models.push_back(load_model(gen_arg.path));
    const auto& m = models.back();
    gens.push_back(m.generator(gen_arg.beta));
    std::string method = m.training.value("method", m.is_mix() ? std::string("mix") : std::string("base"));
    double beta = 0.0;
    if (m.is_mix()) {
      beta = gen_arg.beta;
    } else if (method == "dpo") {
      beta = m.training.value("beta", 0.0);
    }
    entries.push_back({gen_arg.name, gens.back().get(), method, beta, 0.0});
  }
  if (entries.empty()) throw Error(ErrorCode::kInvalidConfig, "evaluate needs at least one --gen or --include-real");
  if (gens.empty()) throw Error(ErrorCode::kInvalidConfig, "evaluate needs a model to fix the encoding");
  const auto& ref = *gens.front();
  const auto real = load_csv(a.data, ref.schema(), ref.encoding());
  for (const auto& g : gens) {
    if (!(g->encoding() == ref.encoding())) {
      throw Error(ErrorCode::kSchemaMismatch, "all generators must share one encoding (fit on the same data)");
    }
  }
  const auto tasks = load_tasks(a.tasks, ref.schema(), ref.encoding());
  BenchmarkConfig cfg = a.bench;
  cfg.seeds = a.seeds;
  const auto report = run_benchmark(real, entries, tasks, cfg);
  save_json(report_to_json(report, !a.no_timings), a.out);
  if (!a.csv.empty()) write_text(report_to_csv(report, !a.no_timings), a.csv);
  std::printf("run_id=%s cells=%zu\n", report.run_id.c_str(), report.cells.size());
  for (const auto& s : report.summary) {
    const bool scaled = s.metric == "mi" || s.metric == "data_mi";
    const double k = scaled ? 100.0 : 1.0;
    std::printf("%-12s %-16s %-8s %8.3f +- %.3f%s\n", s.generator.c_str(), s.task.c_str(), s.metric.c_str(),
                s.mean * k, s.std * k, scaled ? " (x100)" : "");
  }
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::size_t n = 5000;
  std::uint64_t seed = 0;
  double agreement = 0.8;
};

std::string raw_to_csv(const RawTable& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out += ',';
      out += cells[c];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

void cmd_synth(const SynthArgs& a) {
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_text(raw_to_csv(planted_table(a.n, a.seed, a.agreement)), (dir / "planted.csv").string());
  save_json(schema_to_json(planted_schema()), (dir / "schema.json").string());
  const json tasks = {
      {"tasks",
       {{{"name", "group-outcome"}, {"target", "outcome"}, {"positive", {"yes"}}, {"protected", {"group"}}},
        {{"name", "group-level"}, {"target", "level"}, {"positive", {"mid", "high"}}, {"protected", {"group"}}}}}};
  save_json(tasks, (dir / "tasks.json").string());
  std::printf("wrote %zu rows to %s\n", a.n, (dir / "planted.csv").string().c_str());
}

int exit_code_for(const Error& e) { return is_input_error(e.code()) ? 2 : 3; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal debiasing of tabular data generators"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (falls back to UDF_THREADS)");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit the base autoregressive generator");
  c_fit->add_option("--data", fit.data, "Training CSV")->required();
  c_fit->add_option("--schema", fit.schema, "Schema JSON")->required();
  c_fit->add_option("--out", fit.out, "Model JSON to write")->required();
  c_fit->add_option("--backend", fit.backend)->check(CLI::IsMember({"auto", "table", "mlp"}));
  c_fit->add_option("--epochs", fit.fit.epochs)->check(CLI::PositiveNumber);
  c_fit->add_option("--hidden", fit.fit.hidden)->check(CLI::PositiveNumber);
  c_fit->add_option("--lr", fit.fit.lr)->check(CLI::PositiveNumber);
  c_fit->add_option("--alpha", fit.fit.alpha)->check(CLI::NonNegativeNumber);
  c_fit->add_option("--table-limit", fit.fit.table_limit);
  c_fit->add_option("--seed", fit.fit.seed);
  c_fit->add_option("--test-fraction", fit.test_fraction, "Held-out share for the reported NLL")
      ->check(CLI::Range(0.0, 0.9));
  c_fit->add_option("--split-seed", fit.split_seed);

  DebiasArgs deb;
  auto* c_deb = app.add_subcommand("debias", "Debias a base model with UDF-MIX or UDF-DPO");
  c_deb->add_option("--model", deb.model, "Base model JSON")->required()->check(CLI::ExistingFile);
  c_deb->add_option("--method", deb.method)->required()->check(CLI::IsMember({"mix", "dpo"}));
  c_deb->add_option("--out", deb.out, "Artifact to write")->required();
  c_deb->add_option("--beta", deb.beta, "Trade-off weight; mix: reported beta in [0, 50]");
  c_deb->add_option("--seed", deb.mix.seed);
  c_deb->add_option("--iterations", deb.mix.iterations, "mix: Adam steps")->check(CLI::PositiveNumber);
  c_deb->add_option("--n-beta", deb.mix.n_beta, "mix: size of the beta set")->check(CLI::PositiveNumber);
  c_deb->add_option("--mix-lr", deb.mix.lr)->check(CLI::PositiveNumber);
  c_deb->add_option("--epochs", deb.dpo.epochs, "dpo: epochs")->check(CLI::NonNegativeNumber);
  c_deb->add_option("--samples-per-epoch", deb.dpo.samples_per_epoch)->check(CLI::Range(2, 1 << 24));
  c_deb->add_option("--delta", deb.dpo.delta)->check(CLI::PositiveNumber);
  c_deb->add_option("--lr", deb.dpo.lr, "dpo: Adam step size")->check(CLI::PositiveNumber);
  c_deb->add_flag("--update-remaining", deb.dpo.update_remaining, "dpo: also train the remaining-feature conditionals");
  c_deb->add_option("--checkpoint-dir", deb.checkpoint_dir, "dpo: where epoch_<t>.json go");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Sample a synthetic table");
  c_gen->add_option("--model", gen.model)->required()->check(CLI::ExistingFile);
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--n", gen.n)->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--beta", gen.beta, "mix artifacts: beta for lambda(s, beta)");

  ImputeArgs imp;
  auto* c_imp = app.add_subcommand("impute", "Mask a complete table (MCAR) and impute it");
  c_imp->add_option("--model", imp.model)->required()->check(CLI::ExistingFile);
  c_imp->add_option("--in", imp.in, "Complete CSV")->required()->check(CLI::ExistingFile);
  c_imp->add_option("--out", imp.out)->required();
  c_imp->add_option("--missing-prob", imp.missing_prob);
  c_imp->add_option("--seed", imp.cfg.seed);
  c_imp->add_option("--beta", imp.beta);
  c_imp->add_option("--mask", imp.mask_in, "Reuse a saved mask JSON")->check(CLI::ExistingFile);
  c_imp->add_option("--mask-out", imp.mask_out, "Defaults to <out>.mask.json");
  c_imp->add_option("--enumeration-limit", imp.cfg.enumeration_limit);
  c_imp->add_option("--gibbs-sweeps", imp.cfg.gibbs_sweeps)->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Downstream fairness/utility benchmark");
  c_ev->add_option("--data", ev.data, "Real CSV (split 80/20 internally)")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--tasks", ev.tasks)->required()->check(CLI::ExistingFile);
  c_ev->add_option("--gen", ev.generators, "NAME=MODEL.json[@BETA]");
  c_ev->add_option("--seeds", ev.seeds)->delimiter(',');
  c_ev->add_option("--out", ev.out, "Report JSON")->required();
  c_ev->add_option("--report-csv", ev.csv);
  c_ev->add_flag("--include-real", ev.include_real, "Also train on the real train split");
  c_ev->add_flag("--exclude-protected", ev.bench.downstream.exclude_protected);
  c_ev->add_flag("--no-timings", ev.no_timings, "Omit wall-clock fields");
  c_ev->add_option("--test-fraction", ev.bench.test_fraction)->check(CLI::Range(0.05, 0.9));
  c_ev->add_option("--split-seed", ev.bench.split_seed);

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Write the planted-bias synthetic recipe");
  c_syn->add_option("--out-dir", syn.out_dir)->required();
  c_syn->add_option("--n", syn.n)->check(CLI::PositiveNumber);
  c_syn->add_option("--seed", syn.seed);
  c_syn->add_option("--agreement", syn.agreement)->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_thread_count(resolve_thread_count(threads));
    deb.dpo.seed = deb.mix.seed;
    if (c_fit->parsed()) cmd_fit(fit);
    if (c_deb->parsed()) cmd_debias(deb);
    if (c_gen->parsed()) cmd_generate(gen);
    if (c_imp->parsed()) cmd_impute(imp);
    if (c_ev->parsed()) cmd_evaluate(ev);
    if (c_syn->parsed()) cmd_synth(syn);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: malformed JSON input: %s\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
