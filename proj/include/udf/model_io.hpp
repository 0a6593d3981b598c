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

#include <memory>
#include <string>

#include "json.hpp"

#include "udf/generator.hpp"
#include "udf/mix.hpp"

namespace udf {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON documents. Doubles are written in shortest round-trip form,
// so save -> load reproduces every parameter bit for bit.
//
//   {"format": "udf-chain", "version": 1, "schema": ..., "encoding": [...],
//    "order": [...], "backend": "mixed", "conditionals": [...]}
//   {"format": "udf-mix", "version": 1, "base": <udf-chain>, "lambda_net": {...},
//    "training": {...}}
nlohmann::json encoding_to_json(const Encoding& encoding);
Encoding encoding_from_json(const nlohmann::json& doc, const FeatureSchema& schema);

nlohmann::json chain_to_json(const ChainGenerator& model);
ChainGenerator chain_from_json(const nlohmann::json& doc);

nlohmann::json lambda_to_json(const LambdaNet& net);
LambdaNet lambda_from_json(const nlohmann::json& doc);

nlohmann::json mix_to_json(const ChainGenerator& base, const LambdaNet& net,
                           const nlohmann::json& training = nlohmann::json::object());

// Either artifact kind. `net` is null for a plain chain.
struct LoadedModel {
  std::shared_ptr<const ChainGenerator> chain;
  std::shared_ptr<const LambdaNet> net;
  nlohmann::json training;

  bool is_mix() const { return net != nullptr; }
  // The chain itself, or the mixture at `beta` for a mix artifact.
  std::unique_ptr<Generator> generator(double beta) const;
};

LoadedModel model_from_json(const nlohmann::json& doc);
LoadedModel load_model(const std::string& path);

// kIo on failure. Output ends with a newline; indentation is fixed so equal
// documents give identical bytes.
void save_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json load_json(const std::string& path);

}  // namespace udf
