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

#include "udf/model_io.hpp"

#include <fstream>
#include <sstream>

#include "udf/error.hpp"

namespace udf {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kBadModelFile, what); }

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) bad(std::string("missing field '") + key + "'");
  return doc.at(key);
}

template <class T>
T get(const json& doc, const char* key) {
  try {
    return field(doc, key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

void check_header(const json& doc, const char* format) {
  const auto f = get<std::string>(doc, "format");
  if (f != format) bad("expected format '" + std::string(format) + "', got '" + f + "'");
  const int v = get<int>(doc, "version");
  if (v != kModelFormatVersion) bad("unsupported model version " + std::to_string(v));
}

}  // namespace

json encoding_to_json(const Encoding& encoding) {
  json out = json::array();
  for (const auto& b : encoding) {
    if (b.edges.empty() && b.midpoints.empty()) {
      out.push_back(nullptr);
    } else {
      out.push_back({{"edges", b.edges}, {"midpoints", b.midpoints}});
    }
  }
  return out;
}

Encoding encoding_from_json(const json& doc, const FeatureSchema& schema) {
  if (!doc.is_array() || doc.size() != schema.size()) bad("encoding needs one entry per feature");
  Encoding enc(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (doc[k].is_null()) {
      if (schema[k].kind == Kind::kContinuous) bad("continuous feature '" + schema[k].name + "' has no bins");
      continue;
    }
    enc[k].edges = get<std::vector<double>>(doc[k], "edges");
    enc[k].midpoints = get<std::vector<double>>(doc[k], "midpoints");
    if (schema[k].kind != Kind::kContinuous || enc[k].midpoints.size() != static_cast<std::size_t>(schema[k].bins) ||
        enc[k].edges.size() + 1 != enc[k].midpoints.size()) {
      bad("bins of feature '" + schema[k].name + "' do not match the schema");
    }
  }
  return enc;
}

json chain_to_json(const ChainGenerator& model) {
  json conds = json::array();
  for (const auto& c : model.conditionals()) {
    const auto p = c.params();
    conds.push_back({{"backend", c.backend() == Backend::kTable ? "table" : "mlp"},
                     {"cardinality", c.cardinality()},
                     {"parents", c.parents()},
                     {"parent_cards", c.parent_cards()},
                     {"hidden", c.hidden()},
                     {"params", std::vector<double>(p.begin(), p.end())}});
  }
  return {{"format", "udf-chain"},
          {"version", kModelFormatVersion},
          {"schema", schema_to_json(model.schema())},
          {"encoding", encoding_to_json(model.encoding())},
          {"order", model.order()},
          {"backend", model.backend_summary()},
          {"conditionals", conds}};
}

ChainGenerator chain_from_json(const json& doc) {
  check_header(doc, "udf-chain");
  FeatureSchema schema;
  try {
    schema = schema_from_json(field(doc, "schema"));
  } catch (const Error& e) {
    bad(std::string("embedded schema: ") + e.what());
  }
  Encoding enc = encoding_from_json(field(doc, "encoding"), schema);
  if (get<std::vector<int>>(doc, "order") != ChainGenerator::decomposed_order(schema)) {
    bad("stored generation order does not match the schema");
  }
  const json& conds = field(doc, "conditionals");
  if (!conds.is_array() || conds.size() != schema.size()) bad("one conditional per feature required");
  std::vector<Conditional> cs;
  cs.reserve(conds.size());
  for (const auto& c : conds) {
    const auto backend = get<std::string>(c, "backend");
    if (backend != "table" && backend != "mlp") bad("unknown backend '" + backend + "'");
    try {
      cs.push_back(Conditional::restore(backend == "table" ? Backend::kTable : Backend::kMlp,
                                        get<int>(c, "cardinality"), get<std::vector<int>>(c, "parents"),
                                        get<std::vector<int>>(c, "parent_cards"), get<int>(c, "hidden"),
                                        get<std::vector<double>>(c, "params")));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kBadModelFile) throw;
      bad(e.what());
    }
  }
  try {
    return ChainGenerator(std::move(schema), std::move(enc), std::move(cs));
  } catch (const Error& e) {
    bad(e.what());
  }
}

json lambda_to_json(const LambdaNet& net) {
  const auto p = net.params();
  return {{"s_states", net.s_states()},
          {"hidden", net.hidden()},
          {"beta_max", net.beta_max()},
          {"params", std::vector<double>(p.begin(), p.end())}};
}

LambdaNet lambda_from_json(const json& doc) {
  return LambdaNet::restore(get<std::size_t>(doc, "s_states"), get<int>(doc, "hidden"), get<double>(doc, "beta_max"),
                            get<std::vector<double>>(doc, "params"));
}

json mix_to_json(const ChainGenerator& base, const LambdaNet& net, const json& training) {
  return {{"format", "udf-mix"},
          {"version", kModelFormatVersion},
          {"base", chain_to_json(base)},
          {"lambda_net", lambda_to_json(net)},
          {"training", training}};
}

std::unique_ptr<Generator> LoadedModel::generator(double beta) const {
  if (!net) return std::make_unique<ChainGenerator>(*chain);
  return std::make_unique<MixedGenerator>(chain, net, beta);
}

LoadedModel model_from_json(const json& doc) {
  const auto format = get<std::string>(doc, "format");
  LoadedModel m;
  if (format == "udf-chain") {
    m.chain = std::make_shared<const ChainGenerator>(chain_from_json(doc));
    if (doc.contains("training")) m.training = doc.at("training");
    return m;
  }
  check_header(doc, "udf-mix");
  m.chain = std::make_shared<const ChainGenerator>(chain_from_json(field(doc, "base")));
  m.net = std::make_shared<const LambdaNet>(lambda_from_json(field(doc, "lambda_net")));
  if (m.net->s_states() != m.chain->group_tables().s_states()) bad("lambda network and base disagree on s states");
  if (doc.contains("training")) m.training = doc.at("training");
  return m;
}

LoadedModel load_model(const std::string& path) { return model_from_json(load_json(path)); }

void save_json(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kBadModelFile, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace udf
