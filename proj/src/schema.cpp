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

#include "udf/schema.hpp"

#include <fstream>
#include <set>

#include "udf/error.hpp"

namespace udf {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kProtected: return "protected";
    case Role::kAdvantaged: return "advantaged";
    case Role::kRemaining: return "remaining";
  }
  return "remaining";
}

std::string_view kind_name(Kind kind) {
  return kind == Kind::kCategorical ? "categorical" : "continuous";
}

FeatureSchema::FeatureSchema(std::vector<FeatureDef> features) : features_(std::move(features)) {
  std::set<std::string> names;
  bool has_protected = false;
  bool has_advantaged = false;
  for (const auto& f : features_) {
    if (f.name.empty()) throw Error(ErrorCode::kInvalidSchema, "feature with empty name");
    if (!names.insert(f.name).second) {
      throw Error(ErrorCode::kInvalidSchema, "duplicate feature name '" + f.name + "'");
    }
    if (f.kind == Kind::kCategorical) {
      if (f.categories.size() < 2) {
        throw Error(ErrorCode::kInvalidSchema, "categorical feature '" + f.name + "' needs >= 2 categories");
      }
      std::set<std::string> cats(f.categories.begin(), f.categories.end());
      if (cats.size() != f.categories.size()) {
        throw Error(ErrorCode::kInvalidSchema, "duplicate category in '" + f.name + "'");
      }
    } else if (f.bins < 2) {
      throw Error(ErrorCode::kInvalidSchema, "continuous feature '" + f.name + "' needs bins >= 2");
    }
    has_protected |= f.role == Role::kProtected;
    has_advantaged |= f.role == Role::kAdvantaged;
  }
  if (!has_protected) throw Error(ErrorCode::kInvalidSchema, "schema declares no protected feature");
  if (!has_advantaged) throw Error(ErrorCode::kInvalidSchema, "schema declares no advantaged feature");
}

std::optional<int> FeatureSchema::find(std::string_view name) const {
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (features_[k].name == name) return static_cast<int>(k);
  }
  return std::nullopt;
}

int FeatureSchema::index_of(std::string_view name) const {
  if (auto k = find(name)) return *k;
  throw Error(ErrorCode::kUnknownColumn, "no feature named '" + std::string(name) + "'");
}

std::vector<int> FeatureSchema::members(Role role) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (features_[k].role == role) out.push_back(static_cast<int>(k));
  }
  return out;
}

std::vector<int> FeatureSchema::cardinalities() const {
  std::vector<int> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.cardinality());
  return out;
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features()) {
    nlohmann::json j;
    j["name"] = f.name;
    j["role"] = role_name(f.role);
    j["kind"] = kind_name(f.kind);
    if (f.kind == Kind::kCategorical) {
      j["categories"] = f.categories;
    } else {
      j["bins"] = f.bins;
    }
    features.push_back(std::move(j));
  }
  return nlohmann::json{{"features", std::move(features)}};
}

namespace {

Role parse_role(const std::string& s) {
  if (s == "protected") return Role::kProtected;
  if (s == "advantaged") return Role::kAdvantaged;
  if (s == "remaining") return Role::kRemaining;
  throw Error(ErrorCode::kInvalidSchema, "unknown role '" + s + "'");
}

Kind parse_kind(const std::string& s) {
  if (s == "categorical") return Kind::kCategorical;
  if (s == "continuous") return Kind::kContinuous;
  throw Error(ErrorCode::kInvalidSchema, "unknown kind '" + s + "'");
}

}  // namespace

FeatureSchema schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorCode::kInvalidSchema, "expected an object with a 'features' array");
  }
  std::vector<FeatureDef> features;
  try {
    for (const auto& j : doc["features"]) {
      FeatureDef f;
      f.name = j.at("name").get<std::string>();
      f.role = parse_role(j.at("role").get<std::string>());
      f.kind = parse_kind(j.at("kind").get<std::string>());
      if (f.kind == Kind::kCategorical) {
        f.categories = j.at("categories").get<std::vector<std::string>>();
      } else {
        f.bins = j.value("bins", 10);
      }
      features.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSchema, e.what());
  }
  return FeatureSchema(std::move(features));
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open schema file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSchema, path + ": " + e.what());
  }
  return schema_from_json(doc);
}

}  // namespace udf
