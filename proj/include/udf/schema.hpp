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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace udf {

// Protected features (s), advantaged features (d_as) and everything else (d_s).
enum class Role { kProtected, kAdvantaged, kRemaining };
enum class Kind { kCategorical, kContinuous };

std::string_view role_name(Role role);
std::string_view kind_name(Kind kind);

struct FeatureDef {
  std::string name;
  Role role = Role::kRemaining;
  Kind kind = Kind::kCategorical;
  std::vector<std::string> categories;  // categorical only
  int bins = 0;                         // continuous only

  int cardinality() const {
    return kind == Kind::kCategorical ? static_cast<int>(categories.size()) : bins;
  }
  bool operator==(const FeatureDef&) const = default;
};

// Validated, ordered feature list. Invariants: unique names, at least one
// protected and one advantaged feature, categorical cardinality >= 2 and
// bins >= 2. Violations throw Error(kInvalidSchema).
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureDef> features);

  std::size_t size() const { return features_.size(); }
  const FeatureDef& operator[](std::size_t k) const { return features_[k]; }
  const std::vector<FeatureDef>& features() const { return features_; }

  std::optional<int> find(std::string_view name) const;
  int index_of(std::string_view name) const;  // throws kUnknownColumn

  // Feature indices with the given role, in schema order.
  std::vector<int> members(Role role) const;
  std::vector<int> cardinalities() const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureDef> features_;
};

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& doc);
FeatureSchema load_schema(const std::string& path);

}  // namespace udf
