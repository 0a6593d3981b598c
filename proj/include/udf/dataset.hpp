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
#include <string>
#include <vector>

#include "udf/schema.hpp"

namespace udf {

// Equal-frequency discretization of one continuous column. `edges` holds the
// bins-1 interior cut points (strictly increasing); a value equal to an edge
// falls in the lower bin. `midpoints[b]` is the mean training value in bin b
// and is what decoding emits.
struct BinEncoding {
  std::vector<double> edges;
  std::vector<double> midpoints;

  int bin_of(double value) const;
  bool operator==(const BinEncoding&) const = default;
};

// One entry per schema feature; empty for categorical features.
using Encoding = std::vector<BinEncoding>;

// Learns equal-frequency bins from raw values. Throws kDegenerateBins when
// ties make the cut points collapse.
BinEncoding fit_bins(std::span<const double> values, int bins, const std::string& feature_name);

// Header plus string cells, exactly as read from an RFC-4180 file.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_csv(const std::string& path);
RawTable parse_csv(const std::string& text);

// N x K matrix of category indices bound to a schema. Immutable once built.
class EncodedDataset {
 public:
  EncodedDataset() = default;
  EncodedDataset(FeatureSchema schema, Encoding encoding, std::vector<std::int32_t> cells);

  const FeatureSchema& schema() const { return schema_; }
  const Encoding& encoding() const { return encoding_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return schema_.size(); }
  bool empty() const { return rows_ == 0; }

  std::span<const std::int32_t> row(std::size_t i) const {
    return {cells_.data() + i * cols(), cols()};
  }
  std::int32_t at(std::size_t i, std::size_t k) const { return cells_[i * cols() + k]; }
  const std::vector<std::int32_t>& cells() const { return cells_; }

  // Rows selected by index, in the given order.
  EncodedDataset subset(std::span<const std::size_t> indices) const;

  // Decoded value of a cell: bin midpoint for continuous features,
  // category ordinal for categorical ones.
  double numeric_value(std::size_t i, std::size_t k) const;

 private:
  FeatureSchema schema_;
  Encoding encoding_;
  std::vector<std::int32_t> cells_;
  std::size_t rows_ = 0;
};

// Encodes a raw table, learning bins for continuous columns from it.
EncodedDataset encode_table(const RawTable& table, const FeatureSchema& schema);
// Encodes with a previously learned encoding (e.g. a model's training bins).
EncodedDataset encode_table(const RawTable& table, const FeatureSchema& schema, const Encoding& encoding);

EncodedDataset load_csv(const std::string& path, const FeatureSchema& schema);
EncodedDataset load_csv(const std::string& path, const FeatureSchema& schema, const Encoding& encoding);

// Writes category names / bin midpoints with a header row.
void write_csv(const EncodedDataset& data, const std::string& path);
std::string to_csv(const EncodedDataset& data);

// Deterministic train/test split by seeded shuffle.
struct Split {
  EncodedDataset train;
  EncodedDataset test;
};
Split split_dataset(const EncodedDataset& data, double test_fraction, std::uint64_t seed);

// A group of features addressed by a single mixed-radix joint index, most
// significant digit first, members in schema order.
class GroupView {
 public:
  GroupView() = default;
  GroupView(const FeatureSchema& schema, std::vector<int> members);
  static GroupView of_role(const FeatureSchema& schema, Role role);

  const std::vector<int>& members() const { return members_; }
  const std::vector<int>& cardinalities() const { return cards_; }
  // Saturates at UINT64_MAX instead of overflowing.
  std::uint64_t joint_cardinality() const { return joint_; }

  std::size_t index(std::span<const std::int32_t> record) const;
  std::vector<int> decode(std::size_t index) const;
  // Writes the decoded member values into their slots of a full record.
  void decode_into(std::size_t index, std::span<std::int32_t> record) const;

 private:
  std::vector<int> members_;
  std::vector<int> cards_;
  std::uint64_t joint_ = 1;
};

}  // namespace udf
