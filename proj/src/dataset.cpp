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

#include "udf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "udf/error.hpp"
#include "udf/rng.hpp"

namespace udf {

int BinEncoding::bin_of(double value) const {
  // Number of edges strictly below the value; ties go to the lower bin.
  return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
}

BinEncoding fit_bins(std::span<const double> values, int bins, const std::string& feature_name) {
  const std::size_t n = values.size();
  if (n < static_cast<std::size_t>(bins)) {
    throw Error(ErrorCode::kDegenerateBins,
                "feature '" + feature_name + "' has fewer values than bins");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  BinEncoding enc;
  for (int j = 1; j < bins; ++j) {
    const std::size_t k = static_cast<std::size_t>(j) * n / static_cast<std::size_t>(bins);
    const double lo = sorted[k - 1];
    const double hi = sorted[k];
    const double edge = lo == hi ? lo : lo + (hi - lo) / 2.0;
    if (!enc.edges.empty() && !(edge > enc.edges.back())) {
      throw Error(ErrorCode::kDegenerateBins,
                  "feature '" + feature_name + "': tied values collapse bin edges; use fewer bins");
    }
    enc.edges.push_back(edge);
  }
  std::vector<double> sums(bins, 0.0);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : sorted) {
    const int b = enc.bin_of(v);
    sums[b] += v;
    ++counts[b];
  }
  enc.midpoints.resize(bins);
  for (int b = 0; b < bins; ++b) {
    if (counts[b] == 0) {
      throw Error(ErrorCode::kDegenerateBins, "feature '" + feature_name + "' has an empty bin");
    }
    enc.midpoints[b] = sums[b] / static_cast<double>(counts[b]);
  }
  return enc;
}

RawTable parse_csv(const std::string& text) {
  RawTable table;
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line is not a record.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          throw Error(ErrorCode::kMalformedCsv, "line " + std::to_string(line) + ": stray quote");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kMalformedCsv, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  if (records.empty()) throw Error(ErrorCode::kEmptyFile, "no header row");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::kMalformedCsv,
                  "row " + std::to_string(r) + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

RawTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

EncodedDataset::EncodedDataset(FeatureSchema schema, Encoding encoding, std::vector<std::int32_t> cells)
    : schema_(std::move(schema)), encoding_(std::move(encoding)), cells_(std::move(cells)) {
  const std::size_t k = schema_.size();
  if (k == 0 || cells_.size() % k != 0) {
    throw Error(ErrorCode::kShapeMismatch, "cell count is not a multiple of the feature count");
  }
  if (encoding_.size() != k) encoding_.resize(k);
  rows_ = cells_.size() / k;
  const auto cards = schema_.cardinalities();
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const int card = cards[i % k];
    if (cells_[i] < 0 || cells_[i] >= card) {
      throw Error(ErrorCode::kShapeMismatch, "cell value out of range in row " + std::to_string(i / k) +
                                                 ", feature '" + schema_[i % k].name + "'");
    }
  }
}

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<std::int32_t> cells;
  cells.reserve(indices.size() * cols());
  for (std::size_t i : indices) {
    const auto r = row(i);
    cells.insert(cells.end(), r.begin(), r.end());
  }
  return EncodedDataset(schema_, encoding_, std::move(cells));
}

double EncodedDataset::numeric_value(std::size_t i, std::size_t k) const {
  const int v = at(i, k);
  if (schema_[k].kind == Kind::kContinuous && !encoding_[k].midpoints.empty()) {
    return encoding_[k].midpoints[v];
  }
  return static_cast<double>(v);
}

namespace {

std::vector<int> column_mapping(const RawTable& table, const FeatureSchema& schema) {
  if (table.header.empty()) throw Error(ErrorCode::kEmptyFile, "no header row");
  std::vector<int> col_of_feature(schema.size(), -1);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    auto k = schema.find(table.header[c]);
    if (!k) throw Error(ErrorCode::kUnknownColumn, "column '" + table.header[c] + "' is not in the schema");
    if (col_of_feature[*k] != -1) {
      throw Error(ErrorCode::kMalformedCsv, "column '" + table.header[c] + "' appears twice");
    }
    col_of_feature[*k] = static_cast<int>(c);
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (col_of_feature[k] == -1) {
      throw Error(ErrorCode::kUnknownColumn, "schema feature '" + schema[k].name + "' missing from CSV");
    }
  }
  if (table.rows.empty()) throw Error(ErrorCode::kEmptyFile, "CSV has a header but no rows");
  return col_of_feature;
}

double parse_number(const std::string& s, std::size_t row, const std::string& feature) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v)) {
    throw Error(ErrorCode::kNonNumericContinuous,
                "row " + std::to_string(row + 1) + ", feature '" + feature + "': '" + s + "'");
  }
  return v;
}

EncodedDataset encode_impl(const RawTable& table, const FeatureSchema& schema, const Encoding* fixed) {
  const auto col_of = column_mapping(table, schema);
  const std::size_t n = table.rows.size();
  const std::size_t k_count = schema.size();
  Encoding encoding(k_count);
  std::vector<std::int32_t> cells(n * k_count);

  for (std::size_t k = 0; k < k_count; ++k) {
    const FeatureDef& f = schema[k];
    const auto col = static_cast<std::size_t>(col_of[k]);
    for (std::size_t i = 0; i < n; ++i) {
      if (table.rows[i][col].empty()) {
        throw Error(ErrorCode::kMalformedCsv,
                    "row " + std::to_string(i + 1) + ": missing value for '" + f.name + "'");
      }
    }
    if (f.kind == Kind::kCategorical) {
      std::unordered_map<std::string, int> lookup;
      for (std::size_t c = 0; c < f.categories.size(); ++c) lookup.emplace(f.categories[c], static_cast<int>(c));
      for (std::size_t i = 0; i < n; ++i) {
        auto it = lookup.find(table.rows[i][col]);
        if (it == lookup.end()) {
          throw Error(ErrorCode::kUnknownCategory, "row " + std::to_string(i + 1) + ", feature '" + f.name +
                                                       "': '" + table.rows[i][col] + "'");
        }
        cells[i * k_count + k] = it->second;
      }
    } else {
      std::vector<double> values(n);
      for (std::size_t i = 0; i < n; ++i) values[i] = parse_number(table.rows[i][col], i, f.name);
      if (fixed) {
        encoding[k] = (*fixed)[k];
        if (static_cast<int>(encoding[k].midpoints.size()) != f.bins) {
          throw Error(ErrorCode::kSchemaMismatch, "encoding for '" + f.name + "' does not match bins");
        }
      } else {
        encoding[k] = fit_bins(values, f.bins, f.name);
      }
      for (std::size_t i = 0; i < n; ++i) cells[i * k_count + k] = encoding[k].bin_of(values[i]);
    }
  }
  return EncodedDataset(schema, std::move(encoding), std::move(cells));
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

EncodedDataset encode_table(const RawTable& table, const FeatureSchema& schema) {
  return encode_impl(table, schema, nullptr);
}

EncodedDataset encode_table(const RawTable& table, const FeatureSchema& schema, const Encoding& encoding) {
  if (encoding.size() != schema.size()) throw Error(ErrorCode::kSchemaMismatch, "encoding size mismatch");
  return encode_impl(table, schema, &encoding);
}

EncodedDataset load_csv(const std::string& path, const FeatureSchema& schema) {
  return encode_table(read_csv(path), schema);
}

EncodedDataset load_csv(const std::string& path, const FeatureSchema& schema, const Encoding& encoding) {
  return encode_table(read_csv(path), schema, encoding);
}

std::string to_csv(const EncodedDataset& data) {
  const auto& schema = data.schema();
  std::string out;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k) out.push_back(',');
    out += quote_if_needed(schema[k].name);
  }
  out.push_back('\n');
  char buf[64];
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t k = 0; k < schema.size(); ++k) {
      if (k) out.push_back(',');
      const int v = data.at(i, k);
      if (schema[k].kind == Kind::kCategorical) {
        out += quote_if_needed(schema[k].categories[v]);
      } else {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, data.numeric_value(i, k));
        out.append(buf, ptr);
      }
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const EncodedDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_csv(data);
}

Split split_dataset(const EncodedDataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "test fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(data.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {kStreamSplit}));
  rng.shuffle(idx.begin(), idx.end());
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.rows())));
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  return {data.subset(train), data.subset(test)};
}

GroupView::GroupView(const FeatureSchema& schema, std::vector<int> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  for (int m : members_) {
    if (m < 0 || static_cast<std::size_t>(m) >= schema.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "group member out of range");
    }
    cards_.push_back(schema[m].cardinality());
    const auto c = static_cast<std::uint64_t>(cards_.back());
    joint_ = joint_ > std::numeric_limits<std::uint64_t>::max() / c ? std::numeric_limits<std::uint64_t>::max()
                                                                    : joint_ * c;
  }
}

GroupView GroupView::of_role(const FeatureSchema& schema, Role role) {
  return GroupView(schema, schema.members(role));
}

std::size_t GroupView::index(std::span<const std::int32_t> record) const {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < members_.size(); ++j) {
    idx = idx * static_cast<std::size_t>(cards_[j]) + static_cast<std::size_t>(record[members_[j]]);
  }
  return idx;
}

std::vector<int> GroupView::decode(std::size_t index) const {
  std::vector<int> values(members_.size());
  for (std::size_t j = members_.size(); j-- > 0;) {
    values[j] = static_cast<int>(index % static_cast<std::size_t>(cards_[j]));
    index /= static_cast<std::size_t>(cards_[j]);
  }
  return values;
}

void GroupView::decode_into(std::size_t index, std::span<std::int32_t> record) const {
  for (std::size_t j = members_.size(); j-- > 0;) {
    record[members_[j]] = static_cast<std::int32_t>(index % static_cast<std::size_t>(cards_[j]));
    index /= static_cast<std::size_t>(cards_[j]);
  }
}

}  // namespace udf
