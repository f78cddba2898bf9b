#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace pathfinder {

/// Primary key. Keys are dense: 0..card-1 in ingestion order.
using Key = std::uint32_t;

enum class AttributeKind { kNumeric, kCategorical };

std::string_view to_string(AttributeKind kind);

/// A single attribute cell: numeric (double) or categorical (string).
using AttributeValue = std::variant<double, std::string>;

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::kNumeric;

  bool operator==(const AttributeSpec&) const = default;
};

/// Ordered attribute columns with unique names.
class Schema {
 public:
  Schema() = default;
  /// Throws DataError on empty or duplicate names.
  explicit Schema(std::vector<AttributeSpec> attributes);

  std::size_t size() const { return attributes_.size(); }
  const AttributeSpec& at(std::size_t column) const { return attributes_.at(column); }
  const std::vector<AttributeSpec>& attributes() const { return attributes_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Like find() but throws DataError when the name is unknown.
  std::size_t require(std::string_view name) const;

  bool operator==(const Schema& other) const { return attributes_ == other.attributes_; }

 private:
  std::vector<AttributeSpec> attributes_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

enum class DistanceMetric { kSquaredEuclidean, kNegatedInnerProduct };

std::string_view to_string(DistanceMetric metric);
DistanceMetric parse_metric(std::string_view text);

/// Distance between equal-length vectors. Throws DataError on length mismatch.
float distance(std::span<const float> a, std::span<const float> b,
               DistanceMetric metric = DistanceMetric::kSquaredEuclidean);

/// Unchecked kernels used on hot paths.
float squared_l2(const float* a, const float* b, std::size_t dim);
float negated_inner_product(const float* a, const float* b, std::size_t dim);

/// A materialized row. Relation stores columns; tuple() builds one on demand.
struct Tuple {
  Key pk = 0;
  std::vector<AttributeValue> attrs;
  std::vector<float> vector;
};

/// Row-major float vectors of one dimensionality.
struct VectorSet {
  std::size_t dim = 0;
  std::vector<float> data;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

/// Attribute rows in source order, one AttributeValue per schema column.
struct AttributeTable {
  Schema schema;
  std::vector<std::vector<AttributeValue>> rows;
};

/// Immutable relation T(pk, a_1..a_k, vector). Attributes are stored column-wise;
/// categorical columns are dictionary-encoded with codes in first-occurrence order.
class Relation {
 public:
  const Schema& schema() const { return schema_; }
  std::size_t size() const { return size_; }
  std::size_t dim() const { return dim_; }
  DistanceMetric metric() const { return metric_; }

  std::span<const float> vector(Key pk) const { return {vectors_.data() + std::size_t{pk} * dim_, dim_}; }
  const std::vector<float>& raw_vectors() const { return vectors_; }

  double numeric(std::size_t column, Key pk) const { return columns_[column].numeric[pk]; }
  const std::string& category(std::size_t column, Key pk) const {
    const auto& col = columns_[column];
    return col.dictionary[col.codes[pk]];
  }
  std::uint32_t category_code(std::size_t column, Key pk) const { return columns_[column].codes[pk]; }
  /// Distinct categories of a categorical column, indexed by code.
  const std::vector<std::string>& dictionary(std::size_t column) const { return columns_[column].dictionary; }
  std::optional<std::uint32_t> code_of(std::size_t column, std::string_view category) const;
  std::span<const double> numeric_column(std::size_t column) const { return columns_[column].numeric; }
  std::span<const std::uint32_t> category_codes(std::size_t column) const { return columns_[column].codes; }

  AttributeValue value(std::size_t column, Key pk) const;
  Tuple tuple(Key pk) const;

  /// Distance from q to the stored vector of pk under the relation metric.
  float distance_to(std::span<const float> q, Key pk) const {
    return metric_ == DistanceMetric::kSquaredEuclidean ? squared_l2(q.data(), vectors_.data() + std::size_t{pk} * dim_, dim_)
                                                        : negated_inner_product(q.data(), vectors_.data() + std::size_t{pk} * dim_, dim_);
  }
  float distance_between(Key a, Key b) const { return distance_to(vector(a), b); }

 private:
  friend Relation ingest_relation(AttributeTable, VectorSet, DistanceMetric);

  struct Column {
    AttributeKind kind = AttributeKind::kNumeric;
    std::vector<double> numeric;
    std::vector<std::uint32_t> codes;
    std::vector<std::string> dictionary;
    std::unordered_map<std::string, std::uint32_t> code_by_name;
  };

  Schema schema_;
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  DistanceMetric metric_ = DistanceMetric::kSquaredEuclidean;
  std::vector<float> vectors_;
  std::vector<Column> columns_;
};

/// Builds a relation, assigning pks 0..n-1 in source order.
/// Throws DataError on empty input, row-count or dimensionality mismatch,
/// kind mismatch within a column, and non-finite vector components.
Relation ingest_relation(AttributeTable attrs, VectorSet vectors,
                         DistanceMetric metric = DistanceMetric::kSquaredEuclidean);

/// (pk, distance) pair ordered by distance, then pk.
struct Neighbor {
  Key pk = 0;
  float distance = 0.0f;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.pk < b.pk);
  }
  friend bool operator==(const Neighbor& a, const Neighbor& b) = default;
};

}  // namespace pathfinder
