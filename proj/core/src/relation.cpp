#include "pathfinder/relation.hpp"

#include <cmath>

#include "pathfinder/error.hpp"

namespace pathfinder {

std::string_view to_string(AttributeKind kind) {
  return kind == AttributeKind::kNumeric ? "numeric" : "categorical";
}

Schema::Schema(std::vector<AttributeSpec> attributes) : attributes_(std::move(attributes)) {
  if (attributes_.empty()) throw DataError("schema must have at least one attribute");
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name.empty()) throw DataError("attribute name must not be empty");
    if (!by_name_.emplace(attributes_[i].name, i).second) {
      throw DataError("duplicate attribute name '" + attributes_[i].name + "'");
    }
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::require(std::string_view name) const {
  if (auto column = find(name)) return *column;
  throw DataError("unknown attribute '" + std::string(name) + "'");
}

std::string_view to_string(DistanceMetric metric) {
  return metric == DistanceMetric::kSquaredEuclidean ? "l2" : "ip";
}

DistanceMetric parse_metric(std::string_view text) {
  if (text == "l2") return DistanceMetric::kSquaredEuclidean;
  if (text == "ip") return DistanceMetric::kNegatedInnerProduct;
  throw DataError("unknown metric '" + std::string(text) + "' (expected l2 or ip)");
}

// Eight independent lanes keep the reduction order fixed while letting the
// compiler vectorize without reassociation.
float squared_l2(const float* a, const float* b, std::size_t dim) {
  float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      const float d = a[i + j] - b[i + j];
      lanes[j] += d * d;
    }
  }
  float tail = 0.0f;
  for (; i < dim; ++i) {
    const float d = a[i] - b[i];
    tail += d * d;
  }
  return ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7])) + tail;
}

float negated_inner_product(const float* a, const float* b, std::size_t dim) {
  float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) lanes[j] += a[i + j] * b[i + j];
  }
  float tail = 0.0f;
  for (; i < dim; ++i) tail += a[i] * b[i];
  return -(((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7])) + tail);
}

float distance(std::span<const float> a, std::span<const float> b, DistanceMetric metric) {
  if (a.size() != b.size()) {
    throw DataError("vector length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return metric == DistanceMetric::kSquaredEuclidean ? squared_l2(a.data(), b.data(), a.size())
                                                     : negated_inner_product(a.data(), b.data(), a.size());
}

std::optional<std::uint32_t> Relation::code_of(std::size_t column, std::string_view category) const {
  const auto& col = columns_[column];
  auto it = col.code_by_name.find(std::string(category));
  if (it == col.code_by_name.end()) return std::nullopt;
  return it->second;
}

AttributeValue Relation::value(std::size_t column, Key pk) const {
  if (columns_[column].kind == AttributeKind::kNumeric) return numeric(column, pk);
  return category(column, pk);
}

Tuple Relation::tuple(Key pk) const {
  if (pk >= size_) throw std::out_of_range("pk " + std::to_string(pk) + " not in relation");
  Tuple t;
  t.pk = pk;
  t.attrs.reserve(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) t.attrs.push_back(value(c, pk));
  auto v = vector(pk);
  t.vector.assign(v.begin(), v.end());
  return t;
}

Relation ingest_relation(AttributeTable attrs, VectorSet vectors, DistanceMetric metric) {
  if (vectors.dim == 0 && vectors.data.empty() && attrs.rows.empty()) throw DataError("empty relation");
  if (vectors.dim == 0) throw DataError("vector dimensionality must be positive");
  if (vectors.data.size() % vectors.dim != 0) {
    throw DataError("vector buffer of " + std::to_string(vectors.data.size()) + " floats is not a multiple of dim " +
                    std::to_string(vectors.dim));
  }
  const std::size_t n = vectors.size();
  if (n == 0) throw DataError("empty relation");
  if (attrs.rows.size() != n) {
    throw DataError("row count mismatch: " + std::to_string(n) + " vectors vs " + std::to_string(attrs.rows.size()) +
                    " attribute rows");
  }
  if (n > std::size_t{UINT32_MAX}) throw DataError("relation too large for 32-bit keys");
  for (std::size_t i = 0; i < vectors.data.size(); ++i) {
    if (!std::isfinite(vectors.data[i])) {
      throw DataError("non-finite component in vector " + std::to_string(i / vectors.dim));
    }
  }

  Relation r;
  r.schema_ = std::move(attrs.schema);
  r.size_ = n;
  r.dim_ = vectors.dim;
  r.metric_ = metric;
  r.vectors_ = std::move(vectors.data);
  r.columns_.resize(r.schema_.size());
  for (std::size_t c = 0; c < r.schema_.size(); ++c) {
    auto& col = r.columns_[c];
    col.kind = r.schema_.at(c).kind;
    if (col.kind == AttributeKind::kNumeric) {
      col.numeric.reserve(n);
    } else {
      col.codes.reserve(n);
    }
  }
  for (std::size_t row = 0; row < n; ++row) {
    const auto& cells = attrs.rows[row];
    if (cells.size() != r.schema_.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " values, schema has " +
                      std::to_string(r.schema_.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto& col = r.columns_[c];
      if (col.kind == AttributeKind::kNumeric) {
        const double* v = std::get_if<double>(&cells[c]);
        if (v == nullptr) {
          throw DataError("kind mismatch in column '" + r.schema_.at(c).name + "' at row " + std::to_string(row));
        }
        if (std::isnan(*v)) {
          throw DataError("NaN in numeric column '" + r.schema_.at(c).name + "' at row " + std::to_string(row));
        }
        col.numeric.push_back(*v);
      } else {
        const std::string* s = std::get_if<std::string>(&cells[c]);
        if (s == nullptr) {
          throw DataError("kind mismatch in column '" + r.schema_.at(c).name + "' at row " + std::to_string(row));
        }
        auto [it, inserted] = col.code_by_name.emplace(*s, static_cast<std::uint32_t>(col.dictionary.size()));
        if (inserted) col.dictionary.push_back(*s);
        col.codes.push_back(it->second);
      }
    }
  }
  return r;
}

}  // namespace pathfinder
