#pragma once

#include <filesystem>

#include "pathfinder/relation.hpp"

namespace pathfinder {

/// fvecs: per vector a little-endian int32 dimension followed by that many float32.
VectorSet read_fvecs(const std::filesystem::path& path);
void write_fvecs(const std::filesystem::path& path, const VectorSet& vectors);
/// Reads a single row without loading the whole file.
std::vector<float> read_fvecs_row(const std::filesystem::path& path, std::size_t index);

/// CSV with a header row. A column is numeric when every cell parses as a
/// decimal real; otherwise it is categorical and cells are kept verbatim.
AttributeTable read_attribute_csv(const std::filesystem::path& path);
/// Reads with a known schema: header names must match and kinds are enforced.
AttributeTable read_attribute_csv(const std::filesystem::path& path, const Schema& schema);
void write_attribute_csv(const std::filesystem::path& path, const AttributeTable& table);

/// Convenience: read both files and ingest.
Relation load_relation(const std::filesystem::path& fvecs, const std::filesystem::path& csv,
                       DistanceMetric metric = DistanceMetric::kSquaredEuclidean);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace pathfinder
