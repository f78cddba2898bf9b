#pragma once

#include <filesystem>

#include "pathfinder/attribute_index.hpp"

namespace pathfinder {

/// Catalog directory layout:
///   manifest.json      versioned text manifest (indexes, node tree, predicates,
///                      cardinalities, attribute ranges, correlations)
///   data.fvecs         relation vectors
///   attrs.csv          relation attributes
///   graphs/node_<id>.pfg  one binary graph per node
inline constexpr int kManifestVersion = 1;

void save_catalog(const IndexCatalog& catalog, const std::filesystem::path& dir);
IndexCatalog load_catalog(const std::filesystem::path& dir);

}  // namespace pathfinder
