#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathfinder/predicate.hpp"
#include "pathfinder/relation.hpp"
#include "pathfinder/vamana.hpp"

namespace pathfinder {

using NodeId = std::uint32_t;
inline constexpr NodeId kRootNode = 0;
inline constexpr NodeId kNoParent = static_cast<NodeId>(-1);

/// Value range of one attribute over a node's tuples: [min, max] for numeric
/// columns, the category set for categorical ones.
struct AttributeRange {
  AttributeKind kind = AttributeKind::kNumeric;
  double min = 0.0;
  double max = 0.0;
  std::set<std::string> categories;

  bool contains(const AttributeRange& other) const;
  /// The range as an atom: closed interval or membership set.
  AtomicPredicate as_predicate(std::size_t column) const;

  bool operator==(const AttributeRange&) const = default;
};

std::vector<AttributeRange> compute_attr_ranges(const Relation& relation, std::span<const Key> members);

enum class IndexKind { kTree, kHash };
std::string_view to_string(IndexKind kind);

struct IndexNode {
  NodeId id = 0;
  std::optional<std::size_t> index;  // owning index; empty for the shared root
  NodePredicate predicate = NodePredicate::all();
  std::shared_ptr<const VamanaGraph> graph;
  std::size_t card = 0;
  NodeId parent = kNoParent;
  std::uint32_t depth = 0;
  std::vector<NodeId> children;  // the root keeps its per-index children in AttributeIndex::top
  std::vector<AttributeRange> attr_ranges;  // one per schema column
};

struct AttributeIndex {
  IndexKind kind = IndexKind::kTree;
  std::size_t column = 0;
  std::uint32_t fanout = 0;  // widest split (hash: number of categories)
  std::uint32_t height = 0;  // layers including the shared root
  std::vector<NodeId> top;     // children of the root in this index
  std::vector<NodeId> leaves;  // left to right
  std::vector<NodeId> nodes;   // every non-root node, top-down
};

/// Symmetric attribute-pair scores in [0, 1]: |Pearson| for numeric pairs,
/// the correlation ratio (between-group / total variance) for numeric vs
/// categorical, and 0 for categorical pairs or zero-variance columns.
using CorrelationTable = std::vector<std::vector<double>>;
CorrelationTable compute_correlations(const Relation& relation);

/// Explicit split boundaries for a tree index. A node with region (lo, hi]
/// and cuts c_1 < ... < c_m has children (lo, c_1], (c_1, c_2], ..., (c_m, hi].
struct TreeSplit {
  std::vector<double> cuts;
  std::vector<TreeSplit> children;  // empty (leaf) or cuts.size() + 1 entries
};

/// Equal-cardinality (median) splits of a numeric column. Duplicated values
/// stay together on the left side of a cut. Throws IndexBuildError for
/// non-numeric columns, height < 2, or too many layers for the data.
TreeSplit plan_median_splits(const Relation& relation, std::size_t column, std::uint32_t fanout,
                             std::uint32_t height);

/// Immutable set of attribute indexes sharing one root graph over the whole relation.
class IndexCatalog {
 public:
  const Relation& relation() const { return *relation_; }
  const std::shared_ptr<const Relation>& relation_ptr() const { return relation_; }

  const IndexNode& root() const { return nodes_[kRootNode]; }
  const IndexNode& node(NodeId id) const { return nodes_.at(id); }
  std::span<const IndexNode> nodes() const { return nodes_; }

  std::span<const AttributeIndex> indexes() const { return indexes_; }
  const AttributeIndex& index(std::size_t i) const { return indexes_.at(i); }
  std::optional<std::size_t> index_on(std::size_t column) const;

  /// Children of a node within one index; the root's children depend on the index.
  std::span<const NodeId> children(std::size_t index, NodeId node) const;
  bool is_leaf(std::size_t index, NodeId node) const { return children(index, node).empty(); }

  double correlation(std::size_t a, std::size_t b) const { return correlations_[a][b]; }
  const CorrelationTable& correlations() const { return correlations_; }

  const BuildParams& build_params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

 private:
  friend class CatalogBuilder;
  friend IndexCatalog load_catalog(const std::filesystem::path& dir);

  std::shared_ptr<const Relation> relation_;
  std::vector<IndexNode> nodes_;
  std::vector<AttributeIndex> indexes_;
  CorrelationTable correlations_;
  BuildParams params_;
  std::uint64_t seed_ = 0;
};

/// Assembles a catalog: the root graph g_r plus tree and hash indexes.
/// Node ids: the root is 0, then each index in the order added, top-down,
/// left to right. Graph construction happens in build().
class CatalogBuilder {
 public:
  CatalogBuilder(std::shared_ptr<const Relation> relation, BuildParams params, std::uint64_t seed);

  /// Median-split tree. Returns the index position in the catalog.
  std::size_t add_tree_index(std::string_view attr, std::uint32_t fanout, std::uint32_t height);
  /// Tree with explicit boundaries (e.g. value-based splits).
  std::size_t add_tree_index(std::string_view attr, const TreeSplit& layout);
  /// One leaf per distinct category, in first-occurrence order.
  std::size_t add_hash_index(std::string_view attr);

  /// Builds every graph (nodes are independent; per-node seeds derive from the
  /// master seed), attribute ranges and correlations.
  IndexCatalog build(int threads = 0);

 private:
  struct PendingNode {
    std::optional<std::size_t> index;
    NodePredicate predicate = NodePredicate::all();
    std::vector<Key> members;
    NodeId parent = kNoParent;
    std::uint32_t depth = 0;
    std::vector<NodeId> children;
  };

  std::size_t add_tree_from_layout(std::size_t column, const TreeSplit& layout, std::uint32_t fanout);

  std::shared_ptr<const Relation> relation_;
  BuildParams params_;
  std::uint64_t seed_;
  std::vector<PendingNode> nodes_;
  std::vector<AttributeIndex> indexes_;
};

/// Seed for a node's graph, derived from the catalog seed.
std::uint64_t node_seed(std::uint64_t master, NodeId id);

}  // namespace pathfinder
