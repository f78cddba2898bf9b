#include "pathfinder/attribute_index.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "pathfinder/error.hpp"

namespace pathfinder {

bool AttributeRange::contains(const AttributeRange& other) const {
  if (kind != other.kind) return false;
  if (kind == AttributeKind::kNumeric) return min <= other.min && other.max <= max;
  return std::includes(categories.begin(), categories.end(), other.categories.begin(), other.categories.end());
}

AtomicPredicate AttributeRange::as_predicate(std::size_t column) const {
  if (kind == AttributeKind::kNumeric) return AtomicPredicate::between(column, min, max);
  return AtomicPredicate::in_set(column, categories);
}

std::vector<AttributeRange> compute_attr_ranges(const Relation& relation, std::span<const Key> members) {
  const Schema& schema = relation.schema();
  std::vector<AttributeRange> out(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto& r = out[c];
    r.kind = schema.at(c).kind;
    if (members.empty()) continue;
    if (r.kind == AttributeKind::kNumeric) {
      r.min = std::numeric_limits<double>::infinity();
      r.max = -std::numeric_limits<double>::infinity();
      for (Key pk : members) {
        const double v = relation.numeric(c, pk);
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
      }
    } else {
      std::vector<char> seen(relation.dictionary(c).size(), 0);
      for (Key pk : members) seen[relation.category_code(c, pk)] = 1;
      for (std::size_t code = 0; code < seen.size(); ++code) {
        if (seen[code]) r.categories.insert(relation.dictionary(c)[code]);
      }
    }
  }
  return out;
}

std::string_view to_string(IndexKind kind) { return kind == IndexKind::kTree ? "tree" : "hash"; }

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::min(1.0, std::abs(sxy) / std::sqrt(sxx * syy));
}

// Between-group over total variance of x grouped by code.
double correlation_ratio(std::span<const double> x, std::span<const std::uint32_t> codes, std::size_t groups) {
  const std::size_t n = x.size();
  std::vector<double> sum(groups, 0.0);
  std::vector<std::size_t> count(groups, 0);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum[codes[i]] += x[i];
    ++count[codes[i]];
    mean += x[i];
  }
  mean /= static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (x[i] - mean) * (x[i] - mean);
  if (total <= 0.0) return 0.0;
  double between = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    if (count[g] == 0) continue;
    const double d = sum[g] / static_cast<double>(count[g]) - mean;
    between += static_cast<double>(count[g]) * d * d;
  }
  return std::clamp(between / total, 0.0, 1.0);
}

NodePredicate region_predicate(std::size_t column, std::optional<double> lo, std::optional<double> hi) {
  if (!lo && !hi) return NodePredicate::all();
  std::optional<Bound> lower;
  std::optional<Bound> upper;
  if (lo) lower = Bound{*lo, false};
  if (hi) upper = Bound{*hi, true};
  return NodePredicate(AtomicPredicate::range(column, lower, upper));
}

std::size_t layout_height(const TreeSplit& layout) {
  std::size_t h = 1;
  for (const auto& c : layout.children) h = std::max(h, 1 + layout_height(c));
  return h;
}

void check_layout(const TreeSplit& layout, std::size_t depth, std::size_t leaf_depth) {
  if (layout.children.empty()) {
    if (depth != leaf_depth) throw IndexBuildError("tree layout leaves must all be at the same depth");
    return;
  }
  if (layout.cuts.empty()) throw IndexBuildError("a split needs at least one cut");
  if (layout.children.size() != layout.cuts.size() + 1) throw IndexBuildError("a split with m cuts needs m + 1 children");
  for (std::size_t i = 0; i < layout.cuts.size(); ++i) {
    if (!std::isfinite(layout.cuts[i])) throw IndexBuildError("tree cuts must be finite");
    if (i > 0 && !(layout.cuts[i - 1] < layout.cuts[i])) throw IndexBuildError("tree cuts must be strictly increasing");
  }
  for (const auto& c : layout.children) check_layout(c, depth + 1, leaf_depth);
}

// Median split of sorted values into at most fanout groups; duplicates stay left.
std::vector<double> median_cuts(const std::vector<double>& sorted, std::uint32_t fanout) {
  std::vector<double> cuts;
  const std::size_t m = sorted.size();
  std::size_t prev = 0;
  for (std::uint32_t j = 1; j < fanout; ++j) {
    std::size_t t = (static_cast<std::size_t>(j) * m) / fanout;
    if (t <= prev) t = prev + 1;
    if (t >= m) break;
    const double cut = sorted[t - 1];
    while (t < m && sorted[t] == cut) ++t;
    if (t >= m) break;
    if (!cuts.empty() && cuts.back() == cut) continue;
    cuts.push_back(cut);
    prev = t;
  }
  return cuts;
}

TreeSplit median_layout(const std::vector<double>& sorted, std::uint32_t fanout, std::uint32_t layers_left) {
  TreeSplit node;
  if (layers_left == 0) return node;
  node.cuts = median_cuts(sorted, fanout);
  if (node.cuts.empty()) {
    throw IndexBuildError("attribute has too few distinct values for the requested tree height");
  }
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= node.cuts.size(); ++i) {
    std::size_t end = sorted.size();
    if (i < node.cuts.size()) {
      end = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), node.cuts[i]) - sorted.begin());
    }
    std::vector<double> part(sorted.begin() + static_cast<std::ptrdiff_t>(begin),
                             sorted.begin() + static_cast<std::ptrdiff_t>(end));
    node.children.push_back(median_layout(part, fanout, layers_left - 1));
    begin = end;
  }
  return node;
}

}  // namespace

CorrelationTable compute_correlations(const Relation& relation) {
  const Schema& schema = relation.schema();
  const std::size_t k = schema.size();
  CorrelationTable table(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    table[i][i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const bool ni = schema.at(i).kind == AttributeKind::kNumeric;
      const bool nj = schema.at(j).kind == AttributeKind::kNumeric;
      double score = 0.0;
      if (ni && nj) {
        score = pearson(relation.numeric_column(i), relation.numeric_column(j));
      } else if (ni) {
        score = correlation_ratio(relation.numeric_column(i), relation.category_codes(j), relation.dictionary(j).size());
      } else if (nj) {
        score = correlation_ratio(relation.numeric_column(j), relation.category_codes(i), relation.dictionary(i).size());
      }
      table[i][j] = table[j][i] = score;
    }
  }
  return table;
}

TreeSplit plan_median_splits(const Relation& relation, std::size_t column, std::uint32_t fanout,
                             std::uint32_t height) {
  if (column >= relation.schema().size()) throw IndexBuildError("tree index column out of range");
  if (relation.schema().at(column).kind != AttributeKind::kNumeric) {
    throw IndexBuildError("tree index needs a numeric attribute, '" + relation.schema().at(column).name +
                          "' is categorical");
  }
  if (fanout < 2) throw IndexBuildError("tree fanout must be at least 2");
  if (height < 2) throw IndexBuildError("tree height must be at least 2");
  double leaves = 1.0;
  for (std::uint32_t i = 1; i < height; ++i) leaves *= fanout;
  if (leaves > static_cast<double>(relation.size())) {
    throw IndexBuildError("too many layers for the data: " + std::to_string(fanout) + "^" + std::to_string(height - 1) +
                          " leaves exceed " + std::to_string(relation.size()) + " tuples");
  }
  auto col = relation.numeric_column(column);
  std::vector<double> sorted(col.begin(), col.end());
  std::sort(sorted.begin(), sorted.end());
  return median_layout(sorted, fanout, height - 1);
}

std::optional<std::size_t> IndexCatalog::index_on(std::size_t column) const {
  for (std::size_t i = 0; i < indexes_.size(); ++i) {
    if (indexes_[i].column == column) return i;
  }
  return std::nullopt;
}

std::span<const NodeId> IndexCatalog::children(std::size_t index, NodeId node) const {
  if (node == kRootNode) return indexes_.at(index).top;
  return nodes_.at(node).children;
}

std::uint64_t node_seed(std::uint64_t master, NodeId id) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(id) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

CatalogBuilder::CatalogBuilder(std::shared_ptr<const Relation> relation, BuildParams params, std::uint64_t seed)
    : relation_(std::move(relation)), params_(params), seed_(seed) {
  if (!relation_) throw IndexBuildError("catalog needs a relation");
  params_.validate();
  PendingNode root;
  root.members.resize(relation_->size());
  for (std::size_t i = 0; i < root.members.size(); ++i) root.members[i] = static_cast<Key>(i);
  nodes_.push_back(std::move(root));
}

std::size_t CatalogBuilder::add_tree_index(std::string_view attr, std::uint32_t fanout, std::uint32_t height) {
  const std::size_t column = relation_->schema().require(attr);
  return add_tree_from_layout(column, plan_median_splits(*relation_, column, fanout, height), fanout);
}

std::size_t CatalogBuilder::add_tree_index(std::string_view attr, const TreeSplit& layout) {
  const std::size_t column = relation_->schema().require(attr);
  if (relation_->schema().at(column).kind != AttributeKind::kNumeric) {
    throw IndexBuildError("tree index needs a numeric attribute, '" + std::string(attr) + "' is categorical");
  }
  std::uint32_t fanout = 0;
  std::deque<const TreeSplit*> todo{&layout};
  while (!todo.empty()) {
    const TreeSplit* s = todo.front();
    todo.pop_front();
    fanout = std::max(fanout, static_cast<std::uint32_t>(s->children.size()));
    for (const auto& c : s->children) todo.push_back(&c);
  }
  return add_tree_from_layout(column, layout, fanout);
}

std::size_t CatalogBuilder::add_tree_from_layout(std::size_t column, const TreeSplit& layout, std::uint32_t fanout) {
  if (layout.children.empty()) throw IndexBuildError("tree layout must split the root at least once");
  const std::size_t height = layout_height(layout);
  check_layout(layout, 1, height);

  AttributeIndex index;
  index.kind = IndexKind::kTree;
  index.column = column;
  index.fanout = fanout;
  index.height = static_cast<std::uint32_t>(height);
  const std::size_t index_id = indexes_.size();

  struct Item {
    const TreeSplit* split;
    std::optional<double> lo;
    std::optional<double> hi;
    NodeId parent;
    std::uint32_t depth;
  };
  std::deque<Item> todo;
  auto enqueue_children = [&](const TreeSplit& s, std::optional<double> lo, std::optional<double> hi, NodeId parent,
                              std::uint32_t depth) {
    for (std::size_t i = 0; i < s.children.size(); ++i) {
      std::optional<double> clo = i == 0 ? lo : std::optional<double>(s.cuts[i - 1]);
      std::optional<double> chi = i == s.cuts.size() ? hi : std::optional<double>(s.cuts[i]);
      if (lo && chi && !(*lo < *chi)) throw IndexBuildError("tree cut outside its parent region");
      if (hi && clo && !(*clo < *hi)) throw IndexBuildError("tree cut outside its parent region");
      todo.push_back({&s.children[i], clo, chi, parent, depth + 1});
    }
  };
  enqueue_children(layout, std::nullopt, std::nullopt, kRootNode, 0);

  const std::size_t first_id = nodes_.size();
  std::vector<PendingNode> added;
  while (!todo.empty()) {
    Item item = todo.front();
    todo.pop_front();
    const auto id = static_cast<NodeId>(first_id + added.size());
    PendingNode node;
    node.index = index_id;
    node.predicate = region_predicate(column, item.lo, item.hi);
    node.parent = item.parent;
    node.depth = item.depth;
    const auto& parent_members = item.parent == kRootNode ? nodes_[kRootNode].members
                                                          : added[item.parent - first_id].members;
    for (Key pk : parent_members) {
      if (eval(node.predicate, *relation_, pk)) node.members.push_back(pk);
    }
    if (node.members.empty()) {
      throw IndexBuildError("tree node " + to_string(node.predicate, relation_->schema()) + " holds no tuples");
    }
    if (item.parent == kRootNode) {
      index.top.push_back(id);
    } else {
      added[item.parent - first_id].children.push_back(id);
    }
    if (item.split->children.empty()) index.leaves.push_back(id);
    index.nodes.push_back(id);
    added.push_back(std::move(node));
    enqueue_children(*item.split, item.lo, item.hi, id, item.depth);
  }
  for (auto& n : added) nodes_.push_back(std::move(n));
  indexes_.push_back(std::move(index));
  return index_id;
}

std::size_t CatalogBuilder::add_hash_index(std::string_view attr) {
  const std::size_t column = relation_->schema().require(attr);
  if (relation_->schema().at(column).kind != AttributeKind::kCategorical) {
    throw IndexBuildError("hash index needs a categorical attribute, '" + std::string(attr) + "' is numeric");
  }
  const auto& dict = relation_->dictionary(column);
  AttributeIndex index;
  index.kind = IndexKind::kHash;
  index.column = column;
  index.fanout = static_cast<std::uint32_t>(dict.size());
  index.height = 2;
  const std::size_t index_id = indexes_.size();
  std::vector<std::vector<Key>> groups(dict.size());
  for (std::size_t pk = 0; pk < relation_->size(); ++pk) {
    groups[relation_->category_code(column, static_cast<Key>(pk))].push_back(static_cast<Key>(pk));
  }
  for (std::size_t code = 0; code < dict.size(); ++code) {
    const auto id = static_cast<NodeId>(nodes_.size());
    PendingNode node;
    node.index = index_id;
    node.predicate = NodePredicate(AtomicPredicate::in_set(column, {dict[code]}));
    node.members = std::move(groups[code]);
    node.parent = kRootNode;
    node.depth = 1;
    nodes_.push_back(std::move(node));
    index.top.push_back(id);
    index.leaves.push_back(id);
    index.nodes.push_back(id);
  }
  indexes_.push_back(std::move(index));
  return index_id;
}

IndexCatalog CatalogBuilder::build(int threads) {
  IndexCatalog catalog;
  catalog.relation_ = relation_;
  catalog.params_ = params_;
  catalog.seed_ = seed_;
  catalog.indexes_ = indexes_;
  catalog.nodes_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const PendingNode& p = nodes_[i];
    IndexNode& n = catalog.nodes_[i];
    n.id = static_cast<NodeId>(i);
    n.index = p.index;
    n.predicate = p.predicate;
    n.parent = p.parent;
    n.depth = p.depth;
    n.children = p.children;
    n.card = p.members.size();
    n.attr_ranges = compute_attr_ranges(*relation_, p.members);
    n.graph = std::make_shared<const VamanaGraph>(
        build_vamana(*relation_, p.members, params_, node_seed(seed_, n.id), threads));
  }
  catalog.correlations_ = compute_correlations(*relation_);
  return catalog;
}

}  // namespace pathfinder
