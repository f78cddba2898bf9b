#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "pathfinder/predicate.hpp"
#include "pathfinder/relation.hpp"

namespace pathfinder {

struct BuildParams {
  std::uint32_t max_degree = 32;    // R
  std::uint32_t build_queue = 128;  // L_build
  float prune_alpha = 1.2f;
  /// Vertices inserted per batch-synchronous step. Fixed independently of the
  /// thread count so a seed always yields the same graph.
  std::uint32_t batch_size = 32;

  /// Throws IndexBuildError unless R >= 2, L_build >= R, alpha >= 1, batch >= 1.
  void validate() const;
};

struct SearchParams {
  std::uint32_t queue_length = 100;  // L
  std::uint32_t k = 10;

  /// Throws std::invalid_argument unless L >= K >= 1.
  void validate() const;
};

/// Single-layer bounded-degree proximity graph over a sorted set of pks.
/// Adjacency is stored by local id (position in the member list).
class VamanaGraph {
 public:
  VamanaGraph() = default;

  /// Builds a graph from explicit pk adjacency (one list per member, in member order).
  /// Throws IndexBuildError on unsorted members, foreign neighbors or degree overflow.
  static VamanaGraph from_adjacency(std::vector<Key> members, const std::vector<std::vector<Key>>& adjacency,
                                    Key entry, std::uint32_t max_degree);

  std::size_t card() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::uint32_t max_degree() const { return max_degree_; }
  std::span<const Key> members() const { return members_; }
  Key member(std::uint32_t local) const { return members_[local]; }
  Key entry() const { return members_[entry_]; }
  std::uint32_t entry_local() const { return entry_; }

  std::span<const std::uint32_t> neighbors_local(std::uint32_t local) const {
    return {slots_.data() + std::size_t{local} * max_degree_, degree_[local]};
  }
  /// Neighbor pks of member pk; throws std::out_of_range for non-members.
  std::vector<Key> neighbors(Key pk) const;
  std::optional<std::uint32_t> local_of(Key pk) const;
  bool contains(Key pk) const { return local_of(pk).has_value(); }

  bool operator==(const VamanaGraph&) const = default;

 private:
  friend class GraphAssembler;

  std::vector<Key> members_;
  std::vector<std::uint32_t> degree_;
  std::vector<std::uint32_t> slots_;
  std::uint32_t entry_ = 0;
  std::uint32_t max_degree_ = 0;
};

/// Random initial graph, then two greedy-search + robust-prune passes
/// (alpha = 1, then prune_alpha) with reverse-edge insertion. Entry is the
/// medoid against a sample of at most 1,000 members. Graphs with at most
/// R + 1 members are complete. Deterministic for a fixed seed at any
/// thread count. Throws IndexBuildError for an empty member set.
VamanaGraph build_vamana(const Relation& relation, std::span<const Key> members, const BuildParams& params,
                         std::uint64_t seed, int threads = 0);

/// Medoid over the given members: minimizes the summed distance to a sample of
/// at most sample_size members (all of them below that size).
Key find_medoid(const Relation& relation, std::span<const Key> members, std::uint64_t seed,
                std::size_t sample_size = 1000);

/// Repeatedly keeps the closest remaining candidate p* and drops every
/// candidate c with alpha * d(p*, c) <= d(v, c), until R are kept.
/// Candidates carry their distance to v; v itself must not appear.
std::vector<Key> robust_prune(const Relation& relation, Key v, std::vector<Neighbor> candidates,
                              std::uint32_t max_degree, float alpha);
inline std::vector<Key> robust_prune(const Relation& relation, Key v, std::vector<Neighbor> candidates,
                                     const BuildParams& params) {
  return robust_prune(relation, v, std::move(candidates), params.max_degree, params.prune_alpha);
}

struct SearchStats {
  std::size_t distance_computations = 0;  // vertices visited
  std::size_t expansions = 0;
};

/// Optional record of a search for inspection in tests and tooling.
struct SearchTrace {
  std::vector<Key> expanded;  // in expansion order
  std::vector<Key> evicted;   // dropped from a full queue
  std::vector<Key> rejected;  // visited but never admitted to a full queue
};

/// Best-first search with a queue of at most L vertices. Returns the K
/// closest visited vertices, ascending (distance, pk).
std::vector<Neighbor> best_first_search(const VamanaGraph& graph, const Relation& relation,
                                        std::span<const float> query, const SearchParams& params,
                                        SearchStats* stats = nullptr, SearchTrace* trace = nullptr);

/// Out-of-range search: navigation ignores the filter; a separate K-bounded
/// queue collects filter-passing vertices. Termination depends only on the
/// navigation queue.
std::vector<Neighbor> oor_search(const VamanaGraph& graph, const Relation& relation, std::span<const float> query,
                                 const SearchParams& params, const RowMatcher& filter, SearchStats* stats = nullptr,
                                 SearchTrace* trace = nullptr);
std::vector<Neighbor> oor_search(const VamanaGraph& graph, const Relation& relation, std::span<const float> query,
                                 const SearchParams& params, const DnfPredicate& filter, SearchStats* stats = nullptr);

/// Binary graph format (little-endian u32 fields):
///   "PFVG" version R card entry | members[card] | per member: degree, pks[degree]
inline constexpr std::uint32_t kGraphFormatVersion = 1;
void write_graph(std::ostream& out, const VamanaGraph& graph);
VamanaGraph read_graph(std::istream& in);

}  // namespace pathfinder
