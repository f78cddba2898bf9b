#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathfinder/attribute_index.hpp"
#include "pathfinder/predicate.hpp"

namespace pathfinder {

struct PlannerConfig {
  double alpha = 0.4;  // penalty exponent on the number of graphs
  bool borrowing_enabled = true;
  double correlation_threshold = 0.3;

  void validate() const;
};

/// Sorted, duplicate-free set of catalog nodes.
using GraphSet = std::vector<NodeId>;
GraphSet make_graph_set(std::vector<NodeId> nodes);

/// Ranking surrogate for search utility: only the denominator
/// sum(card) * |G|^alpha is computed, since card(R, p) is the same for every
/// candidate of one predicate. Lower value ranks better.
struct RankKey {
  double value = 0.0;
  bool covering = true;
  std::size_t graphs = 0;
  std::size_t total_card = 0;
  GraphSet nodes;

  bool operator==(const RankKey&) const = default;
};

/// Strict total order: covering first, then smaller value, fewer graphs,
/// smaller total card, lexicographically smaller node ids.
bool ranks_before(const RankKey& a, const RankKey& b);

/// Throws std::invalid_argument for an empty graph set.
RankKey rank(const IndexCatalog& catalog, std::span<const NodeId> graphs, bool covering, const PlannerConfig& config);

/// Descends from start while exactly one child covers the clause; stops at a leaf.
NodeId find_single_graph(const IndexCatalog& catalog, std::size_t index, NodeId start,
                         const ConjunctiveClause& clause);
/// For every child of start that overlaps the clause, the single graph for
/// clause ∧ child-region within that child's subtree.
GraphSet find_second_plan(const IndexCatalog& catalog, std::size_t index, NodeId start,
                          const ConjunctiveClause& clause);

/// Outcome of synthesizing a predicate on an indexed attribute from one on an
/// unindexed attribute.
struct Synthesis {
  enum class Outcome {
    kPredicate,      // use `predicate`
    kUnconstrained,  // every leaf overlaps; nothing to add
    kNoMatch,        // no leaf overlaps; no tuple can satisfy the source atom
  };
  Outcome outcome = Outcome::kUnconstrained;
  std::optional<AtomicPredicate> predicate;
};

Synthesis synthesize_pred_hash(const IndexCatalog& catalog, std::size_t index, const AtomicPredicate& source);
Synthesis synthesize_pred_tree(const IndexCatalog& catalog, std::size_t index, const AtomicPredicate& source);

struct BorrowRewrite {
  std::size_t source_column = 0;
  std::size_t index = 0;
  double score = 0.0;
  Synthesis synthesis;
};

struct BorrowResult {
  ConjunctiveClause planned;  // clause used for planning only
  std::vector<BorrowRewrite> rewrites;
  bool proven_empty = false;
};

/// Replaces each atom on an unindexed attribute by a synthesized atom on the
/// most correlated indexed attribute not constrained by the clause, when the
/// score reaches the threshold. The original clause is still used for filtering.
BorrowResult borrow_rewrite(const ConjunctiveClause& clause, const IndexCatalog& catalog, const PlannerConfig& config);

struct PlanCandidate {
  std::optional<std::size_t> index;  // empty for the root-only fallback
  GraphSet graphs;
  RankKey key;
};

struct ClausePlan {
  ConjunctiveClause clause;
  BorrowResult borrow;
  std::vector<PlanCandidate> candidates;
  GraphSet chosen;  // empty when proven_empty
};

/// Per index on an attribute of the (rewritten) clause: the single-graph plan
/// and, when it has children, the second plan. Falls back to {root}.
ClausePlan plan_conjunction(const ConjunctiveClause& clause, const IndexCatalog& catalog,
                            const PlannerConfig& config);

/// Bottom-up replacement of disjoint descendant sets by an ancestor within one
/// index (the shared root is the top of every index).
GraphSet optimize_disjunction_group(const IndexCatalog& catalog, std::size_t index, const GraphSet& group,
                                    const DnfPredicate& predicate, const PlannerConfig& config);

struct PlanEntry {
  std::optional<std::size_t> index;  // empty for the root
  NodeId node = kRootNode;
  std::size_t card = 0;
  std::vector<std::size_t> clauses;  // DNF clauses this graph serves
};

struct GraphSearchPlan {
  std::vector<PlanEntry> entries;  // ascending node id
  bool proven_empty = false;       // borrowing showed that no tuple can match

  GraphSet nodes() const;
};

struct GroupTrace {
  std::optional<std::size_t> index;
  GraphSet input;
  GraphSet output;
  double input_value = 0.0;
  double output_value = 0.0;
};

struct PlanExplanation {
  std::vector<ClausePlan> clauses;
  std::vector<GroupTrace> groups;
};

/// Plans each clause, deduplicates, groups by index, merges each group, and
/// unions the groups.
GraphSearchPlan plan_query(const DnfPredicate& predicate, const IndexCatalog& catalog, const PlannerConfig& config,
                           PlanExplanation* explanation = nullptr);

/// Human-readable report: DNF, per-clause candidates with rank values,
/// borrowing rewrites, group merges and the final (index, node, card) rows.
std::string format_explanation(const IndexCatalog& catalog, const DnfPredicate& predicate,
                               const GraphSearchPlan& plan, const PlanExplanation& explanation,
                               const PlannerConfig& config);

}  // namespace pathfinder
