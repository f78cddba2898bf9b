#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pathfinder/attribute_index.hpp"
#include "pathfinder/optimizer.hpp"
#include "pathfinder/predicate.hpp"

namespace pathfinder {

struct QueryRequest {
  std::vector<float> query;
  std::uint32_t k = 10;
  std::uint32_t queue_length = 100;  // L, applied to every graph of the plan
  DnfPredicate filter = DnfPredicate::always_true();  // original, pre-borrowing
};

struct GraphVisit {
  NodeId node = kRootNode;
  std::size_t visited = 0;
};

struct QueryStats {
  std::vector<GraphVisit> graphs;
  double plan_seconds = 0.0;
  double search_seconds = 0.0;

  std::size_t total_visited() const;
};

struct QueryResult {
  std::vector<Neighbor> hits;  // strictly increasing (distance, pk)
  std::size_t found = 0;
  QueryStats stats;
};

/// Out-of-range search on every planned graph with the original filter, then
/// a pk-deduplicated global top-K. Fewer than K matches is reported, not retried.
QueryResult execute(const GraphSearchPlan& plan, const QueryRequest& request, const IndexCatalog& catalog);

/// plan_query followed by execute; plan time is measured separately.
QueryResult answer(const IndexCatalog& catalog, const QueryRequest& request, const PlannerConfig& config = {});

/// Parses and answers a filter expression. An unsatisfiable filter yields an
/// empty result without searching.
QueryResult answer(const IndexCatalog& catalog, const BoolExpr& filter, std::span<const float> query,
                   std::uint32_t k, std::uint32_t queue_length, const PlannerConfig& config = {});

}  // namespace pathfinder
