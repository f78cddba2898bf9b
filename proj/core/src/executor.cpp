#include "pathfinder/executor.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "pathfinder/error.hpp"
#include "pathfinder/vamana.hpp"

namespace pathfinder {

std::size_t QueryStats::total_visited() const {
  std::size_t total = 0;
  for (const auto& g : graphs) total += g.visited;
  return total;
}

namespace {

void check_request(const QueryRequest& request, const IndexCatalog& catalog) {
  if (request.k < 1) throw std::invalid_argument("K must be at least 1");
  if (request.queue_length < request.k) throw std::invalid_argument("queue length L must be at least K");
  if (request.query.size() != catalog.relation().dim()) {
    throw DataError("query has dimension " + std::to_string(request.query.size()) + ", relation has " +
                    std::to_string(catalog.relation().dim()));
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

QueryResult execute(const GraphSearchPlan& plan, const QueryRequest& request, const IndexCatalog& catalog) {
  check_request(request, catalog);
  QueryResult result;
  if (plan.proven_empty) return result;
  const auto start = std::chrono::steady_clock::now();
  const Relation& relation = catalog.relation();
  const RowMatcher matcher(request.filter, relation);
  const SearchParams params{request.queue_length, request.k};
  std::vector<Neighbor> merged;
  for (const auto& entry : plan.entries) {
    SearchStats stats;
    auto hits = oor_search(*catalog.node(entry.node).graph, relation, request.query, params, matcher, &stats);
    merged.insert(merged.end(), hits.begin(), hits.end());
    result.stats.graphs.push_back({entry.node, stats.distance_computations});
  }
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end(), [](const Neighbor& a, const Neighbor& b) { return a.pk == b.pk; }),
               merged.end());
  if (merged.size() > request.k) merged.resize(request.k);
  result.hits = std::move(merged);
  result.found = result.hits.size();
  result.stats.search_seconds = seconds_since(start);
  return result;
}

QueryResult answer(const IndexCatalog& catalog, const QueryRequest& request, const PlannerConfig& config) {
  check_request(request, catalog);
  const auto start = std::chrono::steady_clock::now();
  const GraphSearchPlan plan = plan_query(request.filter, catalog, config);
  const double plan_seconds = seconds_since(start);
  QueryResult result = execute(plan, request, catalog);
  result.stats.plan_seconds = plan_seconds;
  return result;
}

QueryResult answer(const IndexCatalog& catalog, const BoolExpr& filter, std::span<const float> query,
                   std::uint32_t k, std::uint32_t queue_length, const PlannerConfig& config) {
  QueryRequest request;
  request.query.assign(query.begin(), query.end());
  request.k = k;
  request.queue_length = queue_length;
  try {
    request.filter = to_dnf(filter);
  } catch (const UnsatisfiableFilter&) {
    check_request(request, catalog);
    return QueryResult{};
  }
  return answer(catalog, request, config);
}

}  // namespace pathfinder
