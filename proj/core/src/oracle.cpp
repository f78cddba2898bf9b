#include "pathfinder/oracle.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "pathfinder/error.hpp"

namespace pathfinder {

namespace {

std::vector<Neighbor> scan(const Relation& relation, std::span<const float> query, std::size_t k,
                           const RowMatcher* matcher) {
  if (query.size() != relation.dim()) {
    throw DataError("query has dimension " + std::to_string(query.size()) + ", relation has " +
                    std::to_string(relation.dim()));
  }
  std::vector<Neighbor> out;
  if (k == 0) return out;
  const auto n = static_cast<Key>(relation.size());
  // Max-heap on (distance, pk) holding the best k so far.
  for (Key pk = 0; pk < n; ++pk) {
    if (matcher != nullptr && !(*matcher)(pk)) continue;
    Neighbor cand{pk, relation.distance_to(query, pk)};
    if (out.size() < k) {
      out.push_back(cand);
      std::push_heap(out.begin(), out.end());
    } else if (cand < out.front()) {
      std::pop_heap(out.begin(), out.end());
      out.back() = cand;
      std::push_heap(out.begin(), out.end());
    }
  }
  std::sort_heap(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<Neighbor> brute_force_topk(const Relation& relation, std::span<const float> query, std::size_t k,
                                       const DnfPredicate& filter) {
  RowMatcher matcher(filter, relation);
  return scan(relation, query, k, matcher.always_true() ? nullptr : &matcher);
}

std::vector<Neighbor> brute_force_topk(const Relation& relation, std::span<const float> query, std::size_t k) {
  return scan(relation, query, k, nullptr);
}

double recall_at_k(std::span<const Key> result, std::span<const Key> truth, std::size_t k) {
  if (k == 0) throw std::invalid_argument("recall@K needs K >= 1");
  std::unordered_set<Key> want(truth.begin(), truth.end());
  std::unordered_set<Key> seen;
  std::size_t hits = 0;
  for (Key pk : result) {
    if (want.count(pk) && seen.insert(pk).second) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double recall_at_k(std::span<const Neighbor> result, std::span<const Neighbor> truth, std::size_t k) {
  std::vector<Key> r;
  std::vector<Key> t;
  r.reserve(result.size());
  t.reserve(truth.size());
  for (const auto& n : result) r.push_back(n.pk);
  for (const auto& n : truth) t.push_back(n.pk);
  return recall_at_k(std::span<const Key>(r), std::span<const Key>(t), k);
}

}  // namespace pathfinder
