#pragma once

#include <span>
#include <vector>

#include "pathfinder/predicate.hpp"
#include "pathfinder/relation.hpp"

namespace pathfinder {

/// Exact filtered top-K by linear scan (pre-filtering). Ascending distance, ties by pk.
std::vector<Neighbor> brute_force_topk(const Relation& relation, std::span<const float> query, std::size_t k,
                                       const DnfPredicate& filter);
/// Unfiltered variant.
std::vector<Neighbor> brute_force_topk(const Relation& relation, std::span<const float> query, std::size_t k);

/// |result ∩ truth| / k. Throws std::invalid_argument when k == 0.
double recall_at_k(std::span<const Key> result, std::span<const Key> truth, std::size_t k);
double recall_at_k(std::span<const Neighbor> result, std::span<const Neighbor> truth, std::size_t k);

}  // namespace pathfinder
