#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pathfinder/predicate.hpp"
#include "pathfinder/relation.hpp"

// Independent reference implementations used as test oracles. Nothing here
// calls the library's own evaluation or search code.
namespace pftest {

using pathfinder::BoolExpr;
using pathfinder::Key;
using pathfinder::Relation;

struct RefHit {
  Key pk;
  double distance;
};

// Exact top-k by full scan with double-precision squared L2.
std::vector<RefHit> reference_topk(const Relation& relation, std::span<const float> query, std::size_t k,
                                   const std::function<bool(Key)>& accept);

// Tree-walking evaluation reading raw column values.
bool reference_eval(const BoolExpr& expr, const Relation& relation, Key pk);

// Random predicate over the relation's columns, with bounds drawn from stored values.
BoolExpr random_atom_expr(const Relation& relation, std::mt19937_64& rng, std::size_t column);
BoolExpr random_clause_expr(const Relation& relation, std::mt19937_64& rng, std::size_t max_atoms);
BoolExpr random_dnf_expr(const Relation& relation, std::mt19937_64& rng, std::size_t max_clauses,
                         std::size_t max_atoms);

// Small clustered relation with columns a, b (numeric), c (numeric) and cat.
std::shared_ptr<const Relation> small_relation(std::size_t n, std::size_t dim, std::uint64_t seed,
                                               std::size_t categories = 6);

// Relation from explicit rows; numeric columns only.
std::shared_ptr<const Relation> relation_from(const std::vector<std::vector<float>>& vectors,
                                              const std::vector<std::pair<std::string, std::vector<double>>>& columns);

}  // namespace pftest
