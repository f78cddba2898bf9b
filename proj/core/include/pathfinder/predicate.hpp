#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pathfinder/relation.hpp"

namespace pathfinder {

/// One end of a numeric interval. An absent bound means unbounded on that side.
struct Bound {
  double value = 0.0;
  bool inclusive = true;

  bool operator==(const Bound&) const = default;
};

struct RangeAtom {
  std::size_t column = 0;
  std::optional<Bound> lower;
  std::optional<Bound> upper;

  bool operator==(const RangeAtom&) const = default;
};

struct InSetAtom {
  std::size_t column = 0;
  std::set<std::string> values;

  bool operator==(const InSetAtom&) const = default;
};

/// Range on a numeric attribute or membership on a categorical one.
/// Constructed only through the validating factories.
class AtomicPredicate {
 public:
  /// Requires at least one bound and a non-empty interval.
  static AtomicPredicate range(std::size_t column, std::optional<Bound> lower, std::optional<Bound> upper);
  static AtomicPredicate at_least(std::size_t column, double value, bool inclusive = true);
  static AtomicPredicate at_most(std::size_t column, double value, bool inclusive = true);
  static AtomicPredicate between(std::size_t column, double lower, double upper);
  /// Requires a non-empty value set.
  static AtomicPredicate in_set(std::size_t column, std::set<std::string> values);

  std::size_t column() const;
  bool is_range() const { return std::holds_alternative<RangeAtom>(atom_); }
  const RangeAtom& as_range() const { return std::get<RangeAtom>(atom_); }
  const InSetAtom& as_in_set() const { return std::get<InSetAtom>(atom_); }

  bool operator==(const AtomicPredicate&) const = default;

 private:
  explicit AtomicPredicate(std::variant<RangeAtom, InSetAtom> atom) : atom_(std::move(atom)) {}
  std::variant<RangeAtom, InSetAtom> atom_;
};

/// Region ∩ region for atoms on the same column; nullopt when empty.
/// Throws FilterError when the columns or kinds differ.
std::optional<AtomicPredicate> intersect(const AtomicPredicate& a, const AtomicPredicate& b);
/// region(inner) ⊆ region(outer), decided symbolically.
bool contains(const AtomicPredicate& outer, const AtomicPredicate& inner);

/// Region owned by an index node: a single-attribute atom, or the whole relation.
class NodePredicate {
 public:
  static NodePredicate all() { return NodePredicate(); }
  explicit NodePredicate(AtomicPredicate atom) : atom_(std::move(atom)) {}

  bool is_all() const { return !atom_.has_value(); }
  const AtomicPredicate& atom() const { return *atom_; }

  bool operator==(const NodePredicate&) const = default;

 private:
  NodePredicate() = default;
  std::optional<AtomicPredicate> atom_;
};

/// AND of atoms with at most one (intersected) atom per column.
/// A default-constructed clause has no constraints and matches every tuple.
class ConjunctiveClause {
 public:
  ConjunctiveClause() = default;
  static ConjunctiveClause unsatisfiable();

  /// Conjoin in place; marks the clause empty when an intersection vanishes.
  void add(const AtomicPredicate& atom);
  void erase(std::size_t column) { atoms_.erase(column); }

  bool is_empty() const { return empty_; }
  bool is_unconstrained() const { return !empty_ && atoms_.empty(); }
  const AtomicPredicate* constraint(std::size_t column) const;
  const std::map<std::size_t, AtomicPredicate>& atoms() const { return atoms_; }

  bool operator==(const ConjunctiveClause&) const = default;

 private:
  std::map<std::size_t, AtomicPredicate> atoms_;
  bool empty_ = false;
};

ConjunctiveClause conjoin_simplify(const ConjunctiveClause& clause, const AtomicPredicate& atom);
ConjunctiveClause conjoin_simplify(const ConjunctiveClause& clause, const NodePredicate& region);

class BoolExpr;

/// OR of satisfiable conjunctive clauses. Never empty.
class DnfPredicate {
 public:
  /// Drops empty and duplicate clauses; throws UnsatisfiableFilter when none remain.
  explicit DnfPredicate(std::vector<ConjunctiveClause> clauses);
  static DnfPredicate always_true() { return DnfPredicate(std::vector<ConjunctiveClause>{ConjunctiveClause{}}); }

  const std::vector<ConjunctiveClause>& clauses() const { return clauses_; }
  bool is_always_true() const;
  BoolExpr to_expr() const;

  bool operator==(const DnfPredicate&) const = default;

 private:
  std::vector<ConjunctiveClause> clauses_;
};

/// AND/OR tree over atoms. No negation.
class BoolExpr {
 public:
  enum class Kind { kAtom, kAnd, kOr };

  static BoolExpr atom(AtomicPredicate atom);
  /// Both require at least one child; a single child collapses to itself.
  static BoolExpr all_of(std::vector<BoolExpr> children);
  static BoolExpr any_of(std::vector<BoolExpr> children);

  Kind kind() const { return kind_; }
  const AtomicPredicate& as_atom() const { return *atom_; }
  const std::vector<BoolExpr>& children() const { return children_; }

  bool operator==(const BoolExpr&) const = default;

 private:
  Kind kind_ = Kind::kAtom;
  std::optional<AtomicPredicate> atom_;
  std::vector<BoolExpr> children_;
};

/// Maximum number of clauses to_dnf will produce.
inline constexpr std::size_t kMaxDnfClauses = 64;

/// Distributes AND over OR, normalizes each clause per attribute and drops
/// unsatisfiable clauses. Throws FilterError beyond kMaxDnfClauses and
/// UnsatisfiableFilter when nothing satisfiable remains.
DnfPredicate to_dnf(const BoolExpr& expr);

bool eval(const AtomicPredicate& atom, const Tuple& tuple);
bool eval(const ConjunctiveClause& clause, const Tuple& tuple);
bool eval(const DnfPredicate& predicate, const Tuple& tuple);
bool eval(const NodePredicate& predicate, const Tuple& tuple);
bool eval(const BoolExpr& expr, const Tuple& tuple);

bool eval(const AtomicPredicate& atom, const Relation& relation, Key pk);
bool eval(const ConjunctiveClause& clause, const Relation& relation, Key pk);
bool eval(const DnfPredicate& predicate, const Relation& relation, Key pk);
bool eval(const NodePredicate& predicate, const Relation& relation, Key pk);
bool eval(const BoolExpr& expr, const Relation& relation, Key pk);

/// region(clause) ⊆ region(node). A clause that does not constrain the node's
/// attribute is covered only by the whole-relation predicate.
bool covers(const NodePredicate& node, const ConjunctiveClause& clause);
/// region(clause) ∩ region(node) is non-empty.
bool overlaps(const NodePredicate& node, const ConjunctiveClause& clause);

/// Text in filter grammar form; parse_filter(to_string(x)) reproduces x.
std::string to_string(const AtomicPredicate& atom, const Schema& schema);
std::string to_string(const ConjunctiveClause& clause, const Schema& schema);
std::string to_string(const DnfPredicate& predicate, const Schema& schema);
std::string to_string(const BoolExpr& expr, const Schema& schema);
std::string to_string(const NodePredicate& predicate, const Schema& schema);

/// A DNF predicate compiled against one relation for fast per-pk tests.
class RowMatcher {
 public:
  RowMatcher(const DnfPredicate& predicate, const Relation& relation);

  bool operator()(Key pk) const;
  bool always_true() const { return always_true_; }

 private:
  struct Test {
    bool numeric = true;
    const double* values = nullptr;
    double lower = 0.0;
    double upper = 0.0;
    bool has_lower = false;
    bool has_upper = false;
    bool lower_inclusive = true;
    bool upper_inclusive = true;
    const std::uint32_t* codes = nullptr;
    std::vector<char> accepted;
  };
  std::vector<std::vector<Test>> clauses_;
  bool always_true_ = false;
};

}  // namespace pathfinder
