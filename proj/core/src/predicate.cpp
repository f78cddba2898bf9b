#include "pathfinder/predicate.hpp"

#include <algorithm>
#include <cmath>

#include "pathfinder/dataset_io.hpp"
#include "pathfinder/error.hpp"

namespace pathfinder {

namespace {

bool valid_interval(const std::optional<Bound>& lower, const std::optional<Bound>& upper) {
  if (!lower || !upper) return true;
  if (lower->value < upper->value) return true;
  return lower->value == upper->value && lower->inclusive && upper->inclusive;
}

bool in_range(const RangeAtom& r, double v) {
  if (r.lower && (r.lower->inclusive ? v < r.lower->value : v <= r.lower->value)) return false;
  if (r.upper && (r.upper->inclusive ? v > r.upper->value : v >= r.upper->value)) return false;
  return true;
}

// The tighter of two lower bounds; on equal values exclusivity wins.
std::optional<Bound> max_lower(const std::optional<Bound>& a, const std::optional<Bound>& b) {
  if (!a) return b;
  if (!b) return a;
  if (a->value != b->value) return a->value > b->value ? a : b;
  return Bound{a->value, a->inclusive && b->inclusive};
}

std::optional<Bound> min_upper(const std::optional<Bound>& a, const std::optional<Bound>& b) {
  if (!a) return b;
  if (!b) return a;
  if (a->value != b->value) return a->value < b->value ? a : b;
  return Bound{a->value, a->inclusive && b->inclusive};
}

// outer lower bound admits everything inner's lower bound admits.
bool lower_contains(const std::optional<Bound>& outer, const std::optional<Bound>& inner) {
  if (!outer) return true;
  if (!inner) return false;
  if (inner->value != outer->value) return inner->value > outer->value;
  return outer->inclusive || !inner->inclusive;
}

bool upper_contains(const std::optional<Bound>& outer, const std::optional<Bound>& inner) {
  if (!outer) return true;
  if (!inner) return false;
  if (inner->value != outer->value) return inner->value < outer->value;
  return outer->inclusive || !inner->inclusive;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string wrap_if(bool cond, std::string s) { return cond ? "(" + s + ")" : s; }

void push_unique(std::vector<ConjunctiveClause>& out, ConjunctiveClause clause) {
  if (clause.is_empty()) return;
  if (std::find(out.begin(), out.end(), clause) == out.end()) out.push_back(std::move(clause));
}

std::vector<ConjunctiveClause> expand(const BoolExpr& expr) {
  std::vector<ConjunctiveClause> out;
  switch (expr.kind()) {
    case BoolExpr::Kind::kAtom: {
      ConjunctiveClause c;
      c.add(expr.as_atom());
      push_unique(out, std::move(c));
      break;
    }
    case BoolExpr::Kind::kOr:
      for (const auto& child : expr.children()) {
        for (auto& c : expand(child)) push_unique(out, std::move(c));
        if (out.size() > kMaxDnfClauses) break;
      }
      break;
    case BoolExpr::Kind::kAnd: {
      out.push_back(ConjunctiveClause{});
      for (const auto& child : expr.children()) {
        const auto rhs = expand(child);
        std::vector<ConjunctiveClause> next;
        for (const auto& l : out) {
          for (const auto& r : rhs) {
            ConjunctiveClause c = l;
            for (const auto& [col, atom] : r.atoms()) c.add(atom);
            push_unique(next, std::move(c));
            if (next.size() > kMaxDnfClauses) break;
          }
          if (next.size() > kMaxDnfClauses) break;
        }
        out = std::move(next);
        if (out.empty() || out.size() > kMaxDnfClauses) break;
      }
      break;
    }
  }
  if (out.size() > kMaxDnfClauses) {
    throw FilterError("filter expands to more than " + std::to_string(kMaxDnfClauses) + " DNF clauses");
  }
  return out;
}

}  // namespace

AtomicPredicate AtomicPredicate::range(std::size_t column, std::optional<Bound> lower, std::optional<Bound> upper) {
  if (!lower && !upper) throw FilterError("range needs at least one bound");
  if ((lower && !std::isfinite(lower->value)) || (upper && !std::isfinite(upper->value))) {
    throw FilterError("range bounds must be finite");
  }
  if (!valid_interval(lower, upper)) throw FilterError("empty range");
  return AtomicPredicate(RangeAtom{column, lower, upper});
}

AtomicPredicate AtomicPredicate::at_least(std::size_t column, double value, bool inclusive) {
  return range(column, Bound{value, inclusive}, std::nullopt);
}

AtomicPredicate AtomicPredicate::at_most(std::size_t column, double value, bool inclusive) {
  return range(column, std::nullopt, Bound{value, inclusive});
}

AtomicPredicate AtomicPredicate::between(std::size_t column, double lower, double upper) {
  return range(column, Bound{lower, true}, Bound{upper, true});
}

AtomicPredicate AtomicPredicate::in_set(std::size_t column, std::set<std::string> values) {
  if (values.empty()) throw FilterError("IN set must not be empty");
  return AtomicPredicate(InSetAtom{column, std::move(values)});
}

std::size_t AtomicPredicate::column() const {
  return std::visit([](const auto& a) { return a.column; }, atom_);
}

std::optional<AtomicPredicate> intersect(const AtomicPredicate& a, const AtomicPredicate& b) {
  if (a.column() != b.column()) throw FilterError("cannot intersect atoms on different attributes");
  if (a.is_range() != b.is_range()) throw FilterError("cannot intersect a range with a set");
  if (a.is_range()) {
    auto lower = max_lower(a.as_range().lower, b.as_range().lower);
    auto upper = min_upper(a.as_range().upper, b.as_range().upper);
    if (!valid_interval(lower, upper)) return std::nullopt;
    return AtomicPredicate::range(a.column(), lower, upper);
  }
  std::set<std::string> common;
  const auto& x = a.as_in_set().values;
  const auto& y = b.as_in_set().values;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::inserter(common, common.end()));
  if (common.empty()) return std::nullopt;
  return AtomicPredicate::in_set(a.column(), std::move(common));
}

bool contains(const AtomicPredicate& outer, const AtomicPredicate& inner) {
  if (outer.column() != inner.column() || outer.is_range() != inner.is_range()) return false;
  if (outer.is_range()) {
    const auto& o = outer.as_range();
    const auto& i = inner.as_range();
    return lower_contains(o.lower, i.lower) && upper_contains(o.upper, i.upper);
  }
  const auto& o = outer.as_in_set().values;
  const auto& i = inner.as_in_set().values;
  return std::includes(o.begin(), o.end(), i.begin(), i.end());
}

ConjunctiveClause ConjunctiveClause::unsatisfiable() {
  ConjunctiveClause c;
  c.empty_ = true;
  return c;
}

void ConjunctiveClause::add(const AtomicPredicate& atom) {
  if (empty_) return;
  auto it = atoms_.find(atom.column());
  if (it == atoms_.end()) {
    atoms_.emplace(atom.column(), atom);
    return;
  }
  auto merged = intersect(it->second, atom);
  if (!merged) {
    atoms_.clear();
    empty_ = true;
    return;
  }
  it->second = std::move(*merged);
}

const AtomicPredicate* ConjunctiveClause::constraint(std::size_t column) const {
  auto it = atoms_.find(column);
  return it == atoms_.end() ? nullptr : &it->second;
}

ConjunctiveClause conjoin_simplify(const ConjunctiveClause& clause, const AtomicPredicate& atom) {
  ConjunctiveClause out = clause;
  out.add(atom);
  return out;
}

ConjunctiveClause conjoin_simplify(const ConjunctiveClause& clause, const NodePredicate& region) {
  if (region.is_all()) return clause;
  return conjoin_simplify(clause, region.atom());
}

DnfPredicate::DnfPredicate(std::vector<ConjunctiveClause> clauses) {
  for (auto& c : clauses) {
    if (c.is_unconstrained()) {
      clauses_.assign(1, ConjunctiveClause{});
      return;
    }
    push_unique(clauses_, std::move(c));
  }
  if (clauses_.empty()) throw UnsatisfiableFilter();
}

bool DnfPredicate::is_always_true() const { return clauses_.size() == 1 && clauses_[0].is_unconstrained(); }

BoolExpr DnfPredicate::to_expr() const {
  std::vector<BoolExpr> terms;
  for (const auto& c : clauses_) {
    if (c.is_unconstrained()) throw FilterError("an always-true filter has no expression form");
    std::vector<BoolExpr> atoms;
    for (const auto& [col, atom] : c.atoms()) atoms.push_back(BoolExpr::atom(atom));
    terms.push_back(BoolExpr::all_of(std::move(atoms)));
  }
  return BoolExpr::any_of(std::move(terms));
}

BoolExpr BoolExpr::atom(AtomicPredicate atom) {
  BoolExpr e;
  e.kind_ = Kind::kAtom;
  e.atom_ = std::move(atom);
  return e;
}

BoolExpr BoolExpr::all_of(std::vector<BoolExpr> children) {
  if (children.empty()) throw FilterError("AND needs at least one operand");
  if (children.size() == 1) return std::move(children.front());
  BoolExpr e;
  e.kind_ = Kind::kAnd;
  e.children_ = std::move(children);
  return e;
}

BoolExpr BoolExpr::any_of(std::vector<BoolExpr> children) {
  if (children.empty()) throw FilterError("OR needs at least one operand");
  if (children.size() == 1) return std::move(children.front());
  BoolExpr e;
  e.kind_ = Kind::kOr;
  e.children_ = std::move(children);
  return e;
}

DnfPredicate to_dnf(const BoolExpr& expr) { return DnfPredicate(expand(expr)); }

bool eval(const AtomicPredicate& atom, const Tuple& tuple) {
  const auto& cell = tuple.attrs.at(atom.column());
  if (atom.is_range()) {
    const double* v = std::get_if<double>(&cell);
    return v != nullptr && in_range(atom.as_range(), *v);
  }
  const std::string* s = std::get_if<std::string>(&cell);
  return s != nullptr && atom.as_in_set().values.count(*s) > 0;
}

bool eval(const ConjunctiveClause& clause, const Tuple& tuple) {
  if (clause.is_empty()) return false;
  for (const auto& [col, atom] : clause.atoms()) {
    if (!eval(atom, tuple)) return false;
  }
  return true;
}

bool eval(const DnfPredicate& predicate, const Tuple& tuple) {
  for (const auto& c : predicate.clauses()) {
    if (eval(c, tuple)) return true;
  }
  return false;
}

bool eval(const NodePredicate& predicate, const Tuple& tuple) {
  return predicate.is_all() || eval(predicate.atom(), tuple);
}

bool eval(const BoolExpr& expr, const Tuple& tuple) {
  switch (expr.kind()) {
    case BoolExpr::Kind::kAtom:
      return eval(expr.as_atom(), tuple);
    case BoolExpr::Kind::kAnd:
      return std::all_of(expr.children().begin(), expr.children().end(),
                         [&](const BoolExpr& c) { return eval(c, tuple); });
    case BoolExpr::Kind::kOr:
      return std::any_of(expr.children().begin(), expr.children().end(),
                         [&](const BoolExpr& c) { return eval(c, tuple); });
  }
  return false;
}

bool eval(const AtomicPredicate& atom, const Relation& relation, Key pk) {
  const std::size_t col = atom.column();
  if (relation.schema().at(col).kind == AttributeKind::kNumeric) {
    return atom.is_range() && in_range(atom.as_range(), relation.numeric(col, pk));
  }
  return !atom.is_range() && atom.as_in_set().values.count(relation.category(col, pk)) > 0;
}

bool eval(const ConjunctiveClause& clause, const Relation& relation, Key pk) {
  if (clause.is_empty()) return false;
  for (const auto& [col, atom] : clause.atoms()) {
    if (!eval(atom, relation, pk)) return false;
  }
  return true;
}

bool eval(const DnfPredicate& predicate, const Relation& relation, Key pk) {
  for (const auto& c : predicate.clauses()) {
    if (eval(c, relation, pk)) return true;
  }
  return false;
}

bool eval(const NodePredicate& predicate, const Relation& relation, Key pk) {
  return predicate.is_all() || eval(predicate.atom(), relation, pk);
}

bool eval(const BoolExpr& expr, const Relation& relation, Key pk) {
  switch (expr.kind()) {
    case BoolExpr::Kind::kAtom:
      return eval(expr.as_atom(), relation, pk);
    case BoolExpr::Kind::kAnd:
      return std::all_of(expr.children().begin(), expr.children().end(),
                         [&](const BoolExpr& c) { return eval(c, relation, pk); });
    case BoolExpr::Kind::kOr:
      return std::any_of(expr.children().begin(), expr.children().end(),
                         [&](const BoolExpr& c) { return eval(c, relation, pk); });
  }
  return false;
}

bool covers(const NodePredicate& node, const ConjunctiveClause& clause) {
  if (clause.is_empty() || node.is_all()) return true;
  const AtomicPredicate* c = clause.constraint(node.atom().column());
  return c != nullptr && contains(node.atom(), *c);
}

bool overlaps(const NodePredicate& node, const ConjunctiveClause& clause) {
  if (clause.is_empty()) return false;
  if (node.is_all()) return true;
  const AtomicPredicate* c = clause.constraint(node.atom().column());
  if (c == nullptr) return true;
  return intersect(node.atom(), *c).has_value();
}

std::string to_string(const AtomicPredicate& atom, const Schema& schema) {
  const std::string& name = schema.at(atom.column()).name;
  if (!atom.is_range()) {
    std::string out = name + " IN (";
    bool first = true;
    for (const auto& v : atom.as_in_set().values) {
      if (!first) out += ", ";
      out += quote(v);
      first = false;
    }
    return out + ")";
  }
  const auto& r = atom.as_range();
  if (r.lower && r.upper) {
    if (r.lower->value == r.upper->value) return name + " = " + format_double(r.lower->value);
    return format_double(r.lower->value) + (r.lower->inclusive ? " <= " : " < ") + name +
           (r.upper->inclusive ? " <= " : " < ") + format_double(r.upper->value);
  }
  if (r.lower) return name + (r.lower->inclusive ? " >= " : " > ") + format_double(r.lower->value);
  return name + (r.upper->inclusive ? " <= " : " < ") + format_double(r.upper->value);
}

std::string to_string(const ConjunctiveClause& clause, const Schema& schema) {
  if (clause.is_empty()) return "FALSE";
  if (clause.is_unconstrained()) return "TRUE";
  std::string out;
  for (const auto& [col, atom] : clause.atoms()) {
    if (!out.empty()) out += " AND ";
    out += to_string(atom, schema);
  }
  return out;
}

std::string to_string(const DnfPredicate& predicate, const Schema& schema) {
  const auto& clauses = predicate.clauses();
  if (clauses.size() == 1) return to_string(clauses[0], schema);
  std::string out;
  for (const auto& c : clauses) {
    if (!out.empty()) out += " OR ";
    out += wrap_if(c.atoms().size() > 1, to_string(c, schema));
  }
  return out;
}

std::string to_string(const BoolExpr& expr, const Schema& schema) {
  if (expr.kind() == BoolExpr::Kind::kAtom) return to_string(expr.as_atom(), schema);
  const bool is_and = expr.kind() == BoolExpr::Kind::kAnd;
  std::string out;
  for (const auto& child : expr.children()) {
    if (!out.empty()) out += is_and ? " AND " : " OR ";
    // Parenthesize any nested operator so re-parsing keeps the tree shape.
    out += wrap_if(child.kind() != BoolExpr::Kind::kAtom, to_string(child, schema));
  }
  return out;
}

std::string to_string(const NodePredicate& predicate, const Schema& schema) {
  return predicate.is_all() ? "ALL" : to_string(predicate.atom(), schema);
}

RowMatcher::RowMatcher(const DnfPredicate& predicate, const Relation& relation) {
  if (predicate.is_always_true()) {
    always_true_ = true;
    return;
  }
  const Schema& schema = relation.schema();
  for (const auto& clause : predicate.clauses()) {
    std::vector<Test> tests;
    bool satisfiable = true;
    for (const auto& [col, atom] : clause.atoms()) {
      if (col >= schema.size()) throw FilterError("filter references column " + std::to_string(col) + " beyond schema");
      const bool numeric = schema.at(col).kind == AttributeKind::kNumeric;
      if (numeric != atom.is_range()) {
        throw FilterError("filter atom kind does not match attribute '" + schema.at(col).name + "'");
      }
      Test t;
      t.numeric = numeric;
      if (numeric) {
        const auto& r = atom.as_range();
        t.values = relation.numeric_column(col).data();
        t.has_lower = r.lower.has_value();
        t.has_upper = r.upper.has_value();
        if (r.lower) {
          t.lower = r.lower->value;
          t.lower_inclusive = r.lower->inclusive;
        }
        if (r.upper) {
          t.upper = r.upper->value;
          t.upper_inclusive = r.upper->inclusive;
        }
      } else {
        t.codes = relation.category_codes(col).data();
        t.accepted.assign(relation.dictionary(col).size(), 0);
        bool any = false;
        for (const auto& v : atom.as_in_set().values) {
          if (auto code = relation.code_of(col, v)) {
            t.accepted[*code] = 1;
            any = true;
          }
        }
        if (!any) satisfiable = false;
      }
      tests.push_back(std::move(t));
    }
    if (satisfiable) clauses_.push_back(std::move(tests));
  }
}

bool RowMatcher::operator()(Key pk) const {
  if (always_true_) return true;
  for (const auto& tests : clauses_) {
    bool ok = true;
    for (const auto& t : tests) {
      if (t.numeric) {
        const double v = t.values[pk];
        if (t.has_lower && (t.lower_inclusive ? v < t.lower : v <= t.lower)) {
          ok = false;
          break;
        }
        if (t.has_upper && (t.upper_inclusive ? v > t.upper : v >= t.upper)) {
          ok = false;
          break;
        }
      } else if (!t.accepted[t.codes[pk]]) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace pathfinder
