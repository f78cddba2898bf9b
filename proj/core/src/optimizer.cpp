#include "pathfinder/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pathfinder/error.hpp"

namespace pathfinder {

void PlannerConfig::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0) throw std::invalid_argument("planner alpha must be finite and >= 0");
  if (!std::isfinite(correlation_threshold)) throw std::invalid_argument("correlation threshold must be finite");
}

GraphSet make_graph_set(std::vector<NodeId> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

bool ranks_before(const RankKey& a, const RankKey& b) {
  if (a.covering != b.covering) return a.covering;
  if (a.value != b.value) return a.value < b.value;
  if (a.graphs != b.graphs) return a.graphs < b.graphs;
  if (a.total_card != b.total_card) return a.total_card < b.total_card;
  return a.nodes < b.nodes;
}

RankKey rank(const IndexCatalog& catalog, std::span<const NodeId> graphs, bool covering, const PlannerConfig& config) {
  if (graphs.empty()) throw std::invalid_argument("cannot rank an empty graph set");
  RankKey key;
  key.covering = covering;
  key.nodes = make_graph_set(std::vector<NodeId>(graphs.begin(), graphs.end()));
  key.graphs = key.nodes.size();
  for (NodeId id : key.nodes) key.total_card += catalog.node(id).card;
  key.value = static_cast<double>(key.total_card) * std::pow(static_cast<double>(key.graphs), config.alpha);
  return key;
}

NodeId find_single_graph(const IndexCatalog& catalog, std::size_t index, NodeId start,
                         const ConjunctiveClause& clause) {
  NodeId g = start;
  for (;;) {
    const auto children = catalog.children(index, g);
    if (children.empty()) return g;
    bool descended = false;
    for (NodeId c : children) {
      if (covers(catalog.node(c).predicate, clause)) {
        g = c;
        descended = true;
        break;
      }
    }
    if (!descended) return g;
  }
}

GraphSet find_second_plan(const IndexCatalog& catalog, std::size_t index, NodeId start,
                          const ConjunctiveClause& clause) {
  std::vector<NodeId> out;
  for (NodeId c : catalog.children(index, start)) {
    const NodePredicate& region = catalog.node(c).predicate;
    if (overlaps(region, clause)) {
      out.push_back(find_single_graph(catalog, index, c, conjoin_simplify(clause, region)));
    }
  }
  return make_graph_set(std::move(out));
}

namespace {

bool overlaps_range(const AttributeRange& range, const AtomicPredicate& source) {
  auto region = range.as_predicate(source.column());
  return intersect(region, source).has_value();
}

void check_source(const IndexCatalog& catalog, const AtomicPredicate& source) {
  if (source.column() >= catalog.relation().schema().size()) throw FilterError("borrowing source column out of range");
  const bool numeric = catalog.relation().schema().at(source.column()).kind == AttributeKind::kNumeric;
  if (numeric != source.is_range()) throw FilterError("borrowing source atom does not match its attribute kind");
}

std::string set_text(const GraphSet& set) {
  std::string out = "{";
  for (std::size_t i = 0; i < set.size(); ++i) out += (i ? ", g" : "g") + std::to_string(set[i]);
  return out + "}";
}

std::string index_label(const IndexCatalog& catalog, std::optional<std::size_t> index) {
  if (!index) return "root";
  const auto& idx = catalog.index(*index);
  return std::string(to_string(idx.kind)) + ":" + catalog.relation().schema().at(idx.column).name;
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  std::string s = os.str();
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

Synthesis synthesize_pred_hash(const IndexCatalog& catalog, std::size_t index, const AtomicPredicate& source) {
  check_source(catalog, source);
  const auto& idx = catalog.index(index);
  if (idx.kind != IndexKind::kHash) throw std::invalid_argument("synthesize_pred_hash needs a hash index");
  std::set<std::string> matched;
  for (NodeId leaf : idx.leaves) {
    const IndexNode& n = catalog.node(leaf);
    if (overlaps_range(n.attr_ranges[source.column()], source)) {
      const auto& cats = n.predicate.atom().as_in_set().values;
      matched.insert(cats.begin(), cats.end());
    }
  }
  Synthesis out;
  if (matched.empty()) {
    out.outcome = Synthesis::Outcome::kNoMatch;
    return out;
  }
  out.outcome = Synthesis::Outcome::kPredicate;
  out.predicate = AtomicPredicate::in_set(idx.column, std::move(matched));
  return out;
}

// Bounds come from the predicate regions of the first and last overlapping
// leaves, so the result is exactly a union of leaf regions.
Synthesis synthesize_pred_tree(const IndexCatalog& catalog, std::size_t index, const AtomicPredicate& source) {
  check_source(catalog, source);
  const auto& idx = catalog.index(index);
  if (idx.kind != IndexKind::kTree) throw std::invalid_argument("synthesize_pred_tree needs a tree index");
  const auto& leaves = idx.leaves;
  std::optional<std::size_t> first;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (overlaps_range(catalog.node(leaves[i]).attr_ranges[source.column()], source)) {
      first = i;
      break;
    }
  }
  for (std::size_t i = leaves.size(); i-- > 0;) {
    if (overlaps_range(catalog.node(leaves[i]).attr_ranges[source.column()], source)) {
      last = i;
      break;
    }
  }
  Synthesis out;
  if (!first) {
    out.outcome = Synthesis::Outcome::kNoMatch;
    return out;
  }
  const auto& lo = catalog.node(leaves[*first]).predicate.atom().as_range();
  const auto& hi = catalog.node(leaves[*last]).predicate.atom().as_range();
  if (!lo.lower && !hi.upper) {
    out.outcome = Synthesis::Outcome::kUnconstrained;
    return out;
  }
  out.outcome = Synthesis::Outcome::kPredicate;
  out.predicate = AtomicPredicate::range(idx.column, lo.lower, hi.upper);
  return out;
}

BorrowResult borrow_rewrite(const ConjunctiveClause& clause, const IndexCatalog& catalog, const PlannerConfig& config) {
  BorrowResult result;
  result.planned = clause;
  if (clause.is_empty()) return result;
  for (const auto& [column, atom] : clause.atoms()) {
    if (catalog.index_on(column)) continue;
    std::optional<std::size_t> best;
    double best_score = -1.0;
    for (std::size_t i = 0; i < catalog.indexes().size(); ++i) {
      const std::size_t a = catalog.index(i).column;
      if (clause.constraint(a) != nullptr) continue;  // attribute already involved in the clause
      const double score = catalog.correlation(a, column);
      if (score >= config.correlation_threshold && score > best_score) {
        best = i;
        best_score = score;
      }
    }
    if (!best) continue;
    BorrowRewrite rw;
    rw.source_column = column;
    rw.index = *best;
    rw.score = best_score;
    rw.synthesis = catalog.index(*best).kind == IndexKind::kTree ? synthesize_pred_tree(catalog, *best, atom)
                                                                 : synthesize_pred_hash(catalog, *best, atom);
    result.planned.erase(column);
    switch (rw.synthesis.outcome) {
      case Synthesis::Outcome::kNoMatch:
        result.proven_empty = true;
        break;
      case Synthesis::Outcome::kPredicate:
        // Two rewrites onto one attribute intersect; both cover their sources.
        result.planned.add(*rw.synthesis.predicate);
        break;
      case Synthesis::Outcome::kUnconstrained:
        break;
    }
    result.rewrites.push_back(std::move(rw));
  }
  if (result.planned.is_empty()) result.proven_empty = true;
  return result;
}

ClausePlan plan_conjunction(const ConjunctiveClause& clause, const IndexCatalog& catalog,
                            const PlannerConfig& config) {
  config.validate();
  ClausePlan plan;
  plan.clause = clause;
  if (config.borrowing_enabled) {
    plan.borrow = borrow_rewrite(clause, catalog, config);
  } else {
    plan.borrow.planned = clause;
  }
  if (clause.is_empty()) plan.borrow.proven_empty = true;
  if (plan.borrow.proven_empty) return plan;

  const ConjunctiveClause& planned = plan.borrow.planned;
  auto add_candidate = [&](std::optional<std::size_t> index, GraphSet graphs) {
    if (graphs.empty()) return;
    for (const auto& c : plan.candidates) {
      if (c.graphs == graphs) return;
    }
    RankKey key = rank(catalog, graphs, true, config);
    plan.candidates.push_back({index, std::move(graphs), std::move(key)});
  };
  for (std::size_t i = 0; i < catalog.indexes().size(); ++i) {
    if (planned.constraint(catalog.index(i).column) == nullptr) continue;
    const NodeId single = find_single_graph(catalog, i, kRootNode, planned);
    add_candidate(i, {single});
    if (!catalog.is_leaf(i, single)) add_candidate(i, find_second_plan(catalog, i, single, planned));
  }
  if (plan.candidates.empty()) add_candidate(std::nullopt, {kRootNode});

  const PlanCandidate* best = &plan.candidates.front();
  for (const auto& c : plan.candidates) {
    if (ranks_before(c.key, best->key)) best = &c;
  }
  plan.chosen = best->graphs;
  return plan;
}

GraphSet optimize_disjunction_group(const IndexCatalog& catalog, std::size_t index, const GraphSet& group,
                                    const DnfPredicate& predicate, const PlannerConfig& config) {
  (void)predicate;  // p ∧ p_p only scales the utility numerator, which the rank key omits
  const auto& idx = catalog.index(index);
  std::set<NodeId> g(group.begin(), group.end());
  for (NodeId id : g) {
    if (id != kRootNode && catalog.node(id).index != index) {
      throw std::invalid_argument("node " + std::to_string(id) + " does not belong to the index");
    }
  }
  std::map<NodeId, GraphSet> plan;
  for (NodeId leaf : idx.leaves) {
    if (g.count(leaf)) plan[leaf] = {leaf};
  }
  std::vector<NodeId> order;  // non-leaf nodes, bottom-up, ending at the shared root
  for (auto it = idx.nodes.rbegin(); it != idx.nodes.rend(); ++it) {
    if (!catalog.is_leaf(index, *it)) order.push_back(*it);
  }
  order.push_back(kRootNode);

  for (NodeId gp : order) {
    std::vector<NodeId> s;
    for (NodeId c : catalog.children(index, gp)) {
      auto it = plan.find(c);
      if (it != plan.end()) s.insert(s.end(), it->second.begin(), it->second.end());
    }
    GraphSet S = make_graph_set(std::move(s));
    if (S.empty()) {
      // Nothing below to replace; {g_p} would only add a graph.
      if (g.count(gp)) plan[gp] = {gp};
      continue;
    }
    const NodeId single[1] = {gp};
    if (ranks_before(rank(catalog, single, true, config), rank(catalog, S, true, config))) {
      plan[gp] = {gp};
      for (NodeId n : S) g.erase(n);
      g.insert(gp);
    } else if (!g.count(gp)) {
      plan[gp] = std::move(S);
    } else {
      plan[gp] = {gp};
    }
  }
  return GraphSet(g.begin(), g.end());
}

GraphSet GraphSearchPlan::nodes() const {
  GraphSet out;
  for (const auto& e : entries) out.push_back(e.node);
  return out;
}

GraphSearchPlan plan_query(const DnfPredicate& predicate, const IndexCatalog& catalog, const PlannerConfig& config,
                           PlanExplanation* explanation) {
  config.validate();
  std::vector<ClausePlan> clause_plans;
  std::map<NodeId, std::set<std::size_t>> served;  // node -> clauses
  for (std::size_t i = 0; i < predicate.clauses().size(); ++i) {
    clause_plans.push_back(plan_conjunction(predicate.clauses()[i], catalog, config));
    for (NodeId n : clause_plans.back().chosen) served[n].insert(i);
  }

  GraphSearchPlan plan;
  if (served.empty()) {
    plan.proven_empty = true;
    if (explanation) explanation->clauses = std::move(clause_plans);
    return plan;
  }

  // Group by owning index; the root joins every group as the top node.
  const bool root_selected = served.count(kRootNode) > 0;
  std::map<std::size_t, GraphSet> groups;
  for (const auto& [n, clauses] : served) {
    if (n != kRootNode) groups[*catalog.node(n).index].push_back(n);
  }
  std::vector<GroupTrace> traces;
  std::set<NodeId> final_nodes;
  if (root_selected) final_nodes.insert(kRootNode);
  for (auto& [index, nodes] : groups) {
    if (root_selected) nodes.push_back(kRootNode);
    GraphSet input = make_graph_set(nodes);
    GraphSet output = optimize_disjunction_group(catalog, index, input, predicate, config);
    // Provenance: a replacing ancestor serves every clause of the nodes it absorbed.
    for (NodeId out : output) {
      if (served.count(out)) continue;
      std::set<std::size_t> merged;
      for (NodeId in : input) {
        if (std::find(output.begin(), output.end(), in) != output.end()) continue;
        NodeId up = in;
        while (up != kNoParent && up != out) up = catalog.node(up).parent;
        if (up == out) merged.insert(served[in].begin(), served[in].end());
      }
      served[out] = std::move(merged);
    }
    final_nodes.insert(output.begin(), output.end());
    traces.push_back({index, input, output, rank(catalog, input, true, config).value,
                      rank(catalog, output, true, config).value});
  }

  for (NodeId n : final_nodes) {
    const IndexNode& node = catalog.node(n);
    plan.entries.push_back({node.index, n, node.card, std::vector<std::size_t>(served[n].begin(), served[n].end())});
  }
  if (explanation) {
    explanation->clauses = std::move(clause_plans);
    explanation->groups = std::move(traces);
  }
  return plan;
}

std::string format_explanation(const IndexCatalog& catalog, const DnfPredicate& predicate,
                               const GraphSearchPlan& plan, const PlanExplanation& explanation,
                               const PlannerConfig& config) {
  const Schema& schema = catalog.relation().schema();
  std::ostringstream os;
  os << "dnf: " << to_string(predicate, schema) << '\n';
  os << "alpha: " << number(config.alpha) << "  borrowing: " << (config.borrowing_enabled ? "on" : "off")
     << "  threshold: " << number(config.correlation_threshold) << '\n';
  for (std::size_t i = 0; i < explanation.clauses.size(); ++i) {
    const ClausePlan& cp = explanation.clauses[i];
    os << "clause " << i << ": " << to_string(cp.clause, schema) << '\n';
    for (const auto& rw : cp.borrow.rewrites) {
      os << "  borrow " << schema.at(rw.source_column).name << " -> " << index_label(catalog, rw.index)
         << " score=" << number(rw.score) << ": ";
      switch (rw.synthesis.outcome) {
        case Synthesis::Outcome::kPredicate:
          os << to_string(*rw.synthesis.predicate, schema);
          break;
        case Synthesis::Outcome::kUnconstrained:
          os << "unconstrained";
          break;
        case Synthesis::Outcome::kNoMatch:
          os << "no match";
          break;
      }
      os << '\n';
    }
    if (!cp.borrow.rewrites.empty()) os << "  planned as: " << to_string(cp.borrow.planned, schema) << '\n';
    if (cp.borrow.proven_empty) {
      os << "  proven empty\n";
      continue;
    }
    for (const auto& c : cp.candidates) {
      os << "  candidate " << index_label(catalog, c.index) << ' ' << set_text(c.graphs)
         << " value=" << number(c.key.value) << " card=" << c.key.total_card << '\n';
    }
    os << "  chosen " << set_text(cp.chosen) << '\n';
  }
  for (const auto& g : explanation.groups) {
    os << "group " << index_label(catalog, g.index) << ": " << set_text(g.input) << " value=" << number(g.input_value)
       << " -> " << set_text(g.output) << " value=" << number(g.output_value) << '\n';
  }
  if (plan.proven_empty) {
    os << "plan: empty (no tuple can match)\n";
    return os.str();
  }
  os << "plan:\n";
  for (const auto& e : plan.entries) {
    os << "  " << index_label(catalog, e.index) << " g" << e.node << " card=" << e.card << '\n';
  }
  return os.str();
}

}  // namespace pathfinder
