#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "pathfinder/error.hpp"
#include "pathfinder/filter_parser.hpp"
#include "pathfinder/optimizer.hpp"
#include "reference.hpp"

using namespace pathfinder;

namespace {

ConjunctiveClause clause_of(const IndexCatalog& cat, std::string_view text) {
  const auto dnf = parse_dnf(text, cat.relation().schema());
  EXPECT_EQ(dnf.clauses().size(), 1u);
  return dnf.clauses().front();
}

std::set<GraphSet> candidate_sets(const ClausePlan& p) {
  std::set<GraphSet> out;
  for (const auto& c : p.candidates) out.insert(c.graphs);
  return out;
}

// Every tuple matching the predicate lives in some planned graph.
bool plan_covers(const IndexCatalog& cat, const GraphSearchPlan& plan, const BoolExpr& expr) {
  for (Key pk = 0; pk < cat.relation().size(); ++pk) {
    if (!pftest::reference_eval(expr, cat.relation(), pk)) continue;
    bool found = false;
    for (const auto& e : plan.entries) found = found || cat.node(e.node).graph->contains(pk);
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST(Rank, ValueIsCardTimesCountPenalty) {
  const auto cat = pftest::citation_topic_catalog();
  PlannerConfig cfg;
  const NodeId pair[] = {2, 5};
  const auto k = rank(cat, pair, true, cfg);
  EXPECT_EQ(k.total_card, 90u);
  EXPECT_EQ(k.graphs, 2u);
  EXPECT_NEAR(k.value, 90.0 * std::pow(2.0, 0.4), 1e-9);
  EXPECT_THROW(rank(cat, std::span<const NodeId>{}, true, cfg), std::invalid_argument);
  cfg.alpha = 0.0;
  EXPECT_DOUBLE_EQ(rank(cat, pair, true, cfg).value, 90.0);
}

TEST(Rank, TotalOrder) {
  RankKey a{10, true, 2, 5, {1, 2}};
  RankKey b{10, true, 1, 10, {3}};
  RankKey c{5, false, 1, 5, {4}};
  EXPECT_TRUE(ranks_before(b, a));
  EXPECT_TRUE(ranks_before(a, c));
  RankKey d{10, true, 2, 5, {1, 3}};
  EXPECT_TRUE(ranks_before(a, d));
  EXPECT_FALSE(ranks_before(a, a));
  RankKey e{10, true, 2, 4, {5, 6}};
  EXPECT_TRUE(ranks_before(e, a));
}

TEST(Conjunction, WorkedCandidateSet) {
  const auto cat = pftest::citation_topic_catalog();
  const auto clause = clause_of(cat, "2 <= citations <= 10 AND topic = \"DB\"");
  EXPECT_EQ(find_single_graph(cat, 0, kRootNode, clause), kRootNode);
  EXPECT_EQ(find_second_plan(cat, 0, kRootNode, clause), (GraphSet{2, 5}));
  EXPECT_EQ(find_single_graph(cat, 1, kRootNode, clause), 10u);
  const auto plan = plan_conjunction(clause, cat, PlannerConfig{});
  EXPECT_EQ(candidate_sets(plan), (std::set<GraphSet>{{10}, {0}, {2, 5}}));
  EXPECT_EQ(plan.chosen, (GraphSet{10}));
}

TEST(Conjunction, DescendsToCoveringLeaf) {
  const auto cat = pftest::citation_topic_catalog();
  const auto clause = clause_of(cat, "8 <= citations <= 9");
  EXPECT_EQ(find_single_graph(cat, 0, kRootNode, clause), 7u);
  EXPECT_EQ(plan_conjunction(clause, cat, PlannerConfig{}).chosen, (GraphSet{7}));
}

TEST(Conjunction, MonotoneAlongCoveringPaths) {
  const auto cat = pftest::citation_topic_catalog();
  const auto clause = clause_of(cat, "2 <= citations <= 3");
  PlannerConfig cfg;
  NodeId child = 5;
  NodeId parent = cat.node(child).parent;
  ASSERT_TRUE(covers(cat.node(parent).predicate, clause));
  const NodeId c[] = {child}, p[] = {parent}, r[] = {kRootNode};
  EXPECT_TRUE(ranks_before(rank(cat, c, true, cfg), rank(cat, p, true, cfg)));
  EXPECT_TRUE(ranks_before(rank(cat, p, true, cfg), rank(cat, r, true, cfg)));
}

TEST(Conjunction, FallsBackToRoot) {
  const auto cat = pftest::citation_topic_catalog();
  PlannerConfig cfg;
  cfg.borrowing_enabled = false;
  const auto plan = plan_conjunction(clause_of(cat, "year >= 2003"), cat, cfg);
  ASSERT_EQ(plan.candidates.size(), 1u);
  EXPECT_FALSE(plan.candidates[0].index.has_value());
  EXPECT_EQ(plan.chosen, (GraphSet{kRootNode}));
}

TEST(Borrowing, TreeSynthesisFromLeafRanges) {
  const auto cat = pftest::borrowing_catalog();
  const auto& schema = cat.relation().schema();
  const auto s = synthesize_pred_tree(cat, 0, AtomicPredicate::at_most(1, 6));
  ASSERT_EQ(s.outcome, Synthesis::Outcome::kPredicate);
  EXPECT_EQ(to_string(*s.predicate, schema), "a <= 8");
  const auto mid = synthesize_pred_tree(cat, 0, AtomicPredicate::between(1, 9, 9.5));
  ASSERT_EQ(mid.outcome, Synthesis::Outcome::kPredicate);
  EXPECT_EQ(to_string(*mid.predicate, schema), "8 < a <= 12");
  EXPECT_EQ(synthesize_pred_tree(cat, 0, AtomicPredicate::at_most(1, 2)).outcome, Synthesis::Outcome::kNoMatch);
  EXPECT_EQ(synthesize_pred_tree(cat, 0, AtomicPredicate::at_least(1, 0)).outcome,
            Synthesis::Outcome::kUnconstrained);
}

TEST(Borrowing, RewritesUnindexedAtomForPlanningOnly) {
  const auto cat = pftest::borrowing_catalog();
  const auto clause = clause_of(cat, "b <= 6");
  const auto plan = plan_conjunction(clause, cat, PlannerConfig{});
  ASSERT_EQ(plan.borrow.rewrites.size(), 1u);
  EXPECT_EQ(plan.borrow.rewrites[0].index, 0u);
  EXPECT_GE(plan.borrow.rewrites[0].score, 0.9);
  EXPECT_EQ(to_string(plan.borrow.planned, cat.relation().schema()), "a <= 8");
  EXPECT_EQ(candidate_sets(plan), (std::set<GraphSet>{{1}, {3, 4}}));
  EXPECT_EQ(plan.clause, clause);

  PlannerConfig strict;
  strict.correlation_threshold = 1.01;
  const auto gated = plan_conjunction(clause, cat, strict);
  EXPECT_TRUE(gated.borrow.rewrites.empty());
  EXPECT_EQ(gated.chosen, (GraphSet{kRootNode}));
}

TEST(Borrowing, IndexedAttributesAreNotRewritten) {
  const auto cat = pftest::borrowing_catalog();
  // a is constrained, so b has no index left to borrow.
  const auto plan = plan_conjunction(clause_of(cat, "b <= 6 AND a >= 2"), cat, PlannerConfig{});
  EXPECT_TRUE(plan.borrow.rewrites.empty());
}

TEST(Borrowing, NoOverlapProvesEmpty) {
  const auto cat = pftest::borrowing_catalog();
  const auto dnf = parse_dnf("b <= 2", cat.relation().schema());
  const auto plan = plan_query(dnf, cat, PlannerConfig{});
  EXPECT_TRUE(plan.proven_empty);
  EXPECT_TRUE(plan.entries.empty());
  // Sound: nothing matches.
  for (Key pk = 0; pk < cat.relation().size(); ++pk) EXPECT_FALSE(eval(dnf, cat.relation(), pk));
}

TEST(Borrowing, HashSynthesis) {
  const auto cat = pftest::citation_topic_catalog();
  const auto s = synthesize_pred_hash(cat, 1, AtomicPredicate::at_most(2, 2006));
  ASSERT_EQ(s.outcome, Synthesis::Outcome::kPredicate);
  EXPECT_EQ(s.predicate->as_in_set().values, (std::set<std::string>{"DB", "ML"}));
  EXPECT_EQ(synthesize_pred_hash(cat, 1, AtomicPredicate::at_least(2, 2100)).outcome, Synthesis::Outcome::kNoMatch);
  EXPECT_THROW(synthesize_pred_hash(cat, 0, AtomicPredicate::at_most(2, 1)), std::invalid_argument);
  EXPECT_THROW(synthesize_pred_tree(cat, 1, AtomicPredicate::at_most(2, 1)), std::invalid_argument);
}

TEST(Disjunction, ReplacesDisjointGraphsByAncestor) {
  const auto cat = pftest::merge_catalog();
  const auto dnf = parse_dnf(
      "(60 <= a <= 70 AND b >= -1) OR (80 <= a <= 90 AND b >= -1) OR (10 <= a <= 20 AND b >= -1)",
      cat.relation().schema());
  PlanExplanation ex;
  const auto plan = plan_query(dnf, cat, PlannerConfig{}, &ex);
  ASSERT_EQ(ex.clauses.size(), 3u);
  EXPECT_EQ(ex.clauses[0].chosen, (GraphSet{2}));
  EXPECT_EQ(ex.clauses[1].chosen, (GraphSet{2}));
  EXPECT_EQ(ex.clauses[2].chosen, (GraphSet{1}));
  ASSERT_EQ(ex.groups.size(), 1u);
  EXPECT_EQ(ex.groups[0].input, (GraphSet{1, 2}));
  EXPECT_EQ(ex.groups[0].output, (GraphSet{kRootNode}));
  EXPECT_LT(ex.groups[0].output_value, ex.groups[0].input_value);
  EXPECT_EQ(plan.nodes(), (GraphSet{kRootNode}));
  EXPECT_EQ(plan.entries[0].clauses, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Disjunction, KeepsDenseGraphsWhenAncestorIsWorse) {
  const auto cat = pftest::merge_catalog();
  PlannerConfig cfg;
  EXPECT_EQ(optimize_disjunction_group(cat, 0, {2}, DnfPredicate::always_true(), cfg), (GraphSet{2}));
  cfg.alpha = 0.0;
  EXPECT_EQ(optimize_disjunction_group(cat, 0, {1}, DnfPredicate::always_true(), cfg), (GraphSet{1}));
  // Equal value (both sum to 400); the single graph wins the tie.
  EXPECT_EQ(optimize_disjunction_group(cat, 0, {1, 2}, DnfPredicate::always_true(), cfg), (GraphSet{kRootNode}));
  EXPECT_THROW(optimize_disjunction_group(cat, 0, {3}, DnfPredicate::always_true(), cfg), std::invalid_argument);
}

TEST(Disjunction, DeduplicatesSharedGraphs) {
  const auto cat = pftest::citation_topic_catalog();
  const auto dnf = parse_dnf("8 <= citations <= 9 OR (citations = 10 AND topic = \"ML\")", cat.relation().schema());
  const auto plan = plan_query(dnf, cat, PlannerConfig{});
  std::set<NodeId> uniq;
  for (const auto& e : plan.entries) EXPECT_TRUE(uniq.insert(e.node).second);
  EXPECT_TRUE(std::is_sorted(plan.entries.begin(), plan.entries.end(),
                             [](const PlanEntry& x, const PlanEntry& y) { return x.node < y.node; }));
}

TEST(Plan, AlwaysTrueUsesRoot) {
  const auto cat = pftest::citation_topic_catalog();
  const auto plan = plan_query(DnfPredicate::always_true(), cat, PlannerConfig{});
  EXPECT_EQ(plan.nodes(), (GraphSet{kRootNode}));
}

TEST(Plan, CoversRandomPredicates) {
  const auto cat = pftest::citation_topic_catalog();
  std::mt19937_64 rng(77);
  for (double alpha : {0.0, 0.4, 1.0}) {
    PlannerConfig cfg;
    cfg.alpha = alpha;
    for (int i = 0; i < 150; ++i) {
      const auto expr = pftest::random_dnf_expr(cat.relation(), rng, 3, 3);
      std::optional<DnfPredicate> dnf;
      try {
        dnf = to_dnf(expr);
      } catch (const UnsatisfiableFilter&) {
        continue;
      }
      const auto plan = plan_query(*dnf, cat, cfg);
      EXPECT_TRUE(plan_covers(cat, plan, expr)) << to_string(expr, cat.relation().schema());
    }
  }
}

TEST(Explain, ReportsCandidatesAndRows) {
  const auto cat = pftest::citation_topic_catalog();
  const auto dnf = parse_dnf("2 <= citations <= 10 AND topic = \"DB\"", cat.relation().schema());
  PlanExplanation ex;
  PlannerConfig cfg;
  const auto plan = plan_query(dnf, cat, cfg, &ex);
  const std::string text = format_explanation(cat, dnf, plan, ex, cfg);
  EXPECT_NE(text.find("dnf: 2 <= citations <= 10 AND topic IN (\"DB\")"), std::string::npos) << text;
  EXPECT_NE(text.find("candidate tree:citations {g2, g5}"), std::string::npos) << text;
  EXPECT_NE(text.find("candidate hash:topic {g10} value=70"), std::string::npos) << text;
  EXPECT_NE(text.find("plan:\n  hash:topic g10 card=70\n"), std::string::npos) << text;
}

TEST(Explain, ShowsBorrowing) {
  const auto cat = pftest::borrowing_catalog();
  const auto dnf = parse_dnf("b <= 6", cat.relation().schema());
  PlanExplanation ex;
  PlannerConfig cfg;
  const auto plan = plan_query(dnf, cat, cfg, &ex);
  const std::string text = format_explanation(cat, dnf, plan, ex, cfg);
  EXPECT_NE(text.find("borrow b -> tree:a"), std::string::npos) << text;
  EXPECT_NE(text.find("planned as: a <= 8"), std::string::npos) << text;
}
