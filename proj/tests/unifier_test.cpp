#include <gtest/gtest.h>

#include <random>

#include "bvsynth/solver.hpp"
#include "bvsynth/unifier.hpp"
#include "oracle/brute_force.hpp"
#include "test_support.hpp"

using namespace bvsynth;
using bvsynth::support::grammar_of;
using bvsynth::support::problem_of;

namespace {

// Owns everything a UnifyContext refers to.
struct Harness {
  Problem problem;
  Enumerator engine;
  UnifyContext ctx;

  explicit Harness(Problem p, SearchLimits limits = {})
      : problem(std::move(p)),
        engine(problem.grammar, problem.example_envs(), problem.width, {OpCode::If0}),
        ctx(problem, engine, limits) {}
};

Expr x() { return Expr::var("x"); }
Expr c64(std::uint64_t v) { return Expr::constant(BitVecValue(64, v)); }

const std::vector<std::string> kNatural{"x", "#x0", "#x1", "bvand", "bvor", "bvnot", "bvadd", "if0"};

// Start derives terminals; conditions come from a nonterminal that only
// offers single-bit tests of the form (bvand Start #x1).
Problem bit_test_problem(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& io) {
  Problem p = parse_problem(
      "(synth-fun f ((x (BitVec 64))) (BitVec 64)\n"
      "  ((Start (BitVec 64) (x #x0000000000000000 #x0000000000000001 (bvnot Start) (bvadd Start Start) "
      "(if0 Cond Start Start)))\n"
      "   (Cond (BitVec 64) ((bvand Start One)))\n"
      "   (One (BitVec 64) (#x0000000000000001))))\n"
      "(constraint (= (f #x0000000000000000) #x0000000000000000))\n");
  p.examples.clear();
  for (const auto& [in, out] : io)
    p.examples.push_back(Example{{BitVecValue(64, in)}, BitVecValue(64, out), p.examples.size()});
  return p;
}

TerminalMap map_of(std::vector<std::pair<Expr, std::vector<std::size_t>>> slots, std::size_t n) {
  TerminalMap m;
  m.assignment.assign(n, 0);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    for (std::size_t e : slots[s].second) m.assignment[e] = s;
    m.registry.push_back({slots[s].first, slots[s].second});
  }
  return m;
}

std::size_t count_if0(const Expr& e) {
  std::size_t n = e.is_apply() && e.op() == OpCode::If0;
  for (const auto& op : e.operands()) n += count_if0(op);
  return n;
}

// Checks the leaf and node invariants of a finished tree.
void expect_tree_invariants(const DecisionTree& tree, const TerminalMap& map, const Problem& p) {
  const auto envs = p.example_envs();
  std::vector<int> seen(p.examples.size(), 0);
  for (std::size_t leaf : tree.leaves()) {
    const auto& l = tree.leaf(leaf);
    EXPECT_FALSE(l.bucket.empty());
    EXPECT_FALSE(map.registry[l.slot].expr.contains(OpCode::If0));
    for (std::size_t e : l.bucket) {
      ++seen[e];
      EXPECT_EQ(route(tree, envs[e]).leaf, leaf) << "example " << e;
      EXPECT_EQ(eval(map.registry[l.slot].expr, envs[e]), p.examples[e].output);
    }
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  for (std::size_t id = 0; id < tree.node_count(); ++id) {
    if (tree.is_leaf(id)) continue;
    const auto& cond = tree.internal(id).condition;
    EXPECT_FALSE(cond.expr.contains(OpCode::If0));
    EXPECT_FALSE(signature_of(cond.expr, envs).is_constant());
    EXPECT_EQ(eval(cond.expr, envs[cond.then_example]).bits(), kIf0Selector);
    EXPECT_NE(eval(cond.expr, envs[cond.else_example]).bits(), kIf0Selector);
  }
  EXPECT_LE(tree.internal_count() + 1, p.examples.size());
}

}  // namespace

TEST(MapTerminals, SharedExpressionsAreReused) {
  Harness h(problem_of(grammar_of({"x", "#x0", "#x1", "bvadd", "bvand", "bvor", "if0"}, 64), 64,
                       {{5, 5}, {9, 9}, {3, 6}}));
  TerminalMap m = map_terminals(h.ctx);
  ASSERT_EQ(m.registry.size(), 2u);
  EXPECT_EQ(expr_to_sexpr(m.expr_of(0)), "x");
  EXPECT_EQ(m.assignment[0], m.assignment[1]);
  EXPECT_EQ(expr_to_sexpr(m.expr_of(2)), "(bvadd x x)");
  EXPECT_EQ(m.registry[0].examples, (std::vector<std::size_t>{0, 1}));

  // Both are minimal for their first example.
  oracle::BruteForce brute(h.problem.grammar, 4, {OpCode::If0});
  auto envs = h.problem.example_envs();
  EXPECT_EQ(brute.min_size(0, envs, [](const auto& v) { return v[2] == 6; }), 3u);
}

TEST(MapTerminals, SingleExample) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{7, 8}}));
  TerminalMap m = map_terminals(h.ctx);
  ASSERT_EQ(m.registry.size(), 1u);
  EXPECT_FALSE(build_tree(m, h.ctx).has_value());
}

TEST(MapTerminals, ConflictFreeProblemHasNoIf0) {
  Problem p = problem_of(grammar_of(kNatural, 64), 64, {{2, ~2ull}, {5, ~5ull}, {100, ~100ull}});
  Solution s = solve(p);
  EXPECT_EQ(s.terminals.registry.size(), 1u);
  EXPECT_FALSE(s.tree.has_value());
  EXPECT_EQ(count_if0(s.expr), 0u);
  EXPECT_EQ(s.stats.internal_nodes, 0u);
}

TEST(MapTerminals, UnsolvableExample) {
  Harness h(problem_of(grammar_of({"#x0", "bvnot", "if0"}, 8), 8, {{1, 5}}));
  try {
    map_terminals(h.ctx);
    FAIL();
  } catch (const SearchFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsolvableExample);
    EXPECT_EQ(e.status(), SearchStatus::Exhausted);
  }
}

TEST(RankExamples, UniqueFirst) {
  TerminalMap m = map_of({{x(), {0, 2, 3}}, {Expr::apply(OpCode::BvNot, {x()}), {1}}}, 4);
  EXPECT_EQ(rank_examples(m), (std::vector<std::size_t>{1, 0, 2, 3}));
}

TEST(RankExamples, Ties) {
  EXPECT_EQ(rank_examples(map_of({{x(), {0, 1, 2}}}, 3)), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(rank_examples(map_of({{x(), {2}}, {c64(0), {0}}, {c64(1), {1}}}, 3)),
            (std::vector<std::size_t>{0, 1, 2}));
}

TEST(RankExamplesProperty, PermutationWithNonDecreasingPopularity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t slots = 1 + rng() % n;
    std::vector<std::pair<Expr, std::vector<std::size_t>>> reg(slots, {x(), {}});
    for (std::size_t s = 0; s < slots; ++s) reg[s].first = c64(s);
    for (std::size_t e = 0; e < n; ++e) reg[rng() % slots].second.push_back(e);
    TerminalMap m = map_of(reg, n);
    auto order = rank_examples(m);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(sorted[i], i);
    for (std::size_t i = 1; i < n; ++i) {
      ASSERT_LE(m.popularity(order[i - 1]), m.popularity(order[i]));
      if (m.popularity(order[i - 1]) == m.popularity(order[i])) {
        ASSERT_LT(order[i - 1], order[i]);
      }
    }
  }
}

TEST(FindCondition, LowBitSeparatesZeroFromAllOnes) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{0, 0}, {~0ull, 0}}));
  Condition cond = find_condition(0, 1, h.ctx);
  EXPECT_EQ(expr_to_sexpr(cond.expr), "(bvand x #x0000000000000001)");
  EXPECT_EQ(cond.then_example, 1u);
  EXPECT_EQ(cond.else_example, 0u);

  oracle::BruteForce brute(h.problem.grammar, 4, {OpCode::If0});
  auto first = brute.first(0, h.problem.example_envs(),
                           [](const auto& v) { return (v[0] == 1) != (v[1] == 1) && v[0] != v[1]; });
  EXPECT_EQ(first->size(), cond.expr.size());
}

TEST(FindCondition, VariableSeparatesOneFromTwo) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{1, 0}, {2, 0}}));
  Condition cond = find_condition(0, 1, h.ctx);
  EXPECT_EQ(expr_to_sexpr(cond.expr), "x");
  EXPECT_EQ(cond.then_example, 0u);
}

TEST(FindCondition, ConstantConditionsAreRejected) {
  // Over {1, 3, 5} the pair (0, 1) could be split by a value that is 1 on
  // both... but only non-constant signatures qualify; #x1 never does.
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{1, 0}, {3, 0}, {5, 0}}));
  Condition cond = find_condition(0, 1, h.ctx);
  EXPECT_FALSE(cond.signature.is_constant());
  EXPECT_EQ(expr_to_sexpr(cond.expr), "x");
}

TEST(FindCondition, UnunifiablePair) {
  // Constants only: no condition can tell two inputs apart.
  Harness h(problem_of(grammar_of({"x", "#x0", "#x1", "if0"}, 8), 8, {{4, 0}, {6, 1}}));
  try {
    find_condition(0, 1, h.ctx);
    FAIL();
  } catch (const SearchFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnunifiablePair);
  }
}

TEST(Route, FollowsConditionValue) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{0, 0}, {1, 0}}));
  DecisionTree tree(DecisionTree::Leaf{0, {0}});
  EXPECT_EQ(route(tree, h.ctx.envs[0]).leaf, tree.root());
  EXPECT_TRUE(route(tree, h.ctx.envs[0]).path.empty());

  Expr cond = Expr::apply(OpCode::BvAnd, {x(), c64(1)});
  tree.split(tree.root(), Condition{cond, Signature({0, 1}), 1, 0}, {1, {1}}, {0, {0}});
  const auto& root = tree.internal(tree.root());
  Env three{64, {{"x", BitVecValue(64, 3)}}};
  Env four{64, {{"x", BitVecValue(64, 4)}}};
  EXPECT_EQ(route(tree, three).leaf, root.then_child);
  EXPECT_EQ(route(tree, three).path, std::vector<bool>{true});
  EXPECT_EQ(route(tree, four).leaf, root.else_child);
  EXPECT_EQ(route(tree, four).path, std::vector<bool>{false});
}

TEST(InsertExample, SameExpressionJoinsBucket) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{4, 4}, {1, 0xFFFFFFFFFFFFFFFEull}, {6, 6}}));
  TerminalMap m = map_of({{x(), {0, 2}}, {Expr::apply(OpCode::BvNot, {x()}), {1}}}, 3);
  DecisionTree tree(DecisionTree::Leaf{0, {0}});
  insert_example(tree, 2, m, h.ctx);
  EXPECT_EQ(tree.internal_count(), 0u);
  EXPECT_EQ(tree.leaf(tree.root()).bucket, (std::vector<std::size_t>{0, 2}));
}

TEST(InsertExample, DifferentExpressionSplitsLeaf) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{4, 4}, {1, 0xFFFFFFFFFFFFFFFEull}}));
  TerminalMap m = map_of({{x(), {0}}, {Expr::apply(OpCode::BvNot, {x()}), {1}}}, 2);
  DecisionTree tree(DecisionTree::Leaf{0, {0}});
  insert_example(tree, 1, m, h.ctx);
  ASSERT_EQ(tree.internal_count(), 1u);
  EXPECT_EQ(tree.leaves().size(), 2u);
  const auto& root = tree.internal(tree.root());
  EXPECT_EQ(expr_to_sexpr(root.condition.expr), "x");
  EXPECT_EQ(tree.leaf(root.then_child).bucket, std::vector<std::size_t>{1});
  EXPECT_EQ(tree.leaf(root.else_child).bucket, std::vector<std::size_t>{0});
}

TEST(InsertExample, DisplacedBucketMembersAreReinserted) {
  // Bucket {0: x=1, 1: x=3} serves x. Incoming x=2 wants bvnot(x); the first
  // condition separating 2 from 1 is x itself, which also sends... nothing
  // but example 0 to the then side. Routing must stay sound either way.
  Problem p = problem_of(grammar_of(kNatural, 64), 64, {{1, 1}, {3, 3}, {2, ~2ull}});
  Harness h(p);
  TerminalMap m = map_of({{x(), {0, 1}}, {Expr::apply(OpCode::BvNot, {x()}), {2}}}, 3);
  DecisionTree tree(DecisionTree::Leaf{0, {0, 1}});
  insert_example(tree, 2, m, h.ctx);
  expect_tree_invariants(tree, m, h.problem);
}

TEST(BuildTree, TwoConflictingExamples) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{0, 0}, {1, ~1ull}}));
  TerminalMap m = map_terminals(h.ctx);
  auto tree = build_tree(m, h.ctx);
  ASSERT_TRUE(tree.has_value());
  EXPECT_EQ(tree->internal_count(), 1u);
  EXPECT_EQ(tree->leaves().size(), 2u);
  expect_tree_invariants(*tree, m, h.problem);
}

TEST(BuildTree, ParityWithBitTestConditions) {
  Harness h(bit_test_problem({{0x0, 0x0}, {0x2, 0x2}, {0x1, ~0x1ull}, {0x3, ~0x3ull}}));
  TerminalMap m = map_terminals(h.ctx);
  ASSERT_EQ(m.registry.size(), 2u);
  EXPECT_EQ(expr_to_sexpr(m.expr_of(0)), "x");
  EXPECT_EQ(expr_to_sexpr(m.expr_of(2)), "(bvnot x)");
  auto tree = build_tree(m, h.ctx);
  ASSERT_TRUE(tree.has_value());
  EXPECT_EQ(tree->internal_count(), 1u);
  EXPECT_EQ(expr_to_sexpr(tree->internal(tree->root()).condition.expr), "(bvand x #x0000000000000001)");
  expect_tree_invariants(*tree, m, h.problem);
  EXPECT_EQ(expr_to_sexpr(tree_to_expr(*tree, m, h.problem.grammar)),
            "(if0 (bvand x #x0000000000000001) (bvnot x) x)");
}

TEST(BuildTree, ParityWithUnrestrictedConditions) {
  // With x itself available as a condition the first pair (inputs 0 and 1)
  // is split on x == 1, and input 3 then needs a second node on its low bit.
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{0x0, 0x0}, {0x2, 0x2}, {0x1, ~0x1ull}, {0x3, ~0x3ull}}));
  TerminalMap m = map_terminals(h.ctx);
  auto tree = build_tree(m, h.ctx);
  ASSERT_TRUE(tree.has_value());
  EXPECT_EQ(tree->internal_count(), 2u);
  EXPECT_EQ(expr_to_sexpr(tree->internal(tree->root()).condition.expr), "x");
  expect_tree_invariants(*tree, m, h.problem);
  EXPECT_EQ(expr_to_sexpr(tree_to_expr(*tree, m, h.problem.grammar)),
            "(if0 x (bvnot x) (if0 (bvand x #x0000000000000001) (bvnot x) x))");
}

TEST(BuildTree, NoConflictsNoTree) {
  Harness h(problem_of(grammar_of(kNatural, 64), 64, {{1, 1}, {2, 2}}));
  TerminalMap m = map_terminals(h.ctx);
  EXPECT_FALSE(build_tree(m, h.ctx).has_value());
}

TEST(TreeToExpr, GrammarViolation) {
  // Leaves must come from Leaf, which cannot derive (bvnot x).
  Problem p = parse_problem(
      "(synth-fun f ((x (BitVec 8))) (BitVec 8)\n"
      "  ((Start (BitVec 8) (x (bvnot Start) (if0 Start Leaf Leaf)))\n"
      "   (Leaf (BitVec 8) (x #x00))))\n"
      "(constraint (= (f #x00) #x00))\n(constraint (= (f #x01) #xfe))\n");
  try {
    solve(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GrammarViolation);
  }
}

TEST(TreeToExpr, SingleLeaf) {
  TerminalMap m = map_of({{x(), {0}}}, 1);
  DecisionTree tree(DecisionTree::Leaf{0, {0}});
  EXPECT_EQ(tree_to_expr(tree, m, tree.root()), x());
}

TEST(UnifierProperty, GeneratedProblemsKeepTreeInvariants) {
  std::mt19937_64 rng(31);
  Grammar g = template_grammar("icfp", 64);
  ExprSampler sampler(g, 8);
  for (int trial = 0; trial < 60; ++trial) {
    Expr target = sampler.sample(0, 3 + rng() % 6, rng);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> io;
    for (int k = 0; k < 10; ++k) {
      // Small inputs make if0 conditions fire often.
      const std::uint64_t in = k % 2 ? rng() : rng() % 8;
      bool dup = false;
      for (const auto& [i, o] : io) dup = dup || i == in;
      if (dup) continue;
      io.emplace_back(in, eval(target, Env{64, {{"x", BitVecValue(64, in)}}}).bits());
    }
    Problem p = problem_of(g, 64, io);
    Solution s = solve(p, {12, 5'000'000, 30});
    if (s.tree) expect_tree_invariants(*s.tree, s.terminals, p);
    for (const auto& e : p.examples) EXPECT_EQ(eval(s.expr, p.env_for(e)), e.output);
    EXPECT_EQ(count_if0(s.expr), s.stats.internal_nodes);
  }
}
