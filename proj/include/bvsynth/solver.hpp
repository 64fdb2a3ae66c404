#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "enumerator.hpp"
#include "error.hpp"
#include "problem.hpp"
#include "unifier.hpp"

namespace bvsynth {

struct RunStats {
  std::uint64_t candidates = 0;
  std::uint64_t signatures_stored = 0;
  std::uint64_t pruned_duplicates = 0;
  std::uint64_t evaluations = 0;
  double phase1_ms = 0;
  double phase2_ms = 0;
  std::size_t internal_nodes = 0;
  std::size_t solution_size = 0;
  std::size_t examples = 0;
};

struct SolveOptions {
  std::size_t max_size = 12;
  std::uint64_t max_candidates = 5'000'000;
  double timeout_seconds = 0;  // 0 = no wall-clock limit
};

struct Solution {
  Expr expr;
  TerminalMap terminals;
  std::optional<DecisionTree> tree;
  RunStats stats;
};

// Throws VerificationFailed unless `expr` reproduces every example.
inline void verify(const Problem& problem, const Expr& expr) {
  for (const auto& example : problem.examples) {
    const BitVecValue got = eval(expr, problem.env_for(example));
    if (got != example.output)
      throw Error(ErrorKind::VerificationFailed,
                  "example " + std::to_string(example.index) + " expects " + example.output.to_literal() +
                      ", solution gives " + got.to_literal());
  }
}

inline Solution solve(const Problem& problem, const SolveOptions& options = {}) {
  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  SearchLimits limits{options.max_size, options.max_candidates, Deadline::after(options.timeout_seconds)};
  Enumerator engine(problem.grammar, problem.example_envs(), problem.width, {OpCode::If0});
  UnifyContext ctx(problem, engine, limits);

  RunStats stats;
  stats.examples = problem.examples.size();
  auto record = [&] {
    stats.candidates = engine.stats().candidates;
    stats.signatures_stored = engine.stats().stored;
    stats.pruned_duplicates = engine.stats().pruned;
    stats.evaluations = engine.stats().evaluations;
  };

  auto t0 = Clock::now();
  TerminalMap terminals = map_terminals(ctx);
  stats.phase1_ms = ms_since(t0);

  t0 = Clock::now();
  std::optional<DecisionTree> tree = build_tree(terminals, ctx);
  std::optional<Expr> expr;
  if (tree) {
    expr = tree_to_expr(*tree, terminals, problem.grammar);
    stats.internal_nodes = tree->internal_count();
  } else {
    expr = terminals.registry.front().expr;
  }
  stats.phase2_ms = ms_since(t0);
  record();
  stats.solution_size = expr->size();

  verify(problem, *expr);
  return Solution{*expr, std::move(terminals), std::move(tree), stats};
}

}  // namespace bvsynth
