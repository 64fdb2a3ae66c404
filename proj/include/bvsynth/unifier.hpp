#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "enumerator.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "problem.hpp"

namespace bvsynth {

// A search that ended without a result.
class SearchFailure : public Error {
 public:
  SearchFailure(ErrorKind kind, SearchStatus status, const std::string& detail)
      : Error(kind, detail), status_(status) {}

  SearchStatus status() const noexcept { return status_; }

 private:
  SearchStatus status_;
};

// Which terminal expression each example was assigned in phase one.
struct TerminalMap {
  struct Slot {
    Expr expr;
    std::vector<std::size_t> examples;
  };

  std::vector<std::size_t> assignment;  // example index -> registry slot
  std::vector<Slot> registry;

  const Expr& expr_of(std::size_t example) const { return registry[assignment[example]].expr; }
  std::size_t popularity(std::size_t example) const { return registry[assignment[example]].examples.size(); }
};

// The two enumeration roots the unifier draws from, plus the shared engine.
struct UnifyContext {
  const Problem& problem;
  Enumerator& engine;
  std::vector<Env> envs;
  std::size_t terminal_nt;
  std::size_t condition_nt;
  SearchLimits limits;

  UnifyContext(const Problem& p, Enumerator& e, SearchLimits l)
      : problem(p), engine(e), envs(p.example_envs()), limits(l) {
    terminal_nt = p.grammar.start;
    auto site = p.grammar.if0_site();
    if (!site) throw Error(ErrorKind::MissingIf0Rule, "the grammar must contain a production named if0");
    condition_nt = p.grammar.production(*site).operands[0];
  }
};

inline TerminalMap map_terminals(UnifyContext& ctx) {
  const auto& examples = ctx.problem.examples;
  constexpr std::size_t kUnmapped = static_cast<std::size_t>(-1);
  TerminalMap map;
  map.assignment.assign(examples.size(), kUnmapped);

  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (map.assignment[i] != kUnmapped) continue;
    const std::uint64_t want = examples[i].output.bits();
    auto result = enumerate_until(
        ctx.engine, ctx.terminal_nt, [&](const Signature& sig) { return sig[i] == want; }, ctx.limits);
    if (!result.found())
      throw SearchFailure(ErrorKind::UnsolvableExample, result.status,
                          "example " + std::to_string(i) + ": " + result.detail);

    const std::size_t slot = map.registry.size();
    map.registry.push_back({*result.expr, {}});
    for (std::size_t j = i; j < examples.size(); ++j) {
      if (map.assignment[j] != kUnmapped) continue;
      if (result.signature[j] == examples[j].output.bits()) {
        map.assignment[j] = slot;
        map.registry[slot].examples.push_back(j);
      }
    }
  }
  return map;
}

// Least popular expression first; ties by example index.
inline std::vector<std::size_t> rank_examples(const TerminalMap& map) {
  std::vector<std::size_t> order(map.assignment.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return map.popularity(a) < map.popularity(b);
  });
  return order;
}

// A condition separating two examples: it evaluates to the if0 selector on
// `then_example` and to something else on `else_example`.
struct Condition {
  Expr expr;
  Signature signature;
  std::size_t then_example;
  std::size_t else_example;
};

inline Condition find_condition(std::size_t a, std::size_t b, UnifyContext& ctx) {
  auto accept = [&](const Signature& sig) {
    return ((sig[a] == kIf0Selector) != (sig[b] == kIf0Selector)) && !sig.is_constant();
  };
  auto result = enumerate_until(ctx.engine, ctx.condition_nt, accept, ctx.limits);
  if (!result.found())
    throw SearchFailure(ErrorKind::UnunifiablePair, result.status,
                        "examples " + std::to_string(a) + " and " + std::to_string(b) + ": " + result.detail);
  const bool a_then = result.signature[a] == kIf0Selector;
  return Condition{*result.expr, result.signature, a_then ? a : b, a_then ? b : a};
}

class DecisionTree {
 public:
  struct Leaf {
    std::size_t slot;                 // TerminalMap registry slot
    std::vector<std::size_t> bucket;  // example indices served by this leaf
  };
  struct Internal {
    Condition condition;
    std::size_t then_child;
    std::size_t else_child;
  };
  using Node = std::variant<Leaf, Internal>;

  explicit DecisionTree(Leaf root) { nodes_.emplace_back(std::move(root)); }

  std::size_t root() const noexcept { return 0; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  Node& node(std::size_t id) { return nodes_[id]; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  bool is_leaf(std::size_t id) const { return std::holds_alternative<Leaf>(nodes_[id]); }
  const Leaf& leaf(std::size_t id) const { return std::get<Leaf>(nodes_[id]); }
  Leaf& leaf(std::size_t id) { return std::get<Leaf>(nodes_[id]); }
  const Internal& internal(std::size_t id) const { return std::get<Internal>(nodes_[id]); }

  std::size_t internal_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) {
      return std::holds_alternative<Internal>(n);
    }));
  }

  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (is_leaf(i)) out.push_back(i);
    return out;
  }

  // Turns leaf `id` into an internal node over two new leaves.
  void split(std::size_t id, Condition condition, Leaf then_leaf, Leaf else_leaf) {
    nodes_.emplace_back(std::move(then_leaf));
    nodes_.emplace_back(std::move(else_leaf));
    nodes_[id] = Internal{std::move(condition), nodes_.size() - 2, nodes_.size() - 1};
  }

 private:
  std::vector<Node> nodes_;
};

struct Route {
  std::size_t leaf;
  std::vector<bool> path;  // true = then branch
};

inline Route route(const DecisionTree& tree, const Env& env, std::size_t from) {
  Route out{from, {}};
  while (!tree.is_leaf(out.leaf)) {
    const auto& node = tree.internal(out.leaf);
    const bool take_then = eval(node.condition.expr, env).bits() == kIf0Selector;
    out.path.push_back(take_then);
    out.leaf = take_then ? node.then_child : node.else_child;
  }
  return out;
}

inline Route route(const DecisionTree& tree, const Env& env) { return route(tree, env, tree.root()); }

namespace detail {

// Replaces `leaf_id` with a node separating `incoming` from the leaf's
// representative. Bucket members the new condition sends to the incoming
// side are inserted again below the new node.
inline void split_leaf(DecisionTree& tree, std::size_t leaf_id, std::size_t incoming, const TerminalMap& map,
                       UnifyContext& ctx);

inline void insert_from(DecisionTree& tree, std::size_t example, const TerminalMap& map, UnifyContext& ctx,
                        std::size_t from) {
  const Route r = route(tree, ctx.envs[example], from);
  DecisionTree::Leaf& leaf = tree.leaf(r.leaf);
  if (leaf.slot == map.assignment[example]) {
    leaf.bucket.insert(std::upper_bound(leaf.bucket.begin(), leaf.bucket.end(), example), example);
    return;
  }
  split_leaf(tree, r.leaf, example, map, ctx);
}

inline void split_leaf(DecisionTree& tree, std::size_t leaf_id, std::size_t incoming, const TerminalMap& map,
                       UnifyContext& ctx) {
  DecisionTree::Leaf old = tree.leaf(leaf_id);
  const std::size_t representative = old.bucket.front();
  Condition cond = find_condition(incoming, representative, ctx);
  const bool incoming_then = cond.then_example == incoming;

  DecisionTree::Leaf kept{old.slot, {}};
  std::vector<std::size_t> displaced;
  for (std::size_t member : old.bucket) {
    const bool member_then = cond.signature[member] == kIf0Selector;
    if (member_then == incoming_then)
      displaced.push_back(member);
    else
      kept.bucket.push_back(member);
  }
  DecisionTree::Leaf fresh{map.assignment[incoming], {incoming}};
  if (incoming_then)
    tree.split(leaf_id, std::move(cond), std::move(fresh), std::move(kept));
  else
    tree.split(leaf_id, std::move(cond), std::move(kept), std::move(fresh));
  for (std::size_t member : displaced) insert_from(tree, member, map, ctx, leaf_id);
}

}  // namespace detail

// Routes `example` to a leaf. A leaf with the same terminal expression
// absorbs it; otherwise the leaf is split by a freshly enumerated condition.
inline void insert_example(DecisionTree& tree, std::size_t example, const TerminalMap& map, UnifyContext& ctx) {
  detail::insert_from(tree, example, map, ctx, tree.root());
}

// Returns nullopt when every example shares one terminal expression.
inline std::optional<DecisionTree> build_tree(const TerminalMap& map, UnifyContext& ctx) {
  if (map.registry.size() < 2) return std::nullopt;
  const auto order = rank_examples(map);
  const std::size_t first = order.front();
  const std::size_t second = *std::find_if(order.begin(), order.end(), [&](std::size_t e) {
    return map.assignment[e] != map.assignment[first];
  });

  DecisionTree tree(DecisionTree::Leaf{map.assignment[second], {second}});
  detail::split_leaf(tree, tree.root(), first, map, ctx);
  for (std::size_t e : order)
    if (e != first && e != second) insert_example(tree, e, map, ctx);
  return tree;
}

inline Expr tree_to_expr(const DecisionTree& tree, const TerminalMap& map, std::size_t id) {
  if (tree.is_leaf(id)) return map.registry[tree.leaf(id).slot].expr;
  const auto& node = tree.internal(id);
  return Expr::apply(OpCode::If0, {node.condition.expr, tree_to_expr(tree, map, node.then_child),
                                   tree_to_expr(tree, map, node.else_child)});
}

// Materializes the tree as nested if0 terms and checks the result is
// derivable from the grammar's start symbol.
inline Expr tree_to_expr(const DecisionTree& tree, const TerminalMap& map, const Grammar& grammar) {
  Expr out = tree_to_expr(tree, map, tree.root());
  if (!grammar.derives(out, grammar.start))
    throw Error(ErrorKind::GrammarViolation, "decision tree is not derivable from " +
                                                 grammar.nonterminals[grammar.start].name);
  return out;
}

}  // namespace bvsynth
