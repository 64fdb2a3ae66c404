#pragma once

// Unpruned reference enumeration. Builds every derivable expression tree up
// to a size bound and evaluates each with the tree evaluator; it shares no
// code with the pruned engine beyond the grammar and expression types.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "bvsynth/expr.hpp"
#include "bvsynth/problem.hpp"

namespace bvsynth::oracle {

// trees[nt][size] holds every expression of exactly that size.
class BruteForce {
 public:
  BruteForce(const Grammar& grammar, std::size_t max_size, std::vector<OpCode> excluded = {})
      : grammar_(grammar), trees_(grammar.nonterminals.size(), std::vector<std::vector<Expr>>(max_size + 1)) {
    for (std::size_t s = 1; s <= max_size; ++s)
      for (std::size_t n = 0; n < grammar.nonterminals.size(); ++n)
        for (const auto& p : grammar.nonterminals[n].productions) {
          if (p.kind == Production::Kind::Op &&
              std::find(excluded.begin(), excluded.end(), p.op) != excluded.end())
            continue;
          build(n, p, s);
        }
  }

  std::span<const Expr> trees(std::size_t nt, std::size_t size) const { return trees_[nt][size]; }
  std::size_t max_size() const { return trees_.front().size() - 1; }

  std::size_t count(std::size_t nt, std::size_t max) const {
    std::size_t total = 0;
    for (std::size_t s = 1; s <= max; ++s) total += trees_[nt][s].size();
    return total;
  }

  static std::vector<std::uint64_t> values(const Expr& e, std::span<const Env> envs) {
    std::vector<std::uint64_t> out;
    for (const auto& env : envs) out.push_back(eval(e, env).bits());
    return out;
  }

  // Smallest size of an expression whose value vector satisfies `accept`.
  std::optional<std::size_t> min_size(std::size_t nt, std::span<const Env> envs,
                                      const std::function<bool(const std::vector<std::uint64_t>&)>& accept) const {
    for (std::size_t s = 1; s <= max_size(); ++s)
      for (const auto& e : trees_[nt][s])
        if (accept(values(e, envs))) return s;
    return std::nullopt;
  }

  // First expression (size order, then construction order) satisfying `accept`.
  std::optional<Expr> first(std::size_t nt, std::span<const Env> envs,
                            const std::function<bool(const std::vector<std::uint64_t>&)>& accept) const {
    for (std::size_t s = 1; s <= max_size(); ++s)
      for (const auto& e : trees_[nt][s])
        if (accept(values(e, envs))) return e;
    return std::nullopt;
  }

  std::set<std::vector<std::uint64_t>> signatures(std::size_t nt, std::size_t max, std::span<const Env> envs) const {
    std::set<std::vector<std::uint64_t>> out;
    for (std::size_t s = 1; s <= max; ++s)
      for (const auto& e : trees_[nt][s]) out.insert(values(e, envs));
    return out;
  }

 private:
  void build(std::size_t nt, const Production& p, std::size_t size) {
    auto& out = trees_[nt][size];
    if (p.kind == Production::Kind::Var) {
      if (size == 1) out.push_back(Expr::var(p.var));
      return;
    }
    if (p.kind == Production::Kind::Const) {
      if (size == 1) out.push_back(Expr::constant(p.value));
      return;
    }
    std::vector<Expr> operands;
    combine(p, 0, size - 1, operands, out);
  }

  void combine(const Production& p, std::size_t pos, std::size_t remaining, std::vector<Expr>& operands,
               std::vector<Expr>& out) {
    if (pos == p.arity()) {
      if (remaining == 0) out.push_back(Expr::apply(p.op, operands));
      return;
    }
    for (std::size_t s = 1; s <= remaining; ++s)
      for (const auto& child : trees_[p.operands[pos]][s]) {
        operands.push_back(child);
        combine(p, pos + 1, remaining - s, operands, out);
        operands.pop_back();
      }
  }

  const Grammar& grammar_;
  std::vector<std::vector<std::vector<Expr>>> trees_;
};

}  // namespace bvsynth::oracle
