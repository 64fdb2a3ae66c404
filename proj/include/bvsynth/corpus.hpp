#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bitvec.hpp"
#include "expr.hpp"
#include "enumerator.hpp"
#include "problem.hpp"

namespace bvsynth {

struct CorpusSpec {
  std::size_t count = 10;
  std::size_t size_min = 3;
  std::size_t size_max = 7;
  std::size_t examples = 8;
  unsigned width = 64;
  std::uint64_t seed = 1;
  std::string grammar_template = "icfp";
};

// Template grammars. "icfp" declares its fixed shifts and if0 through
// auxiliary define-funs; "smtlib" names if0 directly as a production.
inline Grammar template_grammar(std::string_view name, unsigned width, const std::string& param = "x") {
  Grammar g;
  Nonterminal start{"Start", {}};
  start.productions.push_back(Production::make_var(param));
  start.productions.push_back(Production::make_const(BitVecValue(width, 0)));
  start.productions.push_back(Production::make_const(BitVecValue(width, 1)));
  std::vector<OpCode> ops;
  if (name == "icfp") {
    ops = {OpCode::BvNot, OpCode::Shl1,  OpCode::Shr1,  OpCode::Shr4,  OpCode::Shr16,
           OpCode::BvAnd, OpCode::BvOr,  OpCode::BvXor, OpCode::BvAdd, OpCode::If0};
  } else if (name == "smtlib") {
    ops = {OpCode::BvNot, OpCode::BvAnd, OpCode::BvOr,   OpCode::BvXor,  OpCode::BvAdd,
           OpCode::BvSub, OpCode::BvShl, OpCode::BvLshr, OpCode::BvAshr, OpCode::If0};
  } else {
    throw std::invalid_argument("unknown grammar template '" + std::string(name) + "'");
  }
  for (OpCode op : ops) start.productions.push_back(Production::make_op(op, std::vector<std::size_t>(info(op).arity, 0)));
  g.nonterminals.push_back(std::move(start));
  return g;
}

// Random expression of exactly `size` nodes derivable from `nt`.
class ExprSampler {
 public:
  ExprSampler(const Grammar& grammar, std::size_t max_size) : grammar_(grammar), max_size_(max_size) {
    // feasible_[nt][s]: nt derives some expression of size s.
    feasible_.assign(grammar.nonterminals.size(), std::vector<bool>(max_size + 1, false));
    for (std::size_t s = 1; s <= max_size; ++s)
      for (std::size_t n = 0; n < grammar.nonterminals.size(); ++n)
        for (const auto& p : grammar.nonterminals[n].productions)
          if (has_split(p, s)) feasible_[n][s] = true;
  }

  bool feasible(std::size_t nt, std::size_t size) const { return size <= max_size_ && feasible_[nt][size]; }

  template <typename Rng>
  Expr sample(std::size_t nt, std::size_t size, Rng& rng) const {
    std::vector<const Production*> options;
    for (const auto& p : grammar_.nonterminals[nt].productions)
      if (has_split(p, size)) options.push_back(&p);
    if (options.empty()) throw std::invalid_argument("no expression of size " + std::to_string(size));
    const Production& p = *options[rng() % options.size()];
    switch (p.kind) {
      case Production::Kind::Var: return Expr::var(p.var);
      case Production::Kind::Const: return Expr::constant(p.value);
      case Production::Kind::Op: break;
    }
    std::vector<std::vector<std::size_t>> splits;
    std::vector<std::size_t> current;
    collect_splits(p, 0, size - 1, current, splits);
    const auto& split = splits[rng() % splits.size()];
    std::vector<Expr> operands;
    for (std::size_t i = 0; i < split.size(); ++i) operands.push_back(sample(p.operands[i], split[i], rng));
    return Expr::apply(p.op, std::move(operands));
  }

 private:
  bool has_split(const Production& p, std::size_t size) const {
    if (p.kind != Production::Kind::Op) return size == 1;
    if (size < 2) return false;
    std::vector<std::vector<std::size_t>> splits;
    std::vector<std::size_t> current;
    collect_splits(p, 0, size - 1, current, splits);
    return !splits.empty();
  }

  void collect_splits(const Production& p, std::size_t pos, std::size_t remaining, std::vector<std::size_t>& current,
                      std::vector<std::vector<std::size_t>>& out) const {
    const std::size_t arity = p.arity();
    if (pos == arity) {
      if (remaining == 0) out.push_back(current);
      return;
    }
    for (std::size_t s = 1; s + (arity - pos - 1) <= remaining; ++s) {
      if (s >= feasible_[p.operands[pos]].size() || !feasible_[p.operands[pos]][s]) continue;
      current.push_back(s);
      collect_splits(p, pos + 1, remaining - s, current, out);
      current.pop_back();
    }
  }

  const Grammar& grammar_;
  std::size_t max_size_;
  std::vector<std::vector<bool>> feasible_;
};

namespace detail {

inline std::string sort_text(unsigned width) { return "(BitVec " + std::to_string(width) + ")"; }

inline std::string render_icfp_prelude(unsigned width) {
  const std::string s = sort_text(width);
  auto lit = [&](std::uint64_t v) { return BitVecValue(width, v).to_literal(); };
  std::string out;
  out += "(define-fun shr1 ((x " + s + ")) " + s + " (bvlshr x " + lit(1) + "))\n";
  out += "(define-fun shr4 ((x " + s + ")) " + s + " (bvlshr x " + lit(4) + "))\n";
  out += "(define-fun shr16 ((x " + s + ")) " + s + " (bvlshr x " + lit(16) + "))\n";
  out += "(define-fun shl1 ((x " + s + ")) " + s + " (bvshl x " + lit(1) + "))\n";
  out += "(define-fun if0 ((x " + s + ") (y " + s + ") (z " + s + ")) " + s + " (ite (= x " + lit(1) +
         ") y z))\n";
  return out;
}

inline std::string render_grammar(const Grammar& g, unsigned width) {
  std::string out = "(";
  for (std::size_t n = 0; n < g.nonterminals.size(); ++n) {
    const auto& nt = g.nonterminals[n];
    if (n > 0) out += "\n   ";
    out += "(" + nt.name + " " + sort_text(width) + " (";
    for (std::size_t i = 0; i < nt.productions.size(); ++i) {
      const auto& p = nt.productions[i];
      if (i > 0) out += ' ';
      switch (p.kind) {
        case Production::Kind::Var: out += p.var; break;
        case Production::Kind::Const: out += p.value.to_literal(); break;
        case Production::Kind::Op:
          out += "(" + std::string(info(p.op).name);
          for (std::size_t o : p.operands) out += " " + g.nonterminals[o].name;
          out += ")";
          break;
      }
    }
    out += "))";
  }
  return out + ")";
}

}  // namespace detail

// SyGuS v1 text for a unary PBE problem. The icfp template adds its
// define-fun prelude.
inline std::string render_problem(const Problem& problem, bool icfp_prelude, std::string_view comment = {}) {
  std::string out;
  if (!comment.empty()) out += "; " + std::string(comment) + "\n";
  out += "(set-logic BV)\n\n";
  if (icfp_prelude) out += detail::render_icfp_prelude(problem.width) + "\n";
  const std::string s = detail::sort_text(problem.width);
  out += "(synth-fun " + problem.function + " ((" + problem.params.at(0) + " " + s + ")) " + s + "\n  " +
         detail::render_grammar(problem.grammar, problem.width) + ")\n\n";
  for (const auto& e : problem.examples)
    out += "(constraint (= (" + problem.function + " " + e.inputs.at(0).to_literal() + ") " +
           e.output.to_literal() + "))\n";
  out += "\n(check-synth)\n";
  return out;
}

namespace detail {

// The target's outputs vary across the inputs and every if0 in it takes
// both branches on some input.
inline bool exercises_inputs(const Expr& target, std::span<const Env> envs) {
  std::vector<Expr> stack{target};
  bool root = true;
  while (!stack.empty()) {
    Expr e = stack.back();
    stack.pop_back();
    if (root && signature_of(e, envs).is_constant()) return false;
    root = false;
    if (!e.is_apply()) continue;
    if (e.op() == OpCode::If0) {
      const Signature cond = signature_of(e.operands()[0], envs);
      const auto values = cond.values();
      const auto hits = std::count(values.begin(), values.end(), kIf0Selector);
      if (hits == 0 || hits == static_cast<std::ptrdiff_t>(values.size())) return false;
    }
    for (const auto& operand : e.operands()) stack.push_back(operand);
  }
  return true;
}

}  // namespace detail

inline constexpr int kSampleAttempts = 1000;

// One generated instance: the sampled target and its problem text.
struct GeneratedInstance {
  std::string name;
  Expr target;
  std::string text;
};

inline std::vector<GeneratedInstance> generate_instances(const CorpusSpec& spec) {
  if (spec.size_min < 1 || spec.size_min > spec.size_max) throw std::invalid_argument("bad size range");
  if (spec.width < 1 || spec.width > 64) throw std::invalid_argument("width must be in [1, 64]");
  if (spec.examples < 1 || (spec.width < 64 && spec.examples > (std::uint64_t{1} << spec.width)))
    throw std::invalid_argument("cannot draw that many distinct inputs at this width");

  const bool icfp = spec.grammar_template == "icfp";
  Problem base;
  base.function = "f";
  base.params = {"x"};
  base.width = spec.width;
  base.grammar = template_grammar(spec.grammar_template, spec.width);
  ExprSampler sampler(base.grammar, spec.size_max);

  std::vector<GeneratedInstance> out;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Problem p = base;
    std::unordered_set<std::uint64_t> seen;
    while (p.examples.size() < spec.examples) {
      const BitVecValue input(spec.width, rng());
      if (!seen.insert(input.bits()).second) continue;
      p.examples.push_back(Example{{input}, {}, p.examples.size()});
    }
    const std::vector<Env> envs = p.example_envs();

    std::optional<Expr> target;
    for (int attempt = 0; attempt < kSampleAttempts; ++attempt) {
      std::size_t size = spec.size_min + rng() % (spec.size_max - spec.size_min + 1);
      while (size <= spec.size_max && !sampler.feasible(base.grammar.start, size)) ++size;
      if (size > spec.size_max) throw std::invalid_argument("grammar derives no expression in the size range");
      target = sampler.sample(base.grammar.start, size, rng);
      if (detail::exercises_inputs(*target, envs)) break;
    }
    for (auto& e : p.examples) e.output = eval(*target, envs[e.index]);
    char name[32];
    std::snprintf(name, sizeof name, "inst_%04zu.sl", i);
    out.push_back({name, *target, render_problem(p, icfp, "target: " + expr_to_sexpr(*target))});
  }
  return out;
}

inline std::vector<std::filesystem::path> generate_corpus(const CorpusSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  for (const auto& inst : generate_instances(spec)) {
    files.push_back(dir / inst.name);
    std::ofstream out(files.back(), std::ios::binary);
    out << inst.text;
    if (!out) throw std::runtime_error("cannot write " + files.back().string());
  }
  return files;
}

}  // namespace bvsynth
