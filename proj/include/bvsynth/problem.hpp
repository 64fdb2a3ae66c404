#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bitvec.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "sexpr.hpp"

namespace bvsynth {

struct Production {
  enum class Kind { Var, Const, Op };

  Kind kind = Kind::Var;
  std::string var;
  BitVecValue value;
  OpCode op = OpCode::BvNot;
  std::vector<std::size_t> operands;  // nonterminal indices

  static Production make_var(std::string name) {
    Production p;
    p.kind = Kind::Var;
    p.var = std::move(name);
    return p;
  }
  static Production make_const(BitVecValue value) {
    Production p;
    p.kind = Kind::Const;
    p.value = value;
    return p;
  }
  static Production make_op(OpCode op, std::vector<std::size_t> operands) {
    Production p;
    p.kind = Kind::Op;
    p.op = op;
    p.operands = std::move(operands);
    return p;
  }

  unsigned arity() const noexcept { return kind == Kind::Op ? info(op).arity : 0; }

  friend bool operator==(const Production&, const Production&) = default;
};

struct Nonterminal {
  std::string name;
  std::vector<Production> productions;

  friend bool operator==(const Nonterminal&, const Nonterminal&) = default;
};

struct Grammar {
  std::vector<Nonterminal> nonterminals;
  std::size_t start = 0;

  struct Site {
    std::size_t nonterminal;
    std::size_t production;
  };

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < nonterminals.size(); ++i)
      if (nonterminals[i].name == name) return i;
    return std::nullopt;
  }

  const Production& production(Site site) const {
    return nonterminals[site.nonterminal].productions[site.production];
  }

  // The if0 production used for decision nodes; one under the start symbol
  // wins over others.
  std::optional<Site> if0_site() const {
    std::optional<Site> found;
    for (std::size_t n = 0; n < nonterminals.size(); ++n) {
      const auto& prods = nonterminals[n].productions;
      for (std::size_t p = 0; p < prods.size(); ++p) {
        if (prods[p].kind != Production::Kind::Op || prods[p].op != OpCode::If0) continue;
        if (n == start) return Site{n, p};
        if (!found) found = Site{n, p};
      }
    }
    return found;
  }

  std::size_t production_count() const {
    std::size_t total = 0;
    for (const auto& nt : nonterminals) total += nt.productions.size();
    return total;
  }

  unsigned max_arity() const {
    unsigned arity = 0;
    for (const auto& nt : nonterminals)
      for (const auto& p : nt.productions) arity = std::max(arity, p.arity());
    return arity;
  }

  // Whether `expr` is derivable from nonterminal `nt`.
  bool derives(const Expr& expr, std::size_t nt) const {
    for (const auto& p : nonterminals[nt].productions) {
      switch (p.kind) {
        case Production::Kind::Var:
          if (expr.is_var() && expr.var_name() == p.var) return true;
          break;
        case Production::Kind::Const:
          if (expr.is_const() && expr.value() == p.value) return true;
          break;
        case Production::Kind::Op: {
          if (!expr.is_apply() || expr.op() != p.op) break;
          auto operands = expr.operands();
          bool all = true;
          for (std::size_t i = 0; i < operands.size() && all; ++i)
            all = derives(operands[i], p.operands[i]);
          if (all) return true;
          break;
        }
      }
    }
    return false;
  }

  friend bool operator==(const Grammar&, const Grammar&) = default;
};

struct Example {
  std::vector<BitVecValue> inputs;
  BitVecValue output;
  std::size_t index = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

struct Problem {
  std::string function;
  std::vector<std::string> params;
  unsigned width = 64;
  Grammar grammar;
  std::vector<Example> examples;

  Env env_for(const Example& example) const {
    Env env{width, {}};
    for (std::size_t i = 0; i < params.size(); ++i) env.bindings.emplace_back(params[i], example.inputs[i]);
    return env;
  }

  std::vector<Env> example_envs() const {
    std::vector<Env> envs;
    envs.reserve(examples.size());
    for (const auto& e : examples) envs.push_back(env_for(e));
    return envs;
  }

  friend bool operator==(const Problem&, const Problem&) = default;
};

namespace detail {

inline unsigned literal_width(const SExpr& lit) {
  return static_cast<unsigned>(lit.kind == SExpr::Kind::Hex ? lit.text.size() * 4 : lit.text.size());
}

inline BitVecValue parse_literal(const SExpr& lit, std::optional<unsigned> width = std::nullopt) {
  if (!lit.is_bv_literal()) lit.fail("expected bitvector literal");
  const unsigned w = literal_width(lit);
  if (w == 0 || w > 64) lit.fail("bitvector literals wider than 64 bits are not supported");
  if (width && *width != w)
    throw Error(ErrorKind::WidthMismatch, std::to_string(lit.line) + ":" + std::to_string(lit.col) +
                                              ": literal has " + std::to_string(w) +
                                              " bits, expected " + std::to_string(*width));
  std::uint64_t bits = 0;
  for (char c : lit.text) {
    unsigned digit = 0;
    if (lit.kind == SExpr::Kind::Binary)
      digit = static_cast<unsigned>(c - '0');
    else if (c >= '0' && c <= '9')
      digit = static_cast<unsigned>(c - '0');
    else
      digit = static_cast<unsigned>(std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
    bits = lit.kind == SExpr::Kind::Binary ? (bits << 1) | digit : (bits << 4) | digit;
  }
  return BitVecValue(w, bits);
}

// Accepts `(BitVec w)` and `(_ BitVec w)`.
inline unsigned parse_bv_sort(const SExpr& sort) {
  const auto& items = sort.items;
  std::size_t at = 0;
  if (sort.is_list() && items.size() == 3 && items[0].is_symbol("_")) at = 1;
  if (!sort.is_list() || items.size() != at + 2 || !items[at].is_symbol("BitVec") ||
      items[at + 1].kind != SExpr::Kind::Numeral)
    sort.fail("expected a (BitVec <width>) sort");
  const unsigned long w = std::stoul(items[at + 1].text);
  if (w < 1 || w > 64) sort.fail("bitvector width must be between 1 and 64");
  return static_cast<unsigned>(w);
}

}  // namespace detail

// Converts a term over `params` into an Expr. Only catalogue operators,
// parameters and literals of the given width are allowed.
inline Expr parse_term(const SExpr& term, std::span<const std::string> params, unsigned width) {
  switch (term.kind) {
    case SExpr::Kind::Hex:
    case SExpr::Kind::Binary:
      return Expr::constant(detail::parse_literal(term, width));
    case SExpr::Kind::Symbol:
      if (std::find(params.begin(), params.end(), term.text) == params.end())
        throw Error(ErrorKind::UnboundVariable, term.text);
      return Expr::var(term.text);
    case SExpr::Kind::List: {
      if (term.items.empty() || !term.items[0].is_symbol()) term.fail("expected operator application");
      auto op = find_operator(term.items[0].text);
      if (!op) term.items[0].fail("unknown operator '" + term.items[0].text + "'");
      if (term.items.size() - 1 != info(*op).arity)
        term.fail("wrong operand count for " + term.items[0].text);
      std::vector<Expr> operands;
      for (std::size_t i = 1; i < term.items.size(); ++i)
        operands.push_back(parse_term(term.items[i], params, width));
      return Expr::apply(*op, std::move(operands));
    }
    default:
      term.fail("unexpected token in term");
  }
}

inline Expr parse_expr(std::string_view text, std::span<const std::string> params, unsigned width) {
  auto terms = read_sexprs(text);
  if (terms.size() != 1) throw SyntaxError(1, 1, "expected exactly one term");
  return parse_term(terms[0], params, width);
}

// Declarations needed to read constraints.
struct ConstraintContext {
  std::string function;
  std::size_t arity = 1;
  unsigned width = 64;
  std::map<std::string, unsigned> declared_vars;
};

namespace detail {

// Application of the synth function whose arguments are all literals.
inline std::optional<std::vector<BitVecValue>> ground_call(const SExpr& term,
                                                           const ConstraintContext& ctx) {
  if (!term.is_call(ctx.function) || term.items.size() != ctx.arity + 1) return std::nullopt;
  std::vector<BitVecValue> inputs;
  for (std::size_t i = 1; i < term.items.size(); ++i) {
    if (!term.items[i].is_bv_literal()) return std::nullopt;
    inputs.push_back(parse_literal(term.items[i], ctx.width));
  }
  return inputs;
}

inline std::optional<Example> direct_form(const SExpr& c, const ConstraintContext& ctx) {
  if (!c.is_call("=") || c.items.size() != 3) return std::nullopt;
  for (int side = 0; side < 2; ++side) {
    const SExpr& call = c.items[1 + side];
    const SExpr& value = c.items[2 - side];
    if (!value.is_bv_literal()) continue;
    if (auto inputs = ground_call(call, ctx))
      return Example{std::move(*inputs), parse_literal(value, ctx.width), 0};
  }
  return std::nullopt;
}

inline void flatten_and(const SExpr& term, std::vector<const SExpr*>& out) {
  if (term.is_call("and")) {
    for (std::size_t i = 1; i < term.items.size(); ++i) flatten_and(term.items[i], out);
  } else {
    out.push_back(&term);
  }
}

// [and_j (v_j = i_j) and (f(v_0..v_n) = v_t)] => (v_t = o)
inline std::optional<Example> implication_form(const SExpr& c, const ConstraintContext& ctx) {
  if (!c.is_call("=>") || c.items.size() != 3) return std::nullopt;
  auto is_declared = [&](const SExpr& s) { return s.is_symbol() && ctx.declared_vars.count(s.text) > 0; };

  std::vector<const SExpr*> conjuncts;
  flatten_and(c.items[1], conjuncts);
  std::map<std::string, BitVecValue> pins;
  const SExpr* call = nullptr;
  const SExpr* result_var = nullptr;
  for (const SExpr* conj : conjuncts) {
    if (!conj->is_call("=") || conj->items.size() != 3) return std::nullopt;
    const SExpr& lhs = conj->items[1];
    const SExpr& rhs = conj->items[2];
    if (is_declared(lhs) && rhs.is_bv_literal()) {
      auto [it, fresh] = pins.emplace(lhs.text, parse_literal(rhs, ctx.width));
      if (!fresh && it->second != parse_literal(rhs, ctx.width)) return std::nullopt;
    } else if (is_declared(rhs) && lhs.is_bv_literal()) {
      auto [it, fresh] = pins.emplace(rhs.text, parse_literal(lhs, ctx.width));
      if (!fresh && it->second != parse_literal(lhs, ctx.width)) return std::nullopt;
    } else if (lhs.is_call(ctx.function) && is_declared(rhs) && call == nullptr) {
      call = &lhs;
      result_var = &rhs;
    } else if (rhs.is_call(ctx.function) && is_declared(lhs) && call == nullptr) {
      call = &rhs;
      result_var = &lhs;
    } else {
      return std::nullopt;
    }
  }
  if (call == nullptr || call->items.size() != ctx.arity + 1) return std::nullopt;

  const SExpr& consequent = c.items[2];
  if (!consequent.is_call("=") || consequent.items.size() != 3) return std::nullopt;
  const SExpr* out_lit = nullptr;
  if (consequent.items[1].is_symbol(result_var->text) && consequent.items[2].is_bv_literal())
    out_lit = &consequent.items[2];
  else if (consequent.items[2].is_symbol(result_var->text) && consequent.items[1].is_bv_literal())
    out_lit = &consequent.items[1];
  if (out_lit == nullptr || pins.count(result_var->text) > 0) return std::nullopt;

  std::vector<BitVecValue> inputs;
  for (std::size_t i = 1; i < call->items.size(); ++i) {
    const SExpr& arg = call->items[i];
    if (arg.is_bv_literal()) {
      inputs.push_back(parse_literal(arg, ctx.width));
      continue;
    }
    if (!arg.is_symbol()) return std::nullopt;
    auto pin = pins.find(arg.text);
    if (pin == pins.end()) return std::nullopt;
    inputs.push_back(pin->second);
  }
  return Example{std::move(inputs), parse_literal(*out_lit, ctx.width), 0};
}

}  // namespace detail

// Recognizes every constraint as one I/O example, or fails with NotPBE.
inline std::vector<Example> detect_pbe(std::span<const SExpr> constraints, const ConstraintContext& ctx) {
  std::vector<Example> examples;
  for (const SExpr& c : constraints) {
    auto example = detail::direct_form(c, ctx);
    if (!example) example = detail::implication_form(c, ctx);
    if (!example)
      throw Error(ErrorKind::NotPBE, "constraint at " + std::to_string(c.line) + ":" +
                                         std::to_string(c.col) + " is not an input/output example");
    example->index = examples.size();
    examples.push_back(std::move(*example));
  }
  return examples;
}

namespace detail {

inline Grammar parse_grammar(const SExpr& rules, const std::vector<std::string>& params, unsigned width,
                             const std::map<std::string, OpCode>& aliases) {
  if (!rules.is_list() || rules.items.empty()) rules.fail("expected grammar rule list");
  Grammar g;
  for (const SExpr& rule : rules.items) {
    if (rule.is_list() && rule.items.size() == 2)
      rule.fail("grammar predeclarations are SyGuS v2 syntax; only the v1 format is supported");
    if (!rule.is_list() || rule.items.size() != 3 || !rule.items[0].is_symbol() || !rule.items[2].is_list())
      rule.fail("expected (<nonterminal> <sort> (<productions>))");
    if (g.find(rule.items[0].text)) rule.fail("duplicate nonterminal " + rule.items[0].text);
    if (parse_bv_sort(rule.items[1]) != width)
      throw Error(ErrorKind::WidthMismatch, "nonterminal " + rule.items[0].text);
    g.nonterminals.push_back({rule.items[0].text, {}});
  }
  g.start = g.find("Start").value_or(0);

  for (std::size_t n = 0; n < rules.items.size(); ++n) {
    auto& prods = g.nonterminals[n].productions;
    for (const SExpr& prod : rules.items[n].items[2].items) {
      if (prod.is_bv_literal()) {
        prods.push_back(Production::make_const(parse_literal(prod, width)));
      } else if (prod.is_symbol()) {
        if (std::find(params.begin(), params.end(), prod.text) != params.end())
          prods.push_back(Production::make_var(prod.text));
        else if (g.find(prod.text))
          prod.fail("unit production '" + prod.text + "' is not supported");
        else
          prod.fail("unknown symbol '" + prod.text + "' in grammar");
      } else if (prod.is_list() && !prod.items.empty() && prod.items[0].is_symbol()) {
        const std::string& head = prod.items[0].text;
        std::optional<OpCode> op;
        if (auto alias = aliases.find(head); alias != aliases.end())
          op = alias->second;
        else
          op = find_operator(head);
        if (!op) prod.items[0].fail("unknown operator '" + head + "'");
        if (prod.items.size() - 1 != info(*op).arity) prod.fail("wrong operand count for " + head);
        std::vector<std::size_t> operands;
        for (std::size_t i = 1; i < prod.items.size(); ++i) {
          const SExpr& operand = prod.items[i];
          auto nt = operand.is_symbol() ? g.find(operand.text) : std::nullopt;
          if (!nt) operand.fail("operator operands in grammar productions must be nonterminals");
          operands.push_back(*nt);
        }
        prods.push_back(Production::make_op(*op, std::move(operands)));
      } else {
        prod.fail("unsupported grammar production");
      }
    }
  }

  // Every nonterminal must derive a finite expression.
  std::vector<bool> productive(g.nonterminals.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t n = 0; n < g.nonterminals.size(); ++n) {
      if (productive[n]) continue;
      for (const auto& p : g.nonterminals[n].productions) {
        bool ok = std::all_of(p.operands.begin(), p.operands.end(), [&](std::size_t o) { return productive[o]; });
        if (ok) {
          productive[n] = changed = true;
          break;
        }
      }
    }
  }
  for (std::size_t n = 0; n < productive.size(); ++n)
    if (!productive[n]) rules.items[n].fail("nonterminal " + g.nonterminals[n].name + " derives no finite expression");
  return g;
}

}  // namespace detail

// Reads a SyGuS-IF v1 PBE problem over bitvectors.
inline Problem parse_problem(std::string_view text) {
  const std::vector<SExpr> commands = read_sexprs(text);
  Problem problem;
  ConstraintContext ctx;
  std::map<std::string, OpCode> aliases;
  std::vector<SExpr> constraints;
  const SExpr* synth = nullptr;

  for (const SExpr& cmd : commands) {
    if (!cmd.is_list() || cmd.items.empty() || !cmd.items[0].is_symbol()) cmd.fail("expected a command");
    const std::string& name = cmd.items[0].text;
    if (name == "set-logic" || name == "set-option" || name == "check-synth") {
      continue;
    } else if (name == "synth-fun") {
      if (synth != nullptr) cmd.fail("only one synth-fun is supported");
      synth = &cmd;
    } else if (name == "define-fun") {
      // Auxiliary definitions are accepted only when they name a catalogue
      // operator of matching arity; their bodies are not expanded.
      if (cmd.items.size() != 5 || !cmd.items[1].is_symbol() || !cmd.items[2].is_list())
        cmd.fail("malformed define-fun");
      auto op = find_operator(cmd.items[1].text);
      if (!op || info(*op).arity != cmd.items[2].items.size())
        cmd.items[1].fail("unsupported define-fun '" + cmd.items[1].text + "'");
      aliases[cmd.items[1].text] = *op;
    } else if (name == "declare-var") {
      if (cmd.items.size() != 3 || !cmd.items[1].is_symbol()) cmd.fail("malformed declare-var");
      ctx.declared_vars[cmd.items[1].text] = detail::parse_bv_sort(cmd.items[2]);
    } else if (name == "constraint") {
      if (cmd.items.size() != 2) cmd.fail("malformed constraint");
      constraints.push_back(cmd.items[1]);
    } else {
      cmd.items[0].fail("unsupported command '" + name + "'");
    }
  }
  if (synth == nullptr) throw SyntaxError(1, 1, "missing synth-fun");

  const auto& items = synth->items;
  if (items.size() == 6) synth->fail("grouped rule lists are SyGuS v2 syntax; only the v1 format is supported");
  if (items.size() < 4 || items.size() > 5 || !items[1].is_symbol() || !items[2].is_list())
    synth->fail("malformed synth-fun");
  problem.function = items[1].text;
  for (const SExpr& param : items[2].items) {
    if (!param.is_list() || param.items.size() != 2 || !param.items[0].is_symbol())
      param.fail("malformed parameter");
    problem.params.push_back(param.items[0].text);
  }
  if (problem.params.size() != 1)
    throw Error(ErrorKind::UnsupportedArity, problem.function + " has " +
                                                 std::to_string(problem.params.size()) +
                                                 " parameters; only unary functions are supported");
  problem.width = detail::parse_bv_sort(items[3]);
  if (detail::parse_bv_sort(items[2].items[0].items[1]) != problem.width)
    throw Error(ErrorKind::WidthMismatch, "parameter and return sorts differ");
  for (const auto& [var, w] : ctx.declared_vars)
    if (w != problem.width) throw Error(ErrorKind::WidthMismatch, "declared variable " + var);

  if (items.size() == 4)
    throw Error(ErrorKind::MissingIf0Rule, "synth-fun " + problem.function + " has no grammar");
  problem.grammar = detail::parse_grammar(items[4], problem.params, problem.width, aliases);
  if (!problem.grammar.if0_site())
    throw Error(ErrorKind::MissingIf0Rule, "the grammar must contain a production named if0");

  ctx.function = problem.function;
  ctx.arity = problem.params.size();
  ctx.width = problem.width;
  problem.examples = detect_pbe(constraints, ctx);
  if (problem.examples.empty()) throw Error(ErrorKind::NotPBE, "no examples");

  for (std::size_t i = 0; i < problem.examples.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (problem.examples[i].inputs == problem.examples[j].inputs &&
          problem.examples[i].output != problem.examples[j].output)
        throw Error(ErrorKind::InconsistentExamples,
                    "examples " + std::to_string(j) + " and " + std::to_string(i));
  return problem;
}

inline std::string emit_solution(const Problem& problem, const Expr& solution) {
  const std::string sort = "(BitVec " + std::to_string(problem.width) + ")";
  std::string out = "(define-fun " + problem.function + " (";
  for (std::size_t i = 0; i < problem.params.size(); ++i) {
    if (i > 0) out += ' ';
    out += "(" + problem.params[i] + " " + sort + ")";
  }
  out += ") " + sort + " " + expr_to_sexpr(solution) + ")";
  return out;
}

struct ParsedSolution {
  std::string function;
  std::vector<std::string> params;
  unsigned width = 64;
  Expr body = Expr::var("");
};

// Reads back a define-fun produced by emit_solution.
inline ParsedSolution parse_solution(std::string_view text) {
  auto forms = read_sexprs(text);
  if (forms.size() != 1 || !forms[0].is_call("define-fun") || forms[0].items.size() != 5)
    throw SyntaxError(1, 1, "expected a single define-fun");
  const SExpr& def = forms[0];
  ParsedSolution out;
  if (!def.items[1].is_symbol() || !def.items[2].is_list()) def.fail("malformed define-fun");
  out.function = def.items[1].text;
  for (const SExpr& param : def.items[2].items) {
    if (!param.is_list() || param.items.size() != 2 || !param.items[0].is_symbol())
      param.fail("malformed parameter");
    out.params.push_back(param.items[0].text);
  }
  out.width = detail::parse_bv_sort(def.items[3]);
  out.body = parse_term(def.items[4], out.params, out.width);
  return out;
}

}  // namespace bvsynth
