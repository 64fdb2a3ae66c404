#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bitvec.hpp"
#include "error.hpp"

namespace bvsynth {

// Operator catalogue: the SMT-LIB fixed-width core, the ICFP fixed shifts and
// the if0 conditional.
enum class OpCode : std::uint8_t {
  BvNot,
  BvAnd,
  BvOr,
  BvXor,
  BvAdd,
  BvSub,
  BvShl,
  BvLshr,
  BvAshr,
  Shl1,
  Shr1,
  Shr4,
  Shr16,
  If0,
};

struct OperatorInfo {
  OpCode code;
  std::string_view name;
  unsigned arity;
};

inline constexpr std::array<OperatorInfo, 14> kOperators{{
    {OpCode::BvNot, "bvnot", 1},
    {OpCode::BvAnd, "bvand", 2},
    {OpCode::BvOr, "bvor", 2},
    {OpCode::BvXor, "bvxor", 2},
    {OpCode::BvAdd, "bvadd", 2},
    {OpCode::BvSub, "bvsub", 2},
    {OpCode::BvShl, "bvshl", 2},
    {OpCode::BvLshr, "bvlshr", 2},
    {OpCode::BvAshr, "bvashr", 2},
    {OpCode::Shl1, "shl1", 1},
    {OpCode::Shr1, "shr1", 1},
    {OpCode::Shr4, "shr4", 1},
    {OpCode::Shr16, "shr16", 1},
    {OpCode::If0, "if0", 3},
}};

constexpr const OperatorInfo& info(OpCode op) noexcept {
  return kOperators[static_cast<std::size_t>(op)];
}

constexpr std::optional<OpCode> find_operator(std::string_view name) noexcept {
  for (const auto& op : kOperators)
    if (op.name == name) return op.code;
  return std::nullopt;
}

// The value of the first if0 operand that selects the second operand.
// Changing this one entry flips the conditional convention everywhere.
inline constexpr std::uint64_t kIf0Selector = 1;

// Operator semantics on raw bits; every result is reduced to `width` bits.
// Operands beyond the operator's arity are ignored.
constexpr std::uint64_t apply_bits(OpCode op, unsigned width, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) noexcept {
  const std::uint64_t mask = width_mask(width);
  auto lshr = [&](std::uint64_t v, std::uint64_t amount) -> std::uint64_t {
    return amount >= width ? 0 : (v >> amount);
  };
  auto shl = [&](std::uint64_t v, std::uint64_t amount) -> std::uint64_t {
    return amount >= width ? 0 : ((v << amount) & mask);
  };
  switch (op) {
    case OpCode::BvNot: return ~a & mask;
    case OpCode::BvAnd: return a & b;
    case OpCode::BvOr: return a | b;
    case OpCode::BvXor: return a ^ b;
    case OpCode::BvAdd: return (a + b) & mask;
    case OpCode::BvSub: return (a - b) & mask;
    case OpCode::BvShl: return shl(a, b);
    case OpCode::BvLshr: return lshr(a, b);
    case OpCode::BvAshr: {
      const bool negative = (a >> (width - 1)) & 1;
      if (!negative) return lshr(a, b);
      if (b >= width) return mask;
      return ((a >> b) | ~(mask >> b)) & mask;
    }
    case OpCode::Shl1: return shl(a, 1);
    case OpCode::Shr1: return lshr(a, 1);
    case OpCode::Shr4: return lshr(a, 4);
    case OpCode::Shr16: return lshr(a, 16);
    case OpCode::If0: return a == kIf0Selector ? b : c;
  }
  return 0;
}

class Expr;

namespace detail {

enum class NodeKind : std::uint8_t { Var, Const, Apply };

struct ExprNode {
  NodeKind kind;
  OpCode op = OpCode::BvNot;
  std::string name;
  BitVecValue value;
  std::vector<Expr> operands;
  std::size_t size = 1;
  std::size_t hash = 0;
};

}  // namespace detail

// Immutable expression tree with shared subterms. Size is the AST node count.
class Expr {
 public:
  using Kind = detail::NodeKind;

  static Expr var(std::string name) {
    auto node = std::make_shared<detail::ExprNode>();
    node->kind = Kind::Var;
    node->hash = std::hash<std::string>{}(name) * 31 + 1;
    node->name = std::move(name);
    return Expr(std::move(node));
  }

  static Expr constant(BitVecValue value) {
    auto node = std::make_shared<detail::ExprNode>();
    node->kind = Kind::Const;
    node->value = value;
    node->hash = std::hash<BitVecValue>{}(value) * 31 + 2;
    return Expr(std::move(node));
  }

  static Expr apply(OpCode op, std::vector<Expr> operands) {
    if (operands.size() != info(op).arity)
      throw Error(ErrorKind::GrammarViolation,
                  std::string(info(op).name) + " expects " + std::to_string(info(op).arity) +
                      " operands, got " + std::to_string(operands.size()));
    auto node = std::make_shared<detail::ExprNode>();
    node->kind = Kind::Apply;
    node->op = op;
    std::size_t h = static_cast<std::size_t>(op) + 3;
    for (const auto& operand : operands) {
      node->size += operand.size();
      h = h * 1000003 ^ operand.hash();
    }
    node->hash = h;
    node->operands = std::move(operands);
    return Expr(std::move(node));
  }

  Kind kind() const noexcept { return node_->kind; }
  bool is_var() const noexcept { return node_->kind == Kind::Var; }
  bool is_const() const noexcept { return node_->kind == Kind::Const; }
  bool is_apply() const noexcept { return node_->kind == Kind::Apply; }

  OpCode op() const noexcept { return node_->op; }
  const std::string& var_name() const noexcept { return node_->name; }
  const BitVecValue& value() const noexcept { return node_->value; }
  std::span<const Expr> operands() const noexcept { return node_->operands; }
  std::size_t size() const noexcept { return node_->size; }
  std::size_t hash() const noexcept { return node_->hash; }

  bool contains(OpCode op) const {
    if (!is_apply()) return false;
    if (node_->op == op) return true;
    for (const auto& operand : operands())
      if (operand.contains(op)) return true;
    return false;
  }

  friend bool operator==(const Expr& lhs, const Expr& rhs) {
    if (lhs.node_ == rhs.node_) return true;
    const auto& l = *lhs.node_;
    const auto& r = *rhs.node_;
    if (l.kind != r.kind || l.hash != r.hash || l.size != r.size) return false;
    switch (l.kind) {
      case Kind::Var: return l.name == r.name;
      case Kind::Const: return l.value == r.value;
      case Kind::Apply: return l.op == r.op && l.operands == r.operands;
    }
    return false;
  }

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> node) : node_(std::move(node)) {}

  std::shared_ptr<const detail::ExprNode> node_;
};

struct ExprHash {
  std::size_t operator()(const Expr& e) const noexcept { return e.hash(); }
};

// Variable bindings for one evaluation. Every bound value has `width` bits.
struct Env {
  unsigned width = 64;
  std::vector<std::pair<std::string, BitVecValue>> bindings;

  const BitVecValue* find(std::string_view name) const noexcept {
    for (const auto& [bound, value] : bindings)
      if (bound == name) return &value;
    return nullptr;
  }

  friend bool operator==(const Env&, const Env&) = default;
};

namespace detail {

inline std::uint64_t eval_bits(const Expr& expr, const Env& env) {
  switch (expr.kind()) {
    case NodeKind::Var: {
      const BitVecValue* value = env.find(expr.var_name());
      if (value == nullptr) throw Error(ErrorKind::UnboundVariable, expr.var_name());
      if (value->width() != env.width)
        throw Error(ErrorKind::WidthMismatch, "binding for " + expr.var_name());
      return value->bits();
    }
    case NodeKind::Const:
      if (expr.value().width() != env.width)
        throw Error(ErrorKind::WidthMismatch,
                    "constant " + expr.value().to_literal() + " in width " +
                        std::to_string(env.width));
      return expr.value().bits();
    case NodeKind::Apply: {
      auto operands = expr.operands();
      if (expr.op() == OpCode::If0) {
        const std::uint64_t cond = eval_bits(operands[0], env);
        return cond == kIf0Selector ? eval_bits(operands[1], env) : eval_bits(operands[2], env);
      }
      std::array<std::uint64_t, 3> args{};
      for (std::size_t i = 0; i < operands.size(); ++i) args[i] = eval_bits(operands[i], env);
      return apply_bits(expr.op(), env.width, args[0], args[1], args[2]);
    }
  }
  return 0;
}

inline void append_sexpr(const Expr& expr, std::string& out) {
  switch (expr.kind()) {
    case NodeKind::Var: out += expr.var_name(); return;
    case NodeKind::Const: out += expr.value().to_literal(); return;
    case NodeKind::Apply:
      out.push_back('(');
      out += info(expr.op()).name;
      for (const auto& operand : expr.operands()) {
        out.push_back(' ');
        append_sexpr(operand, out);
      }
      out.push_back(')');
      return;
  }
}

}  // namespace detail

inline BitVecValue eval(const Expr& expr, const Env& env) {
  return BitVecValue(env.width, detail::eval_bits(expr, env));
}

inline std::string expr_to_sexpr(const Expr& expr) {
  std::string out;
  detail::append_sexpr(expr, out);
  return out;
}

}  // namespace bvsynth
