#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "expr.hpp"
#include "problem.hpp"

namespace bvsynth {

// Values of one expression on every example input, in example order.
class Signature {
 public:
  Signature() = default;
  explicit Signature(std::vector<std::uint64_t> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  std::uint64_t operator[](std::size_t k) const noexcept { return values_[k]; }
  std::span<const std::uint64_t> values() const noexcept { return values_; }
  std::vector<std::uint64_t>& mutable_values() noexcept { return values_; }

  // True when every value is the same.
  bool is_constant() const noexcept {
    return std::adjacent_find(values_.begin(), values_.end(), std::not_equal_to<>{}) == values_.end();
  }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  std::vector<std::uint64_t> values_;
};

struct SignatureHash {
  std::size_t operator()(const Signature& sig) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint64_t v : sig.values()) {
      h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

inline Signature signature_of(const Expr& expr, std::span<const Env> inputs) {
  std::vector<std::uint64_t> values;
  values.reserve(inputs.size());
  for (const Env& env : inputs) values.push_back(eval(expr, env).bits());
  return Signature(std::move(values));
}

class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;
  static Deadline after(double seconds) {
    Deadline d;
    if (seconds > 0)
      d.at_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    return d;
  }

  bool expired() const { return at_ && Clock::now() >= *at_; }

 private:
  std::optional<Clock::time_point> at_;
};

struct SearchLimits {
  std::size_t max_size = 12;
  std::uint64_t max_candidates = 5'000'000;
  Deadline deadline;
};

enum class SearchStatus { Found, NotFound, Exhausted, Timeout };

constexpr std::string_view to_string(SearchStatus status) noexcept {
  switch (status) {
    case SearchStatus::Found: return "found";
    case SearchStatus::NotFound: return "not found";
    case SearchStatus::Exhausted: return "exhausted";
    case SearchStatus::Timeout: return "timeout";
  }
  return "?";
}

struct EnumStats {
  std::uint64_t candidates = 0;   // emitted to a search
  std::uint64_t stored = 0;       // distinct signatures kept
  std::uint64_t pruned = 0;       // compositions whose signature was already stored
  std::uint64_t evaluations = 0;  // all compositions evaluated
};

// Bottom-up, size-ordered enumeration of a grammar with per-nonterminal
// signature pruning. Pools of size s are built from complete pools of
// smaller sizes; only the first expression with a given signature at a
// nonterminal is kept and reused as a subexpression.
class Enumerator {
 public:
  struct Entry {
    Expr expr;
    Signature signature;
  };

  enum class Fill { Ready, LevelDone, Timeout };

  static constexpr std::uint64_t kCheckInterval = 4096;

  Enumerator(const Grammar& grammar, std::vector<Env> inputs, unsigned width,
             std::vector<OpCode> excluded = {})
      : grammar_(grammar),
        inputs_(std::move(inputs)),
        width_(width),
        excluded_(std::move(excluded)),
        pools_(grammar.nonterminals.size()),
        stores_(grammar.nonterminals.size()) {
    for (const auto& nt : grammar_.nonterminals)
      for (const auto& p : nt.productions)
        if (allowed(p)) max_arity_ = std::max(max_arity_, p.arity());
  }

  Enumerator(const Enumerator&) = delete;
  Enumerator& operator=(const Enumerator&) = delete;

  const Grammar& grammar() const noexcept { return grammar_; }
  std::span<const Env> inputs() const noexcept { return inputs_; }
  unsigned width() const noexcept { return width_; }
  const EnumStats& stats() const noexcept { return stats_; }
  EnumStats& stats() noexcept { return stats_; }

  std::size_t completed_size() const noexcept { return completed_; }
  bool exhausted() const noexcept { return exhausted_; }

  std::span<const Entry> pool(std::size_t nt, std::size_t size) const {
    if (size >= pools_[nt].size()) return {};
    return pools_[nt][size];
  }

  const Entry* representative(std::size_t nt, const Signature& sig) const {
    auto it = stores_[nt].find(sig);
    if (it == stores_[nt].end()) return nullptr;
    return &pools_[nt][it->second.size][it->second.index];
  }

  std::size_t store_size(std::size_t nt) const { return stores_[nt].size(); }

  // Builds until pool(nt, size) has more than `index` entries, or the level
  // `size` is complete.
  Fill fill(std::size_t nt, std::size_t size, std::size_t index, const Deadline& deadline) {
    while (pool_size(nt, size) <= index) {
      if (size <= completed_) return Fill::LevelDone;
      if (!building_) {
        begin_level(completed_ + 1);
        continue;
      }
      step();
      if (++steps_ % kCheckInterval == 0 && deadline.expired()) return Fill::Timeout;
    }
    return Fill::Ready;
  }

 private:
  struct Ref {
    std::size_t size;
    std::size_t index;
  };

  struct Task {
    std::size_t nt;
    std::size_t production;
    std::array<std::size_t, 3> split{};  // operand sizes
  };

  bool allowed(const Production& p) const {
    return p.kind != Production::Kind::Op ||
           std::find(excluded_.begin(), excluded_.end(), p.op) == excluded_.end();
  }

  std::size_t pool_size(std::size_t nt, std::size_t size) const {
    return size < pools_[nt].size() ? pools_[nt][size].size() : 0;
  }

  void begin_level(std::size_t level) {
    level_ = level;
    building_ = true;
    tasks_.clear();
    task_ = 0;
    cursor_ = {};
    for (auto& pools : pools_) pools.resize(level + 1);
    for (std::size_t n = 0; n < grammar_.nonterminals.size(); ++n) {
      const auto& prods = grammar_.nonterminals[n].productions;
      for (std::size_t p = 0; p < prods.size(); ++p) {
        const Production& prod = prods[p];
        if (!allowed(prod)) continue;
        const unsigned arity = prod.arity();
        if (arity == 0) {
          if (level == 1) tasks_.push_back({n, p, {}});
          continue;
        }
        if (level < arity + 1) continue;
        add_splits(n, p, prod, level - 1);
      }
    }
    skip_empty_tasks();
  }

  // Operand size splits in lexicographically increasing order.
  void add_splits(std::size_t nt, std::size_t p, const Production& prod, std::size_t total) {
    const unsigned arity = prod.arity();
    std::array<std::size_t, 3> split{};
    auto rec = [&](auto&& self, unsigned pos, std::size_t remaining) -> void {
      if (pos + 1 == arity) {
        split[pos] = remaining;
        bool nonempty = true;
        for (unsigned i = 0; i < arity; ++i)
          nonempty = nonempty && pool_size(prod.operands[i], split[i]) > 0;
        if (nonempty) tasks_.push_back({nt, p, split});
        return;
      }
      for (std::size_t s = 1; s + (arity - pos - 1) <= remaining; ++s) {
        split[pos] = s;
        self(self, pos + 1, remaining - s);
      }
    };
    rec(rec, 0, total);
  }

  void skip_empty_tasks() {
    if (task_ >= tasks_.size()) finish_level();
  }

  void finish_level() {
    building_ = false;
    completed_ = level_;
    bool any = false;
    for (const auto& pools : pools_) any = any || !pools[level_].empty();
    if (any) {
      last_nonempty_ = level_;
    } else if (level_ >= static_cast<std::size_t>(max_arity_) * last_nonempty_ + 1) {
      exhausted_ = true;
    }
  }

  void step() {
    const Task& task = tasks_[task_];
    const Production& prod = grammar_.nonterminals[task.nt].productions[task.production];
    const unsigned arity = prod.arity();
    auto& scratch = scratch_.mutable_values();
    scratch.resize(inputs_.size());

    std::array<const Entry*, 3> args{};
    if (arity == 0) {
      if (prod.kind == Production::Kind::Var) {
        for (std::size_t k = 0; k < inputs_.size(); ++k) {
          const BitVecValue* bound = inputs_[k].find(prod.var);
          if (bound == nullptr) throw Error(ErrorKind::UnboundVariable, prod.var);
          scratch[k] = bound->bits();
        }
      } else {
        std::fill(scratch.begin(), scratch.end(), prod.value.bits());
      }
    } else {
      for (unsigned i = 0; i < arity; ++i)
        args[i] = &pools_[prod.operands[i]][task.split[i]][cursor_[i]];
      const auto& a = args[0]->signature;
      for (std::size_t k = 0; k < inputs_.size(); ++k)
        scratch[k] = apply_bits(prod.op, width_, a[k], arity > 1 ? args[1]->signature[k] : 0,
                                arity > 2 ? args[2]->signature[k] : 0);
    }

    ++stats_.evaluations;
    auto& store = stores_[task.nt];
    if (store.find(scratch_) != store.end()) {
      ++stats_.pruned;
    } else {
      ++stats_.stored;
      auto& pool = pools_[task.nt][level_];
      store.emplace(scratch_, Ref{level_, pool.size()});
      pool.push_back(Entry{make_expr(prod, args), scratch_});
    }
    advance_cursor();
  }

  Expr make_expr(const Production& prod, const std::array<const Entry*, 3>& args) const {
    switch (prod.kind) {
      case Production::Kind::Var: return Expr::var(prod.var);
      case Production::Kind::Const: return Expr::constant(prod.value);
      case Production::Kind::Op: break;
    }
    std::vector<Expr> operands;
    operands.reserve(prod.arity());
    for (unsigned i = 0; i < prod.arity(); ++i) operands.push_back(args[i]->expr);
    return Expr::apply(prod.op, std::move(operands));
  }

  // Odometer over operand pool indices, last operand fastest.
  void advance_cursor() {
    const Task& task = tasks_[task_];
    const Production& prod = grammar_.nonterminals[task.nt].productions[task.production];
    const unsigned arity = prod.arity();
    for (int i = static_cast<int>(arity) - 1; i >= 0; --i) {
      if (++cursor_[i] < pools_[prod.operands[i]][task.split[i]].size()) return;
      cursor_[i] = 0;
    }
    cursor_ = {};
    ++task_;
    skip_empty_tasks();
  }

  const Grammar& grammar_;
  std::vector<Env> inputs_;
  unsigned width_;
  std::vector<OpCode> excluded_;
  unsigned max_arity_ = 0;

  std::vector<std::vector<std::vector<Entry>>> pools_;  // [nt][size]
  std::vector<std::unordered_map<Signature, Ref, SignatureHash>> stores_;

  std::size_t completed_ = 0;
  std::size_t last_nonempty_ = 0;
  std::size_t level_ = 0;
  bool building_ = false;
  bool exhausted_ = false;
  std::vector<Task> tasks_;
  std::size_t task_ = 0;
  std::array<std::size_t, 3> cursor_{};
  std::uint64_t steps_ = 0;
  Signature scratch_;
  EnumStats stats_;
};

// Emits the representatives of one nonterminal in non-decreasing size,
// pool insertion order within a size.
class CandidateStream {
 public:
  struct Next {
    SearchStatus status;  // Found means `entry` is the next candidate
    const Enumerator::Entry* entry = nullptr;
  };

  CandidateStream(Enumerator& engine, std::size_t nt) : engine_(&engine), nt_(nt) {}

  std::size_t current_size() const noexcept { return size_; }

  Next next(const SearchLimits& limits) {
    while (true) {
      if (size_ > limits.max_size) return {SearchStatus::NotFound};
      switch (engine_->fill(nt_, size_, index_, limits.deadline)) {
        case Enumerator::Fill::Ready: {
          const auto* entry = &engine_->pool(nt_, size_)[index_++];
          ++engine_->stats().candidates;
          return {SearchStatus::Found, entry};
        }
        case Enumerator::Fill::Timeout:
          return {SearchStatus::Timeout};
        case Enumerator::Fill::LevelDone:
          if (engine_->exhausted() && size_ >= engine_->completed_size()) return {SearchStatus::Exhausted};
          ++size_;
          index_ = 0;
          break;
      }
    }
  }

 private:
  Enumerator* engine_;
  std::size_t nt_;
  std::size_t size_ = 1;
  std::size_t index_ = 0;
};

struct SearchResult {
  SearchStatus status = SearchStatus::NotFound;
  std::optional<Expr> expr;
  Signature signature;
  std::uint64_t candidates = 0;
  std::string detail;

  bool found() const noexcept { return status == SearchStatus::Found; }
};

using SignaturePredicate = std::function<bool(const Signature&)>;

// First candidate of `nt` whose signature satisfies `accept`. Each call
// re-scans the retained pools from size 1, so the result is a smallest
// satisfying expression.
inline SearchResult enumerate_until(Enumerator& engine, std::size_t nt, const SignaturePredicate& accept,
                                    const SearchLimits& limits) {
  CandidateStream stream(engine, nt);
  SearchResult result;
  while (true) {
    if (result.candidates >= limits.max_candidates) {
      result.status = SearchStatus::NotFound;
      result.detail = "candidate budget of " + std::to_string(limits.max_candidates) + " exhausted";
      return result;
    }
    if (result.candidates % Enumerator::kCheckInterval == Enumerator::kCheckInterval - 1 &&
        limits.deadline.expired()) {
      result.status = SearchStatus::Timeout;
      result.detail = "timeout";
      return result;
    }
    auto next = stream.next(limits);
    if (next.status != SearchStatus::Found) {
      result.status = next.status;
      if (next.status == SearchStatus::NotFound)
        result.detail = "no expression up to size " + std::to_string(limits.max_size);
      else
        result.detail = std::string(to_string(next.status));
      return result;
    }
    ++result.candidates;
    if (accept(next.entry->signature)) {
      result.status = SearchStatus::Found;
      result.expr = next.entry->expr;
      result.signature = next.entry->signature;
      return result;
    }
  }
}

}  // namespace bvsynth
