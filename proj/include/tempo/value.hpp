#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tempo {

// Raised when an exhaustive check would have to enumerate more tuples than
// the configured cap. "pass" results are always exhaustive, never sampled.
struct DomainTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A spike time: a finite, nonnegative count of unit time steps, or "inf"
// for an event that never occurs. inf orders strictly above every finite
// value and equals itself.
class TValue {
 public:
  constexpr TValue() = default;

  static constexpr TValue inf() { return TValue{}; }

  static constexpr TValue finite(std::int64_t t) {
    if (t < 0) throw std::invalid_argument("TValue: negative time");
    TValue v;
    v.t_ = t;
    return v;
  }

  constexpr bool is_inf() const { return t_ == kInf; }
  constexpr bool is_finite() const { return t_ != kInf; }

  constexpr std::int64_t time() const {
    if (is_inf()) throw std::logic_error("TValue: time() on inf");
    return t_;
  }

  friend constexpr auto operator<=>(const TValue&, const TValue&) = default;

 private:
  static constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
  std::int64_t t_ = kInf;
};

inline std::string to_string(TValue v) {
  return v.is_inf() ? "inf" : std::to_string(v.time());
}

inline TValue parse_tvalue(const std::string& text) {
  if (text == "inf") return TValue::inf();
  std::size_t pos = 0;
  long long t = std::stoll(text, &pos);
  if (pos != text.size() || t < 0)
    throw std::invalid_argument("bad time value: '" + text + "'");
  return TValue::finite(t);
}

// The primitive operators. Min..Gt are the ten 2-ary operators; Delay and
// Identity are the unary ones. Dec (decrement) is not a temporal operator
// at all: it exists so verification tests can load a known non-causal gate
// as a negative control.
enum class OpKind {
  Min,
  Le,
  Ne,
  XMin,
  Lt,
  Max,
  XMax,
  Ge,
  Eq,
  Gt,
  Delay,
  Identity,
  Dec,
};

inline bool is_binary_op(OpKind op) {
  switch (op) {
    case OpKind::Min:
    case OpKind::Le:
    case OpKind::Ne:
    case OpKind::XMin:
    case OpKind::Lt:
    case OpKind::Max:
    case OpKind::XMax:
    case OpKind::Ge:
    case OpKind::Eq:
    case OpKind::Gt:
      return true;
    default:
      return false;
  }
}

inline const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Min: return "min";
    case OpKind::Le: return "le";
    case OpKind::Ne: return "ne";
    case OpKind::XMin: return "xmin";
    case OpKind::Lt: return "lt";
    case OpKind::Max: return "max";
    case OpKind::XMax: return "xmax";
    case OpKind::Ge: return "ge";
    case OpKind::Eq: return "eq";
    case OpKind::Gt: return "gt";
    case OpKind::Delay: return "delay";
    case OpKind::Identity: return "id";
    case OpKind::Dec: return "dec";
  }
  return "?";
}

inline std::optional<OpKind> op_from_name(const std::string& name) {
  static const std::pair<const char*, OpKind> table[] = {
      {"min", OpKind::Min},   {"le", OpKind::Le},     {"ne", OpKind::Ne},
      {"xmin", OpKind::XMin}, {"lt", OpKind::Lt},     {"max", OpKind::Max},
      {"xmax", OpKind::XMax}, {"ge", OpKind::Ge},     {"eq", OpKind::Eq},
      {"gt", OpKind::Gt},     {"delay", OpKind::Delay},
      {"id", OpKind::Identity}, {"dec", OpKind::Dec},
  };
  for (auto& [n, k] : table)
    if (name == n) return k;
  return std::nullopt;
}

// Exact 2-ary semantics: when the stated relation holds the output is one
// of the inputs (the first one for the relational operators), otherwise inf.
// The inf-top ordering makes every case below total.
inline TValue apply_binary(OpKind op, TValue a, TValue b) {
  switch (op) {
    case OpKind::Min:  return a <= b ? a : b;
    case OpKind::Max:  return a >= b ? a : b;
    case OpKind::Le:   return a <= b ? a : TValue::inf();
    case OpKind::Lt:   return a < b ? a : TValue::inf();
    case OpKind::Ge:   return a >= b ? a : TValue::inf();
    case OpKind::Gt:   return a > b ? a : TValue::inf();
    case OpKind::Eq:   return a == b ? a : TValue::inf();
    case OpKind::Ne:   return a != b ? a : TValue::inf();
    case OpKind::XMin: return a < b ? a : b < a ? b : TValue::inf();
    case OpKind::XMax: return a > b ? a : b > a ? b : TValue::inf();
    default:
      throw std::invalid_argument("apply_binary: not a 2-ary operator");
  }
}

inline bool is_commutative(OpKind op) {
  switch (op) {
    case OpKind::Min:
    case OpKind::Max:
    case OpKind::Eq:
    case OpKind::Ne:
    case OpKind::XMin:
    case OpKind::XMax:
      return true;
    default:
      return false;
  }
}

// A chain of `steps` unit delays in the finite algebra S_k: each step maps
// t -> t+1 while t+1 <= k-1 and saturates to inf otherwise. Saturation at
// any intermediate step is final, which collapses to the single range check.
inline TValue delay_finite(TValue a, int steps, int k) {
  if (steps < 1) throw std::invalid_argument("delay_finite: steps must be >= 1");
  if (k < 2) throw std::invalid_argument("delay_finite: k must be >= 2");
  if (a.is_inf()) return TValue::inf();
  return a.time() + steps <= k - 1 ? TValue::finite(a.time() + steps)
                                   : TValue::inf();
}

// One unit shift in S_k; this is also how whole input tuples are shifted
// when checking finite invariance.
inline TValue unit_shift(TValue v, int k) {
  if (v.is_inf()) return TValue::inf();
  return v.time() + 1 <= k - 1 ? TValue::finite(v.time() + 1) : TValue::inf();
}

using TupleFn = std::function<TValue(std::span<const TValue>)>;

struct InvarianceCounterexample {
  std::vector<TValue> inputs;
  TValue expected;
  TValue actual;
};

// Walks every tuple in S_k^arity and checks the finite invariance rule:
// F applied to the unit-shifted tuple must equal the unit shift of F's
// value (finite results shift by one while they stay below k, and fall to
// inf otherwise). Returns the first violating tuple, or nullopt on pass.
inline std::optional<InvarianceCounterexample> check_finite_invariance(
    const TupleFn& f, int arity, int k,
    long long max_tuples = 10'000'000) {
  if (arity < 0 || k < 2)
    throw std::invalid_argument("check_finite_invariance: bad arity or k");
  long long count = 1;
  for (int i = 0; i < arity; ++i) {
    count *= k + 1;
    if (count > max_tuples)
      throw DomainTooLarge("check_finite_invariance: (k+1)^arity exceeds cap");
  }
  std::vector<int> digits(arity, 0);  // digit k encodes inf
  std::vector<TValue> x(arity), shifted(arity);
  for (long long n = 0; n < count; ++n) {
    for (int i = 0; i < arity; ++i) {
      x[i] = digits[i] == k ? TValue::inf() : TValue::finite(digits[i]);
      shifted[i] = unit_shift(x[i], k);
    }
    TValue z = f(x);
    TValue expected = unit_shift(z, k);
    TValue actual = f(shifted);
    if (actual != expected)
      return InvarianceCounterexample{x, expected, actual};
    for (int i = arity - 1; i >= 0; --i) {
      if (++digits[i] <= k) break;
      digits[i] = 0;
    }
  }
  return std::nullopt;
}

}  // namespace tempo
