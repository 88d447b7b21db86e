#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "tensorsplit/error.hpp"
#include "tensorsplit/index_core.hpp"

namespace tensorsplit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

/// Hurwitz zeta sum_{k>=0} (k + a)^{-s} for s > 1, a >= 1. Direct summation
/// of the first terms followed by an Euler-Maclaurin remainder.
inline double hurwitz_zeta(double s, double a) {
  constexpr int kDirect = 48;
  double sum = 0.0;
  for (int k = kDirect - 1; k >= 0; --k) sum += std::pow(a + k, -s);
  const double n = a + kDirect;
  const double fn = std::pow(n, -s);
  double tail = n * fn / (s - 1.0) + 0.5 * fn;
  tail += s * fn / n / 12.0;
  tail -= s * (s + 1) * (s + 2) * fn / (n * n * n) / 720.0;
  tail += s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * fn / std::pow(n, 5) / 30240.0;
  return sum + tail;
}

inline constexpr std::uint64_t kExplicitLimit = 20'000'000;

}  // namespace detail

/// Asymptotic form c * r^k * k^{-p} of a sequence tail.
struct Envelope {
  double c = 0.0;
  double r = 1.0;
  double p = 0.0;

  double operator()(Coord k) const {
    if (c == 0.0) return 0.0;
    return c * std::pow(r, static_cast<double>(k)) * std::pow(static_cast<double>(k), -p);
  }
  bool zero() const { return c == 0.0; }
  bool summable() const { return c == 0.0 || r < 1.0 || (r == 1.0 && p > 1.0); }
  bool vanishing() const { return c == 0.0 || r < 1.0 || (r == 1.0 && p > 0.0); }
  bool constant() const { return r == 1.0 && p == 0.0; }

  /// First k from which the envelope is nonincreasing (only meaningful when
  /// vanishing() or constant()).
  Coord monotone_from() const {
    if (c == 0.0 || r == 1.0) return 1;
    if (r < 1.0 && p >= 0.0) return 1;
    // derivative of log: log r - p / k < 0  <=>  k > p / log r  (p < 0)
    return static_cast<Coord>(std::ceil(p / std::log(r))) + 1;
  }
};

/// Per-coordinate sequence s_k, k = 1, 2, ...: explicit head values followed
/// by a tail that is either exactly c r^k k^{-p} or asymptotically equal to
/// it (with the true values supplied by an evaluator). The class is closed
/// under products, quotients and real powers, which is what lets the weight
/// models derive convergent tail sums in closed form.
class Sequence {
 public:
  Sequence() = default;

  static Sequence constant(double c) { return Sequence({}, {c, 1.0, 0.0}); }
  static Sequence power(double c, double p) { return Sequence({}, {c, 1.0, p}); }
  static Sequence geometric(double c, double r) { return Sequence({}, {c, r, 0.0}); }
  static Sequence list(std::vector<double> values) { return Sequence(std::move(values), {0.0, 1.0, 0.0}); }

  Sequence(std::vector<double> head, Envelope tail) : head_(std::move(head)), env_(tail) {}

  double operator()(Coord k) const {
    if (k == 0) fail(ErrorCode::InvalidArgument, "coordinates are 1-based");
    if (k <= head_.size()) return head_[k - 1];
    return tail_fn_ ? tail_fn_(k) : env_(k);
  }

  const std::vector<double>& head() const noexcept { return head_; }
  Coord head_size() const noexcept { return static_cast<Coord>(head_.size()); }
  const Envelope& envelope() const noexcept { return env_; }
  bool exact_tail() const noexcept { return !tail_fn_; }
  bool finitely_supported() const noexcept { return env_.zero(); }
  bool summable() const { return env_.summable(); }
  bool vanishing() const { return env_.vanishing(); }

  /// Largest coordinate that can carry a nonzero value, if finite.
  std::optional<Coord> last_nonzero() const {
    if (!env_.zero()) return std::nullopt;
    for (Coord k = head_size(); k >= 1; --k)
      if (head_[k - 1] != 0.0) return k;
    return Coord{0};
  }

  Sequence operator*(const Sequence& o) const {
    return combine(o, {env_.c * o.env_.c, env_.r * o.env_.r, env_.p + o.env_.p},
                   [](double x, double y) { return x * y; });
  }

  Sequence operator/(const Sequence& o) const {
    Envelope e{0.0, 1.0, 0.0};
    if (env_.c != 0.0) {
      if (o.env_.c == 0.0) fail(ErrorCode::InvalidArgument, "division by a finitely supported sequence");
      e = {env_.c / o.env_.c, env_.r / o.env_.r, env_.p - o.env_.p};
    }
    return combine(o, e, [](double x, double y) { return x == 0.0 ? 0.0 : x / y; });
  }

  /// Quotient that is zero wherever the divisor is zero (dropped entries).
  Sequence ratio_or_zero(const Sequence& o) const {
    Envelope e{0.0, 1.0, 0.0};
    if (env_.c != 0.0 && o.env_.c != 0.0) e = {env_.c / o.env_.c, env_.r / o.env_.r, env_.p - o.env_.p};
    return combine(o, e, [](double x, double y) { return (x == 0.0 || y == 0.0) ? 0.0 : x / y; });
  }

  Sequence pow(double beta) const {
    Sequence s;
    s.env_ = env_.c == 0.0 ? Envelope{} : Envelope{std::pow(env_.c, beta), std::pow(env_.r, beta), env_.p * beta};
    s.head_.reserve(head_.size());
    for (double v : head_) s.head_.push_back(v == 0.0 ? 0.0 : std::pow(v, beta));
    if (tail_fn_) {
      auto f = tail_fn_;
      s.tail_fn_ = [f, beta](Coord k) {
        const double v = f(k);
        return v == 0.0 ? 0.0 : std::pow(v, beta);
      };
    }
    return s;
  }

  Sequence scaled(double x) const { return *this * Sequence::constant(x); }

  /// Elementwise transform whose result is asymptotically 1 + O(s_k) when the
  /// sequence vanishes, or exactly f(c) when the sequence is constant.
  Sequence map_to_unit_tail(const std::function<double(double)>& f) const {
    Sequence s;
    for (double v : head_) s.head_.push_back(f(v));
    if (env_.zero()) {
      const double f0 = f(0.0);
      s.env_ = {f0, 1.0, 0.0};
    } else if (env_.constant() && exact_tail()) {
      s.env_ = {f(env_.c), 1.0, 0.0};
    } else if (env_.vanishing()) {
      s.env_ = {f(0.0), 1.0, 0.0};
      auto self = *this;
      s.tail_fn_ = [self, f](Coord k) { return f(self(k)); };
    } else {
      fail(ErrorCode::OracleUnavailable, "sequence tail neither constant nor vanishing");
    }
    return s;
  }

  /// sum_{k >= from} s_k, +inf when the series diverges.
  double sum(Coord from = 1) const {
    double total = 0.0;
    for (Coord k = from; k <= head_size(); ++k) total += head_[k - 1];
    const Coord k0 = std::max<Coord>(head_size(), from - 1);
    return total + tail_sum(k0);
  }

  /// sum_{k >= 1} log(1 + x s_k), the logarithm of prod_k (1 + x s_k).
  double log1p_sum(double x) const {
    double total = 0.0;
    for (double v : head_) {
      const double t = x * v;
      if (t <= -1.0) return -kInf;
      total += std::log1p(t);
    }
    if (env_.zero() || x == 0.0) return total;
    if (!env_.summable()) return x > 0 ? kInf : -kInf;
    Coord k = head_size() + 1;
    if (env_.r < 1.0 || !exact_tail()) {
      if (env_.r == 1.0) fail(ErrorCode::OracleUnavailable, "power tail without closed form");
      return total + explicit_tail(k, [&](Coord i) { return std::log1p(x * (*this)(i)); });
    }
    // exact power tail: explicit until |x c k^{-p}| < 1e-3, then the log series
    const double c = env_.c * std::fabs(x);
    Coord k1 = static_cast<Coord>(std::ceil(std::pow(c / 1e-3, 1.0 / env_.p)));
    k1 = std::max(k1, k);
    if (k1 > detail::kExplicitLimit) fail(ErrorCode::OracleUnavailable, "log-product tail too slow to converge");
    for (; k < k1; ++k) {
      const double t = x * (*this)(k);
      if (t <= -1.0) return -kInf;
      total += std::log1p(t);
    }
    double sign = 1.0, xm = 1.0;
    for (int m = 1; m < 64; ++m) {
      xm *= x * env_.c;
      const double term = sign * xm * detail::hurwitz_zeta(m * env_.p, k1) / m;
      total += term;
      sign = -sign;
      if (std::fabs(term) < 1e-18 * std::max(1.0, std::fabs(total))) break;
    }
    return total;
  }

  /// Elementary symmetric sums e_0..e_m of the infinite family {x s_k}.
  std::vector<double> elementary_symmetric(double x, std::size_t m) const {
    std::vector<double> e(m + 1, 0.0);
    e[0] = 1.0;
    auto absorb = [&](double t) {
      for (std::size_t i = m; i >= 1; --i) e[i] += e[i - 1] * t;
    };
    for (double v : head_) absorb(x * v);
    if (env_.zero() || x == 0.0 || m == 0) return e;
    if (!env_.summable()) {
      for (std::size_t i = 1; i <= m; ++i) e[i] = kInf;
      return e;
    }
    Coord k = head_size() + 1;
    if (env_.r < 1.0 || !exact_tail()) {
      if (env_.r == 1.0) fail(ErrorCode::OracleUnavailable, "power tail without closed form");
      explicit_tail(k, [&](Coord i) {
        const double t = x * (*this)(i);
        absorb(t);
        return t;
      });
      return e;
    }
    const double c = env_.c * std::fabs(x);
    Coord k1 = std::max(k, static_cast<Coord>(std::ceil(std::pow(c / 1e-3, 1.0 / env_.p))));
    if (k1 > detail::kExplicitLimit) fail(ErrorCode::OracleUnavailable, "symmetric-sum tail too slow to converge");
    for (; k < k1; ++k) absorb(x * (*this)(k));
    // power sums of the remaining tail and Newton's identities
    std::vector<double> ps(m + 1, 0.0), et(m + 1, 0.0);
    double xm = 1.0;
    for (std::size_t j = 1; j <= m; ++j) {
      xm *= x * env_.c;
      ps[j] = xm * detail::hurwitz_zeta(j * env_.p, k1);
    }
    et[0] = 1.0;
    for (std::size_t i = 1; i <= m; ++i) {
      double s = 0.0, sign = 1.0;
      for (std::size_t j = 1; j <= i; ++j, sign = -sign) s += sign * et[i - j] * ps[j];
      et[i] = s / static_cast<double>(i);
    }
    std::vector<double> out(m + 1, 0.0);
    for (std::size_t i = 0; i <= m; ++i)
      for (std::size_t j = 0; i + j <= m; ++j) out[i + j] += e[i] * et[j];
    return out;
  }

  /// Largest k with s_k >= threshold; nullopt when infinitely many qualify.
  std::optional<Coord> last_at_least(double threshold) const {
    Coord best = 0;
    for (Coord k = 1; k <= head_size(); ++k)
      if (head_[k - 1] >= threshold) best = k;
    if (env_.zero()) return best;
    if (!env_.vanishing()) {
      if (env_.constant() && env_.c < threshold && exact_tail()) return best;
      return std::nullopt;
    }
    const Coord start = std::max(head_size() + 1, env_.monotone_from());
    for (Coord k = head_size() + 1; k < start; ++k)
      if ((*this)(k) >= threshold) best = k;
    for (Coord k = start;; ++k) {
      if (k > detail::kExplicitLimit) return std::nullopt;
      const double v = (*this)(k);
      if (v >= threshold) {
        best = k;
      } else if (env_(k) < 0.5 * threshold || exact_tail()) {
        break;
      }
    }
    return best;
  }

  /// sup_k s_k (inf when unbounded).
  double supremum() const {
    double best = 0.0;
    for (double v : head_) best = std::max(best, v);
    if (env_.zero()) return best;
    if (!env_.vanishing() && !env_.constant()) return kInf;
    if (env_.constant() && exact_tail()) return std::max(best, env_.c);
    const Coord start = std::max(head_size() + 1, env_.monotone_from());
    for (Coord k = head_size() + 1; k <= start; ++k) best = std::max(best, (*this)(k));
    if (!exact_tail()) {
      // non-exact tails approach the envelope from either side; scan until the
      // envelope is below the running maximum
      for (Coord k = start + 1; k < detail::kExplicitLimit; ++k) {
        best = std::max(best, (*this)(k));
        if (env_(k) < 0.5 * best) break;
      }
    }
    return best;
  }

 private:
  template <class Op>
  Sequence combine(const Sequence& o, Envelope e, Op op) const {
    Sequence s;
    s.env_ = e;
    const Coord h = std::max(head_size(), o.head_size());
    s.head_.reserve(h);
    for (Coord k = 1; k <= h; ++k) s.head_.push_back(op((*this)(k), o(k)));
    if (tail_fn_ || o.tail_fn_) {
      auto a = *this;
      auto b = o;
      s.tail_fn_ = [a, b, op](Coord k) { return op(a(k), b(k)); };
    }
    return s;
  }

  double tail_sum(Coord k0) const {
    if (env_.zero()) return 0.0;
    if (!env_.summable()) return env_.c > 0 ? kInf : -kInf;
    if (env_.r < 1.0) {
      if (exact_tail() && env_.p == 0.0)
        return env_.c * std::pow(env_.r, static_cast<double>(k0 + 1)) / (1.0 - env_.r);
      return explicit_tail(k0 + 1, [this](Coord k) { return (*this)(k); });
    }
    if (!exact_tail()) fail(ErrorCode::OracleUnavailable, "power tail without closed form");
    return env_.c * detail::hurwitz_zeta(env_.p, static_cast<double>(k0 + 1));
  }

  // Sums f(k) for k >= from while the geometric envelope is non-negligible.
  template <class F>
  double explicit_tail(Coord from, F f) const {
    double total = 0.0;
    const Coord mono = env_.monotone_from();
    for (Coord k = from;; ++k) {
      if (k > detail::kExplicitLimit) fail(ErrorCode::OracleUnavailable, "explicit tail summation did not settle");
      total += f(k);
      const double bound = env_(k) / (1.0 - env_.r);
      if (k >= mono && std::fabs(bound) <= 1e-18 * std::max(1.0, std::fabs(total))) break;
    }
    return total;
  }

  std::vector<double> head_;
  Envelope env_{};
  std::function<double(Coord)> tail_fn_;
};

/// Per-coordinate smoothness s_k: explicit head values, then a + b k.
struct Smoothness {
  std::vector<double> head;
  double a = 1.0;
  double b = 0.0;

  static Smoothness constant(double s) { return {{}, s, 0.0}; }

  double operator()(Coord k) const {
    if (k == 0) fail(ErrorCode::InvalidArgument, "coordinates are 1-based");
    return k <= head.size() ? head[k - 1] : a + b * k;
  }

  /// The sequence 2^{factor * s_k}.
  Sequence exp2(double factor) const {
    std::vector<double> h;
    h.reserve(head.size());
    for (double v : head) h.push_back(std::exp2(factor * v));
    return Sequence(std::move(h), {std::exp2(factor * a), std::exp2(factor * b), 0.0});
  }

  bool positive() const {
    for (double v : head)
      if (!(v > 0)) return false;
    return b > 0 ? a + b * (head.size() + 1) > 0 : (b == 0 ? a > 0 : false);
  }
};

}  // namespace tensorsplit
