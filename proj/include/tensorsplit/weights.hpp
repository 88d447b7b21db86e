#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/sequence.hpp"

namespace tensorsplit {

/// Weight sequence a_j over multi-indices.
///
///  - Product:     a_j = prod_{k in omega_j} gamma_k^{-j_k}
///  - Spline:      a_j = gamma_{omega_j}^{-1} prod_{k in omega_j} lambda_k 4^{s_k j_k}
///  - Anisotropic: a_j = gamma_{omega_j}^{-1} sum_{k in omega_j} 4^{s_k j_k}
///  - Table:       explicit entries; an absent zero index has weight 1
///  - Custom:      caller supplied evaluator
///
/// A zero factor (gamma_k = 0 or gamma_omega = 0) gives a_j = 0, i.e. the
/// subspace is dropped.
class WeightModel {
 public:
  struct Product {
    Sequence gamma;
  };
  struct Spline {
    GammaModel gamma;
    Smoothness s;
    Sequence lambda;
  };
  struct Anisotropic {
    GammaModel gamma;
    Smoothness s;
  };
  struct Table {
    std::map<IndexVector, double, CanonicalLess> values;
    bool monotone = false;
  };
  struct Custom {
    std::function<double(const IndexVector&)> eval;
    std::string name;
  };
  using Variant = std::variant<Product, Spline, Anisotropic, Table, Custom>;

  WeightModel() : WeightModel(Product{Sequence::constant(1.0)}) {}
  explicit WeightModel(Variant v) : v_(std::move(v)) { validate(); }

  static WeightModel product(Sequence gamma) { return WeightModel(Product{std::move(gamma)}); }
  /// b_j = 1 for every j: the L2 target space.
  static WeightModel ones() { return product(Sequence::constant(1.0)); }
  static WeightModel spline(GammaModel gamma, Smoothness s, Sequence lambda) {
    return WeightModel(Spline{std::move(gamma), std::move(s), std::move(lambda)});
  }
  static WeightModel anisotropic(GammaModel gamma, Smoothness s) {
    return WeightModel(Anisotropic{std::move(gamma), std::move(s)});
  }
  static WeightModel table(std::map<IndexVector, double, CanonicalLess> values, bool monotone = false) {
    return WeightModel(Table{std::move(values), monotone});
  }
  static WeightModel custom(std::function<double(const IndexVector&)> eval, std::string name = "custom") {
    return WeightModel(Custom{std::move(eval), std::move(name)});
  }

  const Variant& variant() const noexcept { return v_; }
  template <class T>
  const T* get() const noexcept {
    return std::get_if<T>(&v_);
  }

  double operator()(const IndexVector& j) const {
    return std::visit([&](const auto& m) { return eval(m, j); }, v_);
  }

  /// Finite support, enumerable exactly (Table only).
  std::optional<std::vector<IndexVector>> finite_support() const {
    auto t = get<Table>();
    if (!t) return std::nullopt;
    std::vector<IndexVector> out;
    if (!t->values.count(IndexVector{})) out.push_back(IndexVector{});
    for (const auto& [j, v] : t->values)
      if (v > 0) out.push_back(j);
    std::sort(out.begin(), out.end(), CanonicalLess{});
    return out;
  }

 private:
  static double eval(const Product& m, const IndexVector& j) {
    double a = 1.0;
    for (const auto& [k, l] : j) {
      const double g = m.gamma(k);
      if (g == 0.0) return 0.0;
      a *= std::pow(g, -static_cast<double>(l));
    }
    return a;
  }
  static double eval(const Spline& m, const IndexVector& j) {
    if (j.is_zero()) return 1.0;
    const double g = m.gamma(j.support());
    if (g == 0.0) return 0.0;
    double a = 1.0 / g;
    for (const auto& [k, l] : j) a *= m.lambda(k) * std::exp2(2.0 * m.s(k) * l);
    return a;
  }
  static double eval(const Anisotropic& m, const IndexVector& j) {
    if (j.is_zero()) return 1.0;
    const double g = m.gamma(j.support());
    if (g == 0.0) return 0.0;
    double s = 0.0;
    for (const auto& [k, l] : j) s += std::exp2(2.0 * m.s(k) * l);
    return s / g;
  }
  static double eval(const Table& m, const IndexVector& j) {
    auto it = m.values.find(j);
    if (it != m.values.end()) return it->second;
    return j.is_zero() ? 1.0 : 0.0;
  }
  static double eval(const Custom& m, const IndexVector& j) {
    const double a = m.eval(j);
    if (!(a >= 0)) fail(ErrorCode::InvalidArgument, "custom weight evaluated negative or NaN at " + j.to_string());
    return a;
  }

  void validate() const {
    if (auto s = get<Spline>()) {
      if (!s->s.positive()) fail(ErrorCode::InvalidArgument, "smoothness s_k must be positive");
      for (double v : s->lambda.head())
        if (!(v > 0)) fail(ErrorCode::InvalidArgument, "lambda_k must be positive");
      if (!(s->lambda.envelope().c > 0)) fail(ErrorCode::InvalidArgument, "lambda_k must be positive");
    } else if (auto a = get<Anisotropic>()) {
      if (!a->s.positive()) fail(ErrorCode::InvalidArgument, "smoothness s_k must be positive");
    } else if (auto p = get<Product>()) {
      for (double v : p->gamma.head())
        if (!(v >= 0)) fail(ErrorCode::InvalidArgument, "gamma_k must be nonnegative");
      if (p->gamma.envelope().c < 0) fail(ErrorCode::InvalidArgument, "gamma_k must be nonnegative");
    } else if (auto t = get<Table>()) {
      for (const auto& [j, v] : t->values)
        if (!(v >= 0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "table weights must be finite and nonnegative");
      if (t->monotone) {
        IndexSet s;
        const auto support = finite_support();
        for (const auto& j : *support) s.insert(j);
        if (!s.is_monotone()) fail(ErrorCode::InvalidArgument, "table declared monotone but its support is not");
      }
    } else if (auto c = get<Custom>()) {
      if (!c->eval) fail(ErrorCode::InvalidArgument, "custom weight without evaluator");
    }
  }

  Variant v_;
};

/// Tail oracle: j -> sum_{i in omega_a, i >= j} a_i^{-1}, +inf when the series
/// diverges.
using TailSum = std::function<double(const IndexVector&)>;

namespace detail {

// Per-coordinate pieces of a spline model: g = gamma/lambda, rho = 4^{-s},
// inv1m = 1/(1-rho), h = g rho/(1-rho).
struct SplineParts {
  Sequence g, rho, inv1m, h;
};

inline SplineParts spline_parts(const Sequence& gamma, const WeightModel::Spline& m) {
  SplineParts p;
  p.g = gamma.ratio_or_zero(m.lambda);
  p.rho = m.s.exp2(-2.0);
  p.inv1m = p.rho.map_to_unit_tail([](double x) { return 1.0 / (1.0 - x); });
  p.h = p.g * p.rho * p.inv1m;
  return p;
}

// Removes the factors (1 + h_k x) for k in omega from a truncated generating
// polynomial.
inline std::vector<double> remove_factors(std::vector<double> e, const SupportSet& omega, const Sequence& h) {
  for (Coord k : omega) {
    const double t = h(k);
    for (std::size_t i = 1; i < e.size(); ++i) e[i] -= t * e[i - 1];
  }
  return e;
}

}  // namespace detail

/// Closed-form or exact tail oracle for the built-in variants; nullopt for
/// Custom models and anisotropic models with infinitely many or non-singleton
/// support sets.
inline std::optional<TailSum> builtin_tail(const WeightModel& a) {
  if (auto p = a.get<WeightModel::Product>()) {
    const Sequence gamma = p->gamma;
    const double log_total = -gamma.log1p_sum(-1.0);
    return TailSum([gamma, log_total](const IndexVector& j) {
      double pre = 1.0;
      for (const auto& [k, l] : j) pre *= std::pow(gamma(k), static_cast<double>(l));
      if (pre == 0.0) return 0.0;
      if (!std::isfinite(log_total)) return kInf;
      return pre * std::exp(log_total);
    });
  }
  if (auto s = a.get<WeightModel::Spline>()) {
    const auto m = *s;
    auto level_factor = [m](Coord k, Level l) {
      const double rho = std::exp2(-2.0 * m.s(k));
      return std::pow(rho, static_cast<double>(l)) / (1.0 - rho);
    };
    if (auto gp = std::get_if<GammaModel::Product>(&m.gamma.variant())) {
      const auto parts = detail::spline_parts(gp->gamma, m);
      const double H = parts.h.log1p_sum(1.0);
      return TailSum([parts, H, level_factor](const IndexVector& j) {
        double pre = 1.0;
        for (const auto& [k, l] : j) pre *= parts.g(k) * level_factor(k, l) / (1.0 + parts.h(k));
        if (pre == 0.0) return 0.0;
        if (!std::isfinite(H)) return kInf;
        return pre * std::exp(H);
      });
    }
    if (auto gf = std::get_if<GammaModel::FiniteOrder>(&m.gamma.variant())) {
      const auto parts = detail::spline_parts(gf->gamma, m);
      const std::size_t order = gf->order;
      const auto e = parts.h.elementary_symmetric(1.0, order);
      return TailSum([parts, e, order, level_factor](const IndexVector& j) {
        const SupportSet w = j.support();
        if (w.size() > order) return 0.0;
        double pre = 1.0;
        for (const auto& [k, l] : j) pre *= parts.g(k) * level_factor(k, l);
        if (pre == 0.0) return 0.0;
        const auto rest = detail::remove_factors(e, w, parts.h);
        double sum = 0.0;
        for (std::size_t i = 0; i + w.size() <= order; ++i) sum += rest[i];
        return pre * sum;
      });
    }
    const auto sets = m.gamma.support_sets();
    return TailSum([m, sets, level_factor](const IndexVector& j) {
      const SupportSet w = j.support();
      double total = 0.0;
      for (const auto& omega : sets) {
        if (!w.is_subset_of(omega)) continue;
        double t = m.gamma(omega);
        for (Coord k : omega) {
          const Level l = j[k];
          t *= (l == 0 ? level_factor(k, 1) : level_factor(k, l)) / m.lambda(k);
        }
        total += t;
      }
      return total;
    });
  }
  if (auto an = a.get<WeightModel::Anisotropic>()) {
    if (!an->gamma.finite_support() || an->gamma.max_order().value_or(2) > 1) return std::nullopt;
    const auto m = *an;
    const auto sets = m.gamma.support_sets();
    return TailSum([m, sets](const IndexVector& j) {
      if (j.l0() > 1) return 0.0;
      double total = 0.0;
      for (const auto& omega : sets) {
        if (omega.empty()) {
          if (j.is_zero()) total += 1.0;
          continue;
        }
        const Coord k = *omega.begin();
        if (!j.is_zero() && j.max_coord() != k) continue;
        const Level l = std::max<Level>(1, j[k]);
        const double rho = std::exp2(-2.0 * m.s(k));
        total += m.gamma(omega) * std::pow(rho, static_cast<double>(l)) / (1.0 - rho);
      }
      return total;
    });
  }
  if (a.get<WeightModel::Table>()) {
    const auto support = *a.finite_support();
    std::vector<std::pair<IndexVector, double>> inv;
    for (const auto& j : support) inv.emplace_back(j, 1.0 / a(j));
    return TailSum([inv](const IndexVector& j) {
      double total = 0.0;
      for (const auto& [i, v] : inv)
        if (leq(j, i)) total += v;
      return total;
    });
  }
  return std::nullopt;
}

inline TailSum require_tail(const WeightModel& a) {
  if (auto t = builtin_tail(a)) return *t;
  fail(ErrorCode::OracleUnavailable, "no tail oracle for this weight model; supply one");
}

/// Evidence that |1|_{V,a} = 0: upper bounds (sum_{j in B_n} a_j^{-1})^{-1} on
/// |1|^2_{V,a} over the monotone boxes B_n = {j in omega_a : j_k <= n, k <= n}.
struct DegeneracyWitness {
  std::vector<std::pair<std::uint32_t, double>> box_bounds;
};

class NormDegenerateError : public Error {
 public:
  NormDegenerateError(const std::string& what, DegeneracyWitness w)
      : Error(ErrorCode::NormDegenerate, what), witness_(std::move(w)) {}
  const DegeneracyWitness& witness() const noexcept { return witness_; }

 private:
  DegeneracyWitness witness_;
};

/// sum of a_j^{-1} over the box B_n, in closed form per coordinate where the
/// model factorizes; nullopt otherwise.
inline std::optional<double> box_inverse_sum(const WeightModel& a, std::uint32_t n) {
  auto geometric_partial = [n](double x) {
    double s = 0.0, p = 1.0;
    for (std::uint32_t l = 1; l <= n; ++l) s += (p *= x);
    return s;
  };
  if (auto p = a.get<WeightModel::Product>()) {
    double total = 1.0;
    for (Coord k = 1; k <= n; ++k) total *= 1.0 + geometric_partial(p->gamma(k));
    return total;
  }
  if (auto s = a.get<WeightModel::Spline>()) {
    const Sequence* gs = s->gamma.coordinate_sequence();
    if (!gs) return std::nullopt;
    std::vector<double> u;
    for (Coord k = 1; k <= n; ++k) {
      const double g = (*gs)(k) == 0.0 ? 0.0 : (*gs)(k) / s->lambda(k);
      u.push_back(g * geometric_partial(std::exp2(-2.0 * s->s(k))));
    }
    const std::size_t order = s->gamma.is_finite_order()
                                  ? std::get<GammaModel::FiniteOrder>(s->gamma.variant()).order
                                  : u.size();
    std::vector<double> e(order + 1, 0.0);
    e[0] = 1.0;
    for (double t : u)
      for (std::size_t i = order; i >= 1; --i) e[i] += e[i - 1] * t;
    double total = 0.0;
    for (double v : e) total += v;
    return total;
  }
  return std::nullopt;
}

inline DegeneracyWitness degeneracy_witness(const WeightModel& a) {
  DegeneracyWitness w;
  for (std::uint32_t n = 1; n <= 4096; n *= 2) {
    auto s = box_inverse_sum(a, n);
    if (!s || !std::isfinite(*s)) break;
    w.box_bounds.emplace_back(n, 1.0 / *s);
  }
  return w;
}

/// Whether sum_{i in omega_a} a_i^{-1} is finite.
inline bool v_norm_defined(const WeightModel&, const TailSum& tail) {
  return std::isfinite(tail(IndexVector{}));
}
inline bool v_norm_defined(const WeightModel& a) { return v_norm_defined(a, require_tail(a)); }

inline void require_v_norm(const WeightModel& a, const TailSum& tail) {
  if (!v_norm_defined(a, tail))
    throw NormDegenerateError("sum of inverse weights diverges, so |1|_{V,a} = 0", degeneracy_witness(a));
}

/// a-hat_j = (sum_{i in omega_a, i >= j} a_i^{-1})^{-1}.
inline double hat_transform(const WeightModel& a, const IndexVector& j, const TailSum& tail) {
  require_v_norm(a, tail);
  if (!(a(j) > 0)) fail(ErrorCode::InvalidArgument, "index " + j.to_string() + " lies outside the support");
  return 1.0 / tail(j);
}
inline double hat_transform(const WeightModel& a, const IndexVector& j) {
  return hat_transform(a, j, require_tail(a));
}

struct EmbeddingResult {
  double c = 0.0;
  IndexVector argmax;
  bool certified = false;  // false: finite-search lower bound of C
};

/// C = sup sqrt(b_j / a_j) over the search set restricted to the support of a,
/// which must lie inside the support of b.
inline EmbeddingResult check_embedding(const WeightModel& a, const WeightModel& b, const IndexSet& search) {
  EmbeddingResult r;
  double best = 0.0;
  for (const auto& j : search) {
    const double aj = a(j), bj = b(j);
    if (aj == 0.0) continue;
    if (bj == 0.0) fail(ErrorCode::InclusionViolated, "support of a not contained in support of b at " + j.to_string());
    const double c = bj / aj;
    if (c > best) {
      best = c;
      r.argmax = j;
    }
  }
  r.c = std::sqrt(best);
  if (auto sup = a.finite_support()) {
    r.certified = std::all_of(sup->begin(), sup->end(), [&](const IndexVector& j) { return search.contains(j); });
  }
  return r;
}

struct VaWaResult {
  double c_squared = 1.0;
  bool certified = false;  // false: finite-search lower bound
};

namespace detail {

inline double ratio_at(const WeightModel& a, const TailSum& tail, const IndexVector& j) {
  return a(j) * tail(j);
}

inline IndexVector ones_on(const SupportSet& w) {
  IndexVector j;
  for (Coord k : w) j.set(k, 1);
  return j;
}

}  // namespace detail

/// Smallest C^2 with sum_{i >= j} a_i^{-1} <= C^2 a_j^{-1}, i.e. sup a_j / a-hat_j.
/// nullopt when the supremum is certifiably infinite.
inline std::optional<VaWaResult> va_wa_condition(const WeightModel& a, const IndexSet& search, const TailSum& tail) {
  require_v_norm(a, tail);
  VaWaResult r;
  if (a.get<WeightModel::Product>()) {
    r.c_squared = tail(IndexVector{});
    r.certified = true;
    return r;
  }
  if (auto s = a.get<WeightModel::Spline>()) {
    // a_j / a-hat_j depends on omega_j only
    if (s->gamma.finite_support()) {
      double best = 0.0;
      for (const auto& w : s->gamma.support_sets()) best = std::max(best, detail::ratio_at(a, tail, detail::ones_on(w)));
      r.c_squared = best;
      r.certified = true;
      return r;
    }
    if (auto gp = std::get_if<GammaModel::Product>(&s->gamma.variant())) {
      const auto parts = detail::spline_parts(gp->gamma, *s);
      const double H = parts.h.log1p_sum(1.0);
      // sum over active k of max(0, -log(1-rho_k) - log(1+h_k))
      const bool finite_active = parts.g.finitely_supported();
      if (!finite_active && !parts.rho.summable()) return std::nullopt;
      double extra = 0.0;
      const Coord last = finite_active ? *parts.g.last_nonzero() : 0;
      for (Coord k = 1;; ++k) {
        if (finite_active && k > last) break;
        if (k > detail::kExplicitLimit) fail(ErrorCode::OracleUnavailable, "condition series did not settle");
        const double rho = parts.rho(k);
        if (parts.g(k) > 0) extra += std::max(0.0, -std::log1p(-rho) - std::log1p(parts.h(k)));
        if (!finite_active && k > parts.g.head_size() && k >= parts.rho.envelope().monotone_from() &&
            parts.rho.envelope()(k) / (1.0 - parts.rho.envelope().r) < 1e-18)
          break;
      }
      r.c_squared = std::exp(H + extra);
      r.certified = true;
      return r;
    }
  }
  if (auto sup = a.finite_support()) {
    double best = 0.0;
    for (const auto& j : *sup) best = std::max(best, detail::ratio_at(a, tail, j));
    r.c_squared = best;
    r.certified = true;
    return r;
  }
  double best = 0.0;
  for (const auto& j : search)
    if (a(j) > 0) best = std::max(best, detail::ratio_at(a, tail, j));
  r.c_squared = std::max(best, 1.0);
  r.certified = false;
  return r;
}
inline std::optional<VaWaResult> va_wa_condition(const WeightModel& a, const IndexSet& search) {
  return va_wa_condition(a, search, require_tail(a));
}

/// min over splits u = sum u_i of sum a_i |u_i|^2, i.e. (sum a_i^{-1})^{-1} |u|^2.
inline double optimal_split_value(std::span<const double> a, double u_norm_sq, bool divergent = false) {
  if (a.empty()) fail(ErrorCode::InvalidArgument, "empty weight list");
  if (divergent) return 0.0;
  double inv = 0.0;
  for (double v : a) {
    if (!(v > 0)) fail(ErrorCode::InvalidArgument, "split weights must be positive");
    inv += 1.0 / v;
  }
  return u_norm_sq / inv;
}

}  // namespace tensorsplit
