#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/parallel.hpp"
#include "tensorsplit/quad.hpp"

namespace tensorsplit {

/// Univariate function on [0,1] with its derivative and mean. degree < 0
/// marks a nonpolynomial factor whose mean came from quadrature; mean_error
/// then holds |Q32 - Q16|.
struct UnivariateFactor {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double mean = 0.0;
  int degree = 0;
  double mean_error = 0.0;
  std::string name;

  double operator()(double x) const { return value(x); }
  bool polynomial() const noexcept { return degree >= 0; }

  static UnivariateFactor polynomial(std::vector<double> coeffs, std::string name = "polynomial") {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.empty()) coeffs.push_back(0.0);
    UnivariateFactor f;
    auto c = std::make_shared<const std::vector<double>>(coeffs);
    f.value = [c](double x) {
      double v = 0.0;
      for (auto it = c->rbegin(); it != c->rend(); ++it) v = v * x + *it;
      return v;
    };
    f.derivative = [c](double x) {
      double v = 0.0;
      for (std::size_t i = c->size(); i-- > 1;) v = v * x + static_cast<double>(i) * (*c)[i];
      return v;
    };
    for (std::size_t i = 0; i < coeffs.size(); ++i) f.mean += coeffs[i] / static_cast<double>(i + 1);
    f.degree = static_cast<int>(coeffs.size()) - 1;
    f.name = std::move(name);
    return f;
  }

  static UnivariateFactor monomial(unsigned p) {
    std::vector<double> c(p + 1, 0.0);
    c[p] = 1.0;
    return polynomial(std::move(c), "x^" + std::to_string(p));
  }

  static UnivariateFactor constant(double c) { return polynomial({c}, "const"); }

  /// Nonpolynomial factor; the mean comes from the 32-node rule.
  static UnivariateFactor smooth(std::function<double(double)> v, std::function<double(double)> dv, std::string name) {
    UnivariateFactor f;
    f.value = std::move(v);
    f.derivative = std::move(dv);
    const double q32 = integrate_1d(f.value, gauss_legendre(32));
    const double q16 = integrate_1d(f.value, gauss_legendre(16));
    f.mean = q32;
    f.mean_error = std::fabs(q32 - q16);
    f.degree = -1;
    f.name = std::move(name);
    return f;
  }

  static UnivariateFactor sine(double a, double b = 0.0) {
    return smooth([a, b](double x) { return std::sin(a * x + b); },
                  [a, b](double x) { return a * std::cos(a * x + b); }, "sin");
  }
  static UnivariateFactor cosine(double a, double b = 0.0) {
    return smooth([a, b](double x) { return std::cos(a * x + b); },
                  [a, b](double x) { return -a * std::sin(a * x + b); }, "cos");
  }
  static UnivariateFactor exponential(double a) {
    return smooth([a](double x) { return std::exp(a * x); }, [a](double x) { return a * std::exp(a * x); }, "exp");
  }

  /// g - c.
  UnivariateFactor shifted(double c) const {
    UnivariateFactor f = *this;
    auto v = value;
    f.value = [v, c](double x) { return v(x) - c; };
    f.mean = mean - c;
    return f;
  }
};

/// sum_r coef_r prod_k g_{r,k}(x_k) over [0,1]^dim; an absent factor is 1.
struct SeparableFunction {
  struct Term {
    double coef = 1.0;
    std::map<Coord, UnivariateFactor> factors;
  };

  std::size_t dim = 0;
  std::vector<Term> terms;

  double operator()(std::span<const double> x) const {
    if (x.size() < dim) fail(ErrorCode::InvalidArgument, "point has fewer coordinates than the function");
    double s = 0.0;
    for (const auto& t : terms) {
      double v = t.coef;
      for (const auto& [k, g] : t.factors) v *= g(x[k - 1]);
      s += v;
    }
    return s;
  }

  /// Mixed derivative in the directions of omega.
  double mixed_derivative(const SupportSet& omega, std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : terms) {
      double v = t.coef;
      for (Coord k : omega) {
        auto it = t.factors.find(k);
        if (it == t.factors.end()) {
          v = 0.0;
          break;
        }
      }
      if (v == 0.0) continue;
      for (const auto& [k, g] : t.factors) v *= omega.contains(k) ? g.derivative(x[k - 1]) : g(x[k - 1]);
      s += v;
    }
    return s;
  }

  double mean() const {
    double s = 0.0;
    for (const auto& t : terms) {
      double v = t.coef;
      for (const auto& [k, g] : t.factors) v *= g.mean;
      s += v;
    }
    return s;
  }

  /// Maximal polynomial degree per coordinate; -1 if any factor there is
  /// nonpolynomial.
  std::vector<int> degrees() const {
    std::vector<int> d(dim, 0);
    for (const auto& t : terms)
      for (const auto& [k, g] : t.factors) {
        int& v = d[k - 1];
        if (v < 0) continue;
        v = g.polynomial() ? std::max(v, g.degree) : -1;
      }
    return d;
  }

  void validate() const {
    for (const auto& t : terms)
      for (const auto& [k, g] : t.factors)
        if (k == 0 || k > dim) fail(ErrorCode::InvalidArgument, "factor coordinate outside 1..dim");
  }
};

enum class Mode { Anova, Anchored };

inline const char* to_string(Mode m) { return m == Mode::Anova ? "anova" : "anchored"; }

struct Anchor {
  double x_star = 0.5;
  Anchor() = default;
  explicit Anchor(double x) : x_star(x) {
    if (!(x >= 0.0 && x <= 1.0)) fail(ErrorCode::InvalidArgument, "anchor must lie in [0,1]");
  }
};

/// f_omega with the squared L2 norm of its mixed derivative in omega.
struct DecompositionTerm {
  SupportSet omega;
  SeparableFunction func;
  double mixed_norm_sq = 0.0;
  double error_estimate = 0.0;  // inherited from quadrature means
};

// kernels from the univariate representation identities

inline double kappa_an(double x, double t, const Anchor& anchor = Anchor{}) {
  return (t <= x ? 1.0 : 0.0) - (t <= anchor.x_star ? 1.0 : 0.0);
}

inline double kappa_A(double x, double t) { return t < x ? t : -(1.0 - t); }

inline double K_an(double t, const Anchor& anchor = Anchor{}) { return t < anchor.x_star ? -t : 1.0 - t; }

/// q = 1/3 - x*(1 - x*) = ||K_an||^2.
inline double q_const(const Anchor& anchor = Anchor{}) {
  const double x = anchor.x_star;
  return 1.0 / 3.0 - x * (1.0 - x);
}

/// q-hat = max(x*^2, (1 - x*)^2) / 2.
inline double q_hat(const Anchor& anchor = Anchor{}) {
  const double x = anchor.x_star;
  return 0.5 * std::max(x * x, (1.0 - x) * (1.0 - x));
}

namespace detail {

// squared L2 norm of the mixed derivative of a function whose factors live
// on omega only
inline double mixed_norm_sq(const SeparableFunction& f, const SupportSet& omega, const QuadratureRule& rule) {
  const std::size_t n = f.terms.size();
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t q = 0; q < n; ++q) {
      double v = f.terms[r].coef * f.terms[q].coef;
      for (Coord k : omega) {
        if (v == 0.0) break;
        const auto& gr = f.terms[r].factors.at(k);
        const auto& gq = f.terms[q].factors.at(k);
        v *= integrate_1d([&](double x) { return gr.derivative(x) * gq.derivative(x); }, rule);
      }
      s += v;
    }
  return s;
}

template <class Project>
DecompositionTerm make_term(const SeparableFunction& f, const SupportSet& omega, const QuadratureRule& rule,
                            Project project) {
  DecompositionTerm out;
  out.omega = omega;
  out.func.dim = f.dim;
  for (const auto& t : f.terms) {
    SeparableFunction::Term nt;
    nt.coef = t.coef;
    bool vanishes = false;
    for (Coord k : omega)
      if (!t.factors.count(k)) vanishes = true;  // (g - Pg) of the constant 1 is 0
    if (vanishes) continue;
    for (const auto& [k, g] : t.factors) {
      const double pg = project(g);
      if (omega.contains(k)) {
        nt.factors.emplace(k, g.shifted(pg));
        out.error_estimate += std::fabs(t.coef) * g.mean_error;
      } else {
        nt.coef *= pg;
        out.error_estimate += std::fabs(t.coef) * g.mean_error;
      }
    }
    if (nt.coef != 0.0) out.func.terms.push_back(std::move(nt));
  }
  out.mixed_norm_sq = mixed_norm_sq(out.func, omega, rule);
  return out;
}

}  // namespace detail

/// f_omega = (Id - P)_omega P_{omega^c} f with P the mean.
inline DecompositionTerm anova_term(const SeparableFunction& f, const SupportSet& omega, int quad_order = 32) {
  if (omega.max_coord() > f.dim) fail(ErrorCode::InvalidArgument, "omega exceeds the active dimension");
  return detail::make_term(f, omega, gauss_legendre(quad_order), [](const UnivariateFactor& g) { return g.mean; });
}

/// f'_omega = (Id - P')_omega P'_{omega^c} f with P' evaluation at x*.
inline DecompositionTerm anchored_term(const SeparableFunction& f, const SupportSet& omega,
                                       const Anchor& anchor = Anchor{}, int quad_order = 32) {
  if (omega.max_coord() > f.dim) fail(ErrorCode::InvalidArgument, "omega exceeds the active dimension");
  const double xs = anchor.x_star;
  return detail::make_term(f, omega, gauss_legendre(quad_order), [xs](const UnivariateFactor& g) { return g(xs); });
}

/// All 2^d terms in SubsetOrder.
inline std::vector<DecompositionTerm> decompose(const SeparableFunction& f, Mode mode, const Anchor& anchor = Anchor{},
                                                int quad_order = 32) {
  f.validate();
  if (f.dim > 24) fail(ErrorCode::InvalidArgument, "active dimension too large for a full decomposition");
  const auto sets = all_subsets(f.dim);
  std::vector<DecompositionTerm> out(sets.size());
  parallel_for(sets.size(), [&](std::size_t i) {
    out[i] = mode == Mode::Anova ? anova_term(f, sets[i], quad_order) : anchored_term(f, sets[i], anchor, quad_order);
  });
  return out;
}

inline double reconstruct(const std::vector<DecompositionTerm>& terms, std::span<const double> x) {
  double s = 0.0;
  for (const auto& t : terms) s += t.func(x);
  return s;
}

namespace detail {
// relative level below which a term counts as zero
inline constexpr double kNegligible = 1e-26;
}

/// ||f||_{gamma,mode}^2 from precomputed terms.
inline double weighted_norm_sq(const std::vector<DecompositionTerm>& terms, const GammaModel& gamma) {
  double scale = 0.0;
  for (const auto& t : terms) scale += std::fabs(t.mixed_norm_sq);
  double s = 0.0;
  for (const auto& t : terms) {
    const double g = gamma(t.omega);
    if (g == 0.0) {
      if (std::fabs(t.mixed_norm_sq) > detail::kNegligible * std::max(1.0, scale))
        fail(ErrorCode::NormInfinite, "gamma vanishes on " + t.omega.to_string() + " where f has a nonzero term");
      continue;
    }
    s += t.mixed_norm_sq / g;
  }
  return s;
}

inline double weighted_norm(const SeparableFunction& f, const GammaModel& gamma, Mode mode,
                            const Anchor& anchor = Anchor{}, int quad_order = 32) {
  return std::sqrt(weighted_norm_sq(decompose(f, mode, anchor, quad_order), gamma));
}

}  // namespace tensorsplit
