#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tensorsplit/decomp.hpp"
#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/quad.hpp"

namespace tensorsplit {

/// Weighted Sobol indices. The empty set takes part in the normalization
/// only when include_empty is set; totals sum over supersets.
struct SobolTable {
  Mode mode = Mode::Anova;
  bool include_empty = false;
  std::map<SupportSet, double, SubsetOrder> per_omega;
  std::map<SupportSet, double, SubsetOrder> total;
  double denominator = 0.0;
};

inline double total_index(const SobolTable& table, const SupportSet& omega0) {
  double s = 0.0;
  for (const auto& [w, v] : table.per_omega)
    if (omega0.is_subset_of(w)) s += v;
  return s;
}

inline SobolTable sobol_indices(const SeparableFunction& f, const GammaModel& gamma, Mode mode,
                                const Anchor& anchor = Anchor{}, bool include_empty = false, int quad_order = 32) {
  const auto terms = decompose(f, mode, anchor, quad_order);
  double scale = 0.0;
  for (const auto& t : terms) scale += std::fabs(t.mixed_norm_sq);

  SobolTable out;
  out.mode = mode;
  out.include_empty = include_empty;
  std::vector<std::pair<SupportSet, double>> energy;
  for (const auto& t : terms) {
    if (t.omega.empty() && !include_empty) continue;
    const double g = gamma(t.omega);
    double e = 0.0;
    if (g == 0.0) {
      if (std::fabs(t.mixed_norm_sq) > detail::kNegligible * std::max(1.0, scale))
        fail(ErrorCode::NormInfinite, "gamma vanishes on " + t.omega.to_string() + " where f has a nonzero term");
    } else {
      e = std::max(0.0, t.mixed_norm_sq) / g;
    }
    energy.emplace_back(t.omega, e);
    out.denominator += e;
  }
  if (!(out.denominator > detail::kNegligible * std::max(1.0, scale)))
    fail(ErrorCode::DegenerateDenominator, "weighted norm of f vanishes under this convention");
  for (const auto& [w, e] : energy) out.per_omega[w] = e / out.denominator;
  for (const auto& [w, e] : energy) out.total[w] = total_index(out, w);
  if (!include_empty) out.total[SupportSet{}] = total_index(out, SupportSet{});
  return out;
}

/// Sum of the decomposition terms with |omega| <= m.
inline SeparableFunction truncate_m(const SeparableFunction& f, std::size_t m, Mode mode,
                                    const Anchor& anchor = Anchor{}, int quad_order = 32) {
  SeparableFunction out;
  out.dim = f.dim;
  for (const auto& t : decompose(f, mode, anchor, quad_order))
    if (t.omega.size() <= m)
      for (const auto& term : t.func.terms) out.terms.push_back(term);
  return out;
}

/// (sum_{|omega| > m} r^{|omega|} gamma_omega)^{1/2} with r = q_hat(anchor)
/// for the anchored mode and r = 1/6 for ANOVA.
inline double truncation_bound(const GammaModel& gamma, std::size_t m, Mode mode, const Anchor& anchor = Anchor{}) {
  const double r = mode == Mode::Anchored ? q_hat(anchor) : 1.0 / 6.0;
  if (gamma.is_table()) {
    double s = 0.0;
    for (const auto& w : gamma.support_sets())
      if (w.size() > m) s += std::pow(r, static_cast<double>(w.size())) * gamma(w);
    return std::sqrt(s);
  }
  const Sequence& g = *gamma.coordinate_sequence();
  const double mass = r * g.sum();
  if (!std::isfinite(mass)) fail(ErrorCode::GammaL1Violated, "weighted sum over all support sets diverges");
  // e_i <= mass^i / i!, so the degrees beyond top are negligible
  std::size_t top = m + 1 + std::max<std::size_t>(60, static_cast<std::size_t>(4.0 * std::ceil(mass)));
  if (gamma.max_order()) top = *gamma.max_order();
  if (g.finitely_supported()) top = std::min<std::size_t>(top, g.head_size());
  if (top <= m) return 0.0;
  const auto e = g.elementary_symmetric(r, top);
  double s = 0.0;
  for (std::size_t i = m + 1; i < e.size(); ++i) {
    if (!std::isfinite(e[i])) fail(ErrorCode::GammaL1Violated, "weighted sum over all support sets diverges");
    s += e[i];
  }
  return std::sqrt(s);
}

namespace detail {

inline std::vector<QuadratureRule> l2_rules(const SeparableFunction& f, const SeparableFunction& g, int smooth_order) {
  const auto df = f.degrees(), dg = g.degrees();
  std::vector<QuadratureRule> rules;
  for (std::size_t k = 0; k < f.dim; ++k) {
    const int a = df[k], b = dg[k];
    const int n = (a < 0 || b < 0) ? smooth_order : std::max(a, b) + 1;
    rules.push_back(gauss_legendre(n));
  }
  return rules;
}

// factor values of every term at the nodes of its coordinate rule
inline std::vector<std::vector<std::vector<double>>> tabulate(const SeparableFunction& f,
                                                              const std::vector<QuadratureRule>& rules) {
  std::vector<std::vector<std::vector<double>>> out;
  for (const auto& t : f.terms) {
    std::vector<std::vector<double>> per(f.dim);
    for (const auto& [k, u] : t.factors) {
      auto& v = per[k - 1];
      for (double x : rules[k - 1].nodes) v.push_back(u(x));
    }
    out.push_back(std::move(per));
  }
  return out;
}

}  // namespace detail

/// ||f - g||_{L2([0,1]^d)} by a tensor Gauss rule exact for polynomial factors.
inline double l2_error(const SeparableFunction& f, const SeparableFunction& g, int smooth_order = 24) {
  if (f.dim != g.dim) fail(ErrorCode::InvalidArgument, "functions differ in active dimension");
  const auto rules = detail::l2_rules(f, g, smooth_order);
  const auto tf = detail::tabulate(f, rules), tg = detail::tabulate(g, rules);
  auto eval = [&](const SeparableFunction& h, const auto& tab, const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t r = 0; r < h.terms.size(); ++r) {
      double v = h.terms[r].coef;
      for (std::size_t k = 0; k < h.dim; ++k)
        if (!tab[r][k].empty()) v *= tab[r][k][idx[k]];
      s += v;
    }
    return s;
  };
  const std::size_t d = f.dim;
  std::vector<std::size_t> idx(d, 0);
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) w *= rules[k].weights[idx[k]];
    const double diff = eval(f, tf, idx) - eval(g, tg, idx);
    total += w * diff * diff;
    std::size_t k = d;
    bool done = true;
    while (k > 0) {
      --k;
      if (++idx[k] < rules[k].order()) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
    if (done) break;
  }
  return std::sqrt(total);
}

}  // namespace tensorsplit
