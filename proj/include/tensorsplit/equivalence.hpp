#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/sequence.hpp"

namespace tensorsplit {

/// Constants of the ANOVA/anchored norm equivalence; c = sqrt(c_prime c_dprime).
struct EquivalenceCertificate {
  double c_prime = 1.0;
  double c_dprime = 1.0;
  double c = 1.0;
  std::string alpha_spec;
  double q = 0.0;
};

/// Both suprema, +inf where a condition fails.
struct ConditionReport {
  double c_prime = kInf;
  double c_dprime = kInf;
  double q = 0.0;
  std::string alpha_spec;

  bool certified() const { return std::isfinite(c_prime) && std::isfinite(c_dprime); }
  /// Name of the first failing condition, empty when certified.
  std::string failing() const {
    if (!std::isfinite(c_prime)) return "superset sum of q^|w| alpha_w";
    if (!std::isfinite(c_dprime)) return "subset sum of alpha_w / gamma_w";
    return {};
  }
  std::optional<EquivalenceCertificate> certificate() const {
    if (!certified()) return std::nullopt;
    return EquivalenceCertificate{c_prime, c_dprime, std::sqrt(c_prime * c_dprime), alpha_spec, q};
  }
};

/// alpha_omega = q_tilde^{|omega|} sqrt(gamma_omega), 1 <= q_tilde <= 3/2.
inline GammaModel default_alpha(const GammaModel& gamma, double q_tilde = 1.0) {
  if (!(q_tilde >= 1.0 && q_tilde <= 1.5)) fail(ErrorCode::QTildeOutOfRange, "q_tilde must lie in [1, 3/2]");
  if (auto p = std::get_if<GammaModel::Product>(&gamma.variant()))
    return GammaModel::product(p->gamma.pow(0.5).scaled(q_tilde));
  if (auto f = std::get_if<GammaModel::FiniteOrder>(&gamma.variant()))
    return GammaModel::finite_order(f->order, f->gamma.pow(0.5).scaled(q_tilde));
  std::map<SupportSet, double, SubsetOrder> t;
  for (const auto& w : gamma.support_sets())
    if (!w.empty()) t[w] = std::pow(q_tilde, static_cast<double>(w.size())) * std::sqrt(gamma(w));
  return GammaModel::table(std::move(t));
}

namespace detail {

// Largest m values of a nonnegative sequence (fewer if it has fewer
// positive entries).
inline std::vector<double> top_values(const Sequence& t, std::size_t m) {
  std::vector<double> vals;
  if (m == 0) return vals;
  const auto& e = t.envelope();
  if (t.finitely_supported()) {
    vals = t.head();
  } else if (!t.vanishing()) {
    if (!(e.constant() && t.exact_tail())) return std::vector<double>(m, kInf);
    vals = t.head();
    vals.insert(vals.end(), m, e.c);
  } else {
    const Coord n0 = std::max<Coord>(t.head_size(), e.monotone_from()) + static_cast<Coord>(m);
    for (Coord k = 1; k <= n0; ++k) vals.push_back(t(k));
    std::sort(vals.rbegin(), vals.rend());
    const double thr = vals[m - 1];
    if (thr > 0) {
      const auto K = t.last_at_least(thr);
      if (!K) fail(ErrorCode::TailUnavailable, "cannot bound the largest sequence entries");
      vals.clear();
      for (Coord k = 1; k <= std::max(*K, n0); ++k) vals.push_back(t(k));
    }
  }
  std::sort(vals.rbegin(), vals.rend());
  if (vals.size() > m) vals.resize(m);
  return vals;
}

inline double exp_or_inf(double log_value) { return std::isfinite(log_value) ? std::exp(log_value) : kInf; }

}  // namespace detail

/// C' = sup_w sum_{w' >= w} q^{|w'|} alpha_{w'} / (q^{|w|} alpha_w) and
/// C'' = sup_w sum_{w' <= w} (alpha_{w'}/gamma_{w'}) / (alpha_w / gamma_w),
/// over the support of gamma. Product and finite-order models are evaluated
/// in closed form, tables exactly.
inline ConditionReport evaluate_conditions(const GammaModel& gamma, const GammaModel& alpha, double q,
                                           std::string alpha_spec = "custom") {
  if (!(q > 0)) fail(ErrorCode::InvalidArgument, "q must be positive");
  if (!gamma.support_monotone()) fail(ErrorCode::InvalidArgument, "support of gamma must be monotone");
  ConditionReport r;
  r.q = q;
  r.alpha_spec = std::move(alpha_spec);

  const Sequence* gs = gamma.coordinate_sequence();
  const Sequence* as = alpha.coordinate_sequence();
  const bool same_kind = gs && as && gamma.is_finite_order() == alpha.is_finite_order() &&
                         (!gamma.is_finite_order() || *gamma.max_order() <= *alpha.max_order());
  if (same_kind) {
    for (Coord k = 1; k <= gs->head_size(); ++k)
      if ((*gs)(k) > 0 && !((*as)(k) > 0)) fail(ErrorCode::InvalidArgument, "alpha must be positive on the support of gamma");
    // restrict alpha to the support of gamma
    const Sequence a_on = (*as) * gs->ratio_or_zero(*gs);
    const Sequence g_over_a = gs->ratio_or_zero(*as);
    try {
      if (gamma.is_product()) {
        r.c_prime = detail::exp_or_inf(a_on.log1p_sum(q));
        r.c_dprime = detail::exp_or_inf(g_over_a.log1p_sum(1.0));
      } else {
        const std::size_t m = *gamma.max_order();
        const auto e = a_on.elementary_symmetric(q, m);
        double s = 0.0;
        for (double v : e) s += v;
        r.c_prime = s;
        double p = 1.0;
        for (double v : detail::top_values(g_over_a, m)) p *= 1.0 + v;
        r.c_dprime = p;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OracleUnavailable) fail(ErrorCode::TailUnavailable, e.what());
      throw;
    }
    return r;
  }
  if (!gamma.finite_support()) fail(ErrorCode::TailUnavailable, "no tail argument for this gamma/alpha combination");

  const auto sets = gamma.support_sets();
  double cp = 0.0, cdp = 0.0;
  for (const auto& w : sets) {
    const double aw = alpha(w), gw = gamma(w);
    if (!(aw > 0)) fail(ErrorCode::InvalidArgument, "alpha must be positive on the support of gamma");
    double up = 0.0, down = 0.0;
    for (const auto& v : sets) {
      if (w.is_subset_of(v)) up += std::pow(q, static_cast<double>(v.size())) * alpha(v);
      if (v.is_subset_of(w)) down += alpha(v) / gamma(v);
    }
    cp = std::max(cp, up / (std::pow(q, static_cast<double>(w.size())) * aw));
    cdp = std::max(cdp, down / (aw / gw));
  }
  r.c_prime = cp;
  r.c_dprime = cdp;
  return r;
}

inline std::optional<EquivalenceCertificate> check_conditions(const GammaModel& gamma, const GammaModel& alpha, double q,
                                                              std::string alpha_spec = "custom") {
  return evaluate_conditions(gamma, alpha, q, std::move(alpha_spec)).certificate();
}

/// Certificate with the default alpha for a given q_tilde.
inline ConditionReport evaluate_default(const GammaModel& gamma, double q, double q_tilde = 1.0) {
  char spec[96];
  std::snprintf(spec, sizeof spec, "q_tilde^|w| sqrt(gamma_w), q_tilde=%.17g", q_tilde);
  return evaluate_conditions(gamma, default_alpha(gamma, q_tilde), q, spec);
}

/// The condition with alpha = sqrt(gamma) and q = 1/2.
inline ConditionReport evaluate_hs_condition(const GammaModel& gamma) {
  GammaModel alpha = [&] {
    if (auto p = std::get_if<GammaModel::Product>(&gamma.variant())) return GammaModel::product(p->gamma.pow(0.5));
    if (auto f = std::get_if<GammaModel::FiniteOrder>(&gamma.variant()))
      return GammaModel::finite_order(f->order, f->gamma.pow(0.5));
    std::map<SupportSet, double, SubsetOrder> t;
    for (const auto& w : gamma.support_sets())
      if (!w.empty()) t[w] = std::sqrt(gamma(w));
    return GammaModel::table(std::move(t));
  }();
  return evaluate_conditions(gamma, alpha, 0.5, "sqrt(gamma_w)");
}

inline std::optional<std::pair<double, double>> check_hs_condition(const GammaModel& gamma) {
  const auto r = evaluate_hs_condition(gamma);
  if (!r.certified()) return std::nullopt;
  return std::make_pair(r.c_prime, r.c_dprime);
}

/// sum_k sqrt(gamma_k) < infinity: necessary and sufficient for product weights.
inline bool product_weight_equivalence(const Sequence& gamma_k) {
  try {
    return std::isfinite(gamma_k.pow(0.5).sum());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OracleUnavailable) fail(ErrorCode::TailUnavailable, e.what());
    throw;
  }
}

}  // namespace tensorsplit
