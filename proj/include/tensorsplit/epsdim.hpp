#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/sequence.hpp"
#include "tensorsplit/weights.hpp"

namespace tensorsplit {

/// dim W_{j,k} per coordinate level; dim W_0 = 1 always.
class DimensionModel {
 public:
  enum class Kind { AllOne, Spline, Custom };

  static DimensionModel all_one() { return DimensionModel(Kind::AllOne, {}); }
  /// d_{0,k} = 1, d_{j,k} = 2^{j-1}.
  static DimensionModel spline() { return DimensionModel(Kind::Spline, {}); }
  static DimensionModel custom(std::function<std::uint64_t(Level, Coord)> d) {
    if (!d) fail(ErrorCode::InvalidArgument, "custom dimension model without evaluator");
    return DimensionModel(Kind::Custom, std::move(d));
  }

  Kind kind() const noexcept { return kind_; }

  std::uint64_t operator()(const IndexVector& j) const {
    switch (kind_) {
      case Kind::AllOne:
        return 1;
      case Kind::Spline: {
        const std::uint64_t e = j.l1() - j.l0();
        if (e >= 64) fail(ErrorCode::EnumerationCap, "dim W_j overflows 64 bits at " + j.to_string());
        return std::uint64_t{1} << e;
      }
      case Kind::Custom: {
        std::uint64_t d = 1;
        for (const auto& [k, l] : j) {
          const std::uint64_t f = d_(l, k);
          if (f == 0) fail(ErrorCode::InvalidArgument, "dim W_{j,k} must be positive");
          if (d > std::numeric_limits<std::uint64_t>::max() / f)
            fail(ErrorCode::EnumerationCap, "dim W_j overflows 64 bits at " + j.to_string());
          d *= f;
        }
        return d;
      }
    }
    return 1;
  }

 private:
  DimensionModel(Kind k, std::function<std::uint64_t(Level, Coord)> d) : kind_(k), d_(std::move(d)) {}
  Kind kind_;
  std::function<std::uint64_t(Level, Coord)> d_;
};

/// Caller supplied bounds for pairs without a derivable structure:
/// c_j < threshold whenever some coordinate of j exceeds max_coordinate, or
/// whenever j_k > max_level(k). With `monotone`, c is nonincreasing in the
/// componentwise order, so the search prunes below any index with c < thr.
struct DecayCertificate {
  std::function<Coord(double threshold)> max_coordinate;
  std::function<Level(Coord k, double threshold)> max_level;
  bool monotone = false;
};

struct EnumOptions {
  std::uint64_t cap = 10'000'000;
  bool truncate_on_cap = false;       // else EnumerationCap is thrown
  std::optional<Coord> max_coord;     // restriction to coordinates 1..d
};

struct EpsDimResult {
  std::uint64_t n = 0;
  IndexSet index_set;
  double eps = 0.0;
  bool truncated = false;
};

/// c_j = b_j / a_j on omega_a, 0 off it. a_j > 0 = b_j is allowed (c = 0);
/// the embedding itself needs omega_a within omega_b, see check_embedding.
inline double c_ratio(const WeightModel& a, const WeightModel& b, const IndexVector& j) {
  const double aj = a(j);
  if (aj == 0.0) return 0.0;
  return b(j) / aj;
}

namespace detail {

inline constexpr double kSlack = 1e-9;
// c_j within this relative distance below eps^2 counts as on the boundary
inline constexpr double kTie = 1e-12;

inline double inclusion_threshold(double eps) { return eps * eps * (1.0 - kTie); }

struct Collector {
  const WeightModel& a;
  const WeightModel& b;
  double thr;
  EnumOptions opt;
  std::vector<IndexVector> out;
  bool truncated = false;

  bool allowed(Coord k) const { return !opt.max_coord || k <= *opt.max_coord; }

  // Adds j when c_j >= thr; returns false once the cap stops the search.
  bool offer(const IndexVector& j) {
    if (c_ratio(a, b, j) < thr) return true;
    if (out.size() >= opt.cap) {
      if (!opt.truncate_on_cap) fail(ErrorCode::EnumerationCap, "index set exceeds cap of " + std::to_string(opt.cap));
      truncated = true;
      return false;
    }
    out.push_back(j);
    return true;
  }
};

// Level-1 value and per-level ratio of a coordinate factor, plus an optional
// omega-dependent factor.
struct SideParts {
  Sequence v1, ratio;
  const GammaModel* gamma = nullptr;
};

inline std::optional<SideParts> inverse_parts(const WeightModel& a) {
  if (auto p = a.get<WeightModel::Product>()) return SideParts{p->gamma, p->gamma, nullptr};
  if (auto s = a.get<WeightModel::Spline>()) {
    const Sequence rho = s->s.exp2(-2.0);
    return SideParts{rho / s->lambda, rho, &s->gamma};
  }
  return std::nullopt;
}

inline std::optional<SideParts> value_parts(const WeightModel& b) {
  if (auto p = b.get<WeightModel::Product>()) {
    const Sequence inv = Sequence::constant(1.0).ratio_or_zero(p->gamma);
    return SideParts{inv, inv, nullptr};
  }
  if (auto s = b.get<WeightModel::Spline>()) {
    const Sequence grow = s->s.exp2(2.0);
    return SideParts{s->lambda * grow, grow, &s->gamma};
  }
  return std::nullopt;
}

// c_j = prod_{k in omega_j} u1_k ur_k^{j_k - 1}, with |omega_j| <= order.
struct Multiplicative {
  Sequence u1, ur;
  std::optional<std::size_t> order;
};

inline void enumerate_multiplicative(Collector& col, const Multiplicative& m) {
  const double thr = col.thr;
  const double cut = thr * (1.0 - kSlack);
  if (!col.offer(IndexVector{})) return;

  // growth along a level chain makes the set infinite
  for (Coord k = 1; k <= std::max(m.u1.head_size(), m.ur.head_size()); ++k)
    if (m.u1(k) > 0 && m.ur(k) > 1.0 && col.allowed(k)) fail(ErrorCode::NotCompact, "c_j grows along coordinate " + std::to_string(k));
  const auto& ue = m.u1.envelope();
  const auto& re = m.ur.envelope();
  const bool open_ended = !col.opt.max_coord;
  if (open_ended && !ue.zero() && !re.zero() && !(re.vanishing() || (re.constant() && re.c <= 1.0)))
    fail(ErrorCode::NotCompact, "c_j grows along infinitely many coordinates");

  // M = prod max(1, u1_k) bounds the gain from adding coordinates
  Coord k_cap = col.opt.max_coord.value_or(std::numeric_limits<Coord>::max());
  std::optional<Coord> above_one = m.u1.last_at_least(std::nextafter(1.0, 2.0));
  if (!above_one) {
    if (!open_ended) above_one = k_cap;
    else if (!m.u1.last_at_least(thr)) fail(ErrorCode::NotCompact, "infinitely many coordinates reach the threshold");
    else fail(ErrorCode::OracleUnavailable, "infinitely many coordinate factors exceed 1");
  }
  const Coord k1 = std::min(*above_one, k_cap);
  std::vector<double> suffix(k1 + 2, 1.0);  // suffix[k] = prod_{i > k} max(1, u1_i)
  for (Coord k = k1; k >= 1; --k) suffix[k - 1] = suffix[k] * std::max(1.0, m.u1(k));
  auto gain_after = [&](Coord k) { return k >= k1 ? 1.0 : suffix[k]; };
  const double m_all = suffix[0];

  Coord kmax;
  if (auto K = m.u1.last_at_least(cut / m_all)) {
    kmax = *K;
  } else if (!open_ended) {
    kmax = k_cap;
  } else if (!m.u1.last_at_least(thr)) {
    fail(ErrorCode::NotCompact, "infinitely many coordinates reach the threshold");
  } else {
    fail(ErrorCode::OracleUnavailable, "coordinate bound unavailable");
  }
  kmax = std::min(kmax, k_cap);

  bool stop = false;
  std::function<bool(const IndexVector&, double, Coord, std::size_t)> dfs;
  // returns whether anything at or below j was collected
  dfs = [&](const IndexVector& j, double c, Coord last, std::size_t size) -> bool {
    bool any = false;
    if (m.order && size >= *m.order) return false;
    for (Coord k = last + 1; k <= kmax && !stop; ++k) {
      const double u1 = m.u1(k);
      if (u1 == 0.0) continue;
      if (c * u1 * gain_after(k) < cut) continue;
      const double ur = m.ur(k);
      double ck = c * u1;
      for (Level l = 1; !stop; ++l) {
        if (ck * gain_after(k) < cut) break;
        const IndexVector jn = j.with(k, l);
        const std::size_t before = col.out.size();
        if (!col.offer(jn)) {
          stop = true;
          break;
        }
        const bool below = dfs(jn, ck, k, size + 1);
        const bool got = below || col.out.size() > before;
        any = any || got;
        if (ur >= 1.0) {
          if (got) fail(ErrorCode::NotCompact, "c_j does not decay along coordinate " + std::to_string(k));
          break;
        }
        ck *= ur;
      }
    }
    return any;
  };
  dfs(IndexVector{}, 1.0, 0, 0);
  col.truncated = col.truncated || stop;
}

// Per omega: levels on omega only, c nonincreasing in each level.
inline void enumerate_levels(Collector& col, const std::vector<SupportSet>& omegas,
                             const std::function<double(Coord)>& level_decay) {
  const double cut = col.thr * (1.0 - kSlack);
  if (!col.offer(IndexVector{})) return;
  bool stop = false;
  for (const auto& w : omegas) {
    if (stop) break;
    if (w.empty()) continue;
    if (col.opt.max_coord && w.max_coord() > *col.opt.max_coord) continue;
    const auto& coords = w.coords();
    IndexVector ones;
    for (Coord k : coords) ones.set(k, 1);
    if (c_ratio(col.a, col.b, ones) < cut) continue;
    for (Coord k : coords)
      if (!(level_decay(k) < 1.0)) fail(ErrorCode::NotCompact, "c_j does not decay along coordinate " + std::to_string(k));
    // j holds the assigned prefix and level 1 on the rest, which bounds c
    std::function<void(IndexVector&, std::size_t)> rec = [&](IndexVector& j, std::size_t pos) {
      const Coord k = coords[pos];
      for (Level l = 1; !stop; ++l) {
        j.set(k, l);
        if (c_ratio(col.a, col.b, j) < cut) break;
        if (pos + 1 == coords.size()) {
          if (!col.offer(j)) stop = true;
        } else {
          rec(j, pos + 1);
        }
      }
      j.set(k, 1);
    };
    rec(ones, 0);
  }
  col.truncated = col.truncated || stop;
}

inline void enumerate_finite(Collector& col, const std::vector<IndexVector>& support) {
  for (const auto& j : support) {
    if (col.opt.max_coord && j.max_coord() > *col.opt.max_coord) continue;
    if (!col.offer(j)) {
      col.truncated = true;
      return;
    }
  }
}

inline void enumerate_certificate(Collector& col, const DecayCertificate& cert) {
  if (!cert.max_coordinate || !cert.max_level) fail(ErrorCode::InvalidArgument, "incomplete decay certificate");
  Coord kmax = cert.max_coordinate(col.thr);
  if (col.opt.max_coord) kmax = std::min(kmax, *col.opt.max_coord);
  std::vector<Level> lmax(kmax + 1, 0);
  for (Coord k = 1; k <= kmax; ++k) lmax[k] = cert.max_level(k, col.thr);
  bool stop = false;
  if (cert.monotone) {
    if (c_ratio(col.a, col.b, IndexVector{}) < col.thr) return;
    std::function<void(const IndexVector&, Coord)> dfs = [&](const IndexVector& j, Coord last) {
      if (!col.offer(j)) {
        stop = true;
        return;
      }
      for (Coord k = last + 1; k <= kmax && !stop; ++k)
        for (Level l = 1; l <= lmax[k] && !stop; ++l) {
          const IndexVector jn = j.with(k, l);
          if (c_ratio(col.a, col.b, jn) < col.thr) break;
          dfs(jn, k);
        }
    };
    dfs(IndexVector{}, 0);
  } else {
    double box = 1.0;
    for (Coord k = 1; k <= kmax; ++k) box *= lmax[k] + 1.0;
    if (box > 16.0 * static_cast<double>(col.opt.cap))
      fail(ErrorCode::EnumerationCap, "certificate box too large to scan");
    std::function<void(IndexVector&, Coord)> scan = [&](IndexVector& j, Coord k) {
      if (stop) return;
      if (k > kmax) {
        if (!col.offer(j)) stop = true;
        return;
      }
      for (Level l = 0; l <= lmax[k] && !stop; ++l) {
        j.set(k, l);
        scan(j, k + 1);
      }
      j.set(k, 0);
    };
    IndexVector j;
    scan(j, 1);
  }
  col.truncated = col.truncated || stop;
}

inline bool is_all_ones(const WeightModel& b) {
  auto p = b.get<WeightModel::Product>();
  if (!p) return false;
  for (double v : p->gamma.head())
    if (v != 1.0) return false;
  const auto& e = p->gamma.envelope();
  return p->gamma.exact_tail() && e.c == 1.0 && e.constant();
}

inline std::vector<IndexVector> enumerate(const WeightModel& a, const WeightModel& b, double eps,
                                          const std::optional<DecayCertificate>& decay, const EnumOptions& opt,
                                          bool& truncated) {
  if (!(eps > 0) || !std::isfinite(eps)) fail(ErrorCode::InvalidArgument, "eps must be positive and finite");
  Collector col{a, b, detail::inclusion_threshold(eps), opt, {}, false};

  if (decay) {
    enumerate_certificate(col, *decay);
  } else if (auto sa = a.finite_support()) {
    enumerate_finite(col, *sa);
  } else if (auto sb = b.finite_support()) {
    enumerate_finite(col, *sb);
  } else if (auto ip = inverse_parts(a)) {
    auto vp = value_parts(b);
    if (!vp) fail(ErrorCode::OracleUnavailable, "no decay certificate for this weight pair; supply one");
    Multiplicative m{vp->v1 * ip->v1, vp->ratio * ip->ratio, std::nullopt};
    const GammaModel* table = nullptr;
    auto fold = [&](const GammaModel* g, bool numerator) {
      if (!g) return;
      if (g->is_table()) {
        table = table ? table : g;
        return;
      }
      const Sequence& gs = *g->coordinate_sequence();
      m.u1 = numerator ? m.u1 * gs : m.u1.ratio_or_zero(gs);
      if (g->is_finite_order()) {
        const std::size_t o = *g->max_order();
        m.order = m.order ? std::min(*m.order, o) : o;
      }
    };
    fold(ip->gamma, true);
    fold(vp->gamma, false);
    if (table) {
      const Sequence ur = m.ur;
      enumerate_levels(col, table->support_sets(), [ur](Coord k) { return ur(k); });
    } else {
      enumerate_multiplicative(col, m);
    }
  } else if (auto an = a.get<WeightModel::Anisotropic>()) {
    if (!is_all_ones(b) || !an->gamma.finite_support())
      fail(ErrorCode::OracleUnavailable, "anisotropic weights need finitely supported gamma and b = 1, or a decay certificate");
    const Smoothness s = an->s;
    enumerate_levels(col, an->gamma.support_sets(), [s](Coord k) { return std::exp2(-2.0 * s(k)); });
  } else {
    fail(ErrorCode::OracleUnavailable, "no decay certificate for this weight pair; supply one");
  }
  truncated = col.truncated;
  return std::move(col.out);
}

}  // namespace detail

/// J_{c,eps} = {j : c_j >= eps^2}, boundary included.
inline IndexSet enumerate_Jc_eps(const WeightModel& a, const WeightModel& b, double eps,
                                 const std::optional<DecayCertificate>& decay = std::nullopt,
                                 const EnumOptions& opt = {}) {
  bool truncated = false;
  auto v = detail::enumerate(a, b, eps, decay, opt, truncated);
  return IndexSet(v.begin(), v.end());
}

inline EpsDimResult eps_dimension(const WeightModel& a, const WeightModel& b, double eps, const DimensionModel& dims,
                                  const std::optional<DecayCertificate>& decay = std::nullopt,
                                  const EnumOptions& opt = {}) {
  EpsDimResult r;
  r.eps = eps;
  auto v = detail::enumerate(a, b, eps, decay, opt, r.truncated);
  for (const auto& j : v) {
    const std::uint64_t d = dims(j);
    if (r.n > std::numeric_limits<std::uint64_t>::max() - d) fail(ErrorCode::EnumerationCap, "eps-dimension overflows 64 bits");
    r.n += d;
  }
  r.index_set = IndexSet(v.begin(), v.end());
  return r;
}

/// Same computation over indices supported in {1, ..., d}.
inline EpsDimResult eps_dimension_restricted(const WeightModel& a, const WeightModel& b, double eps,
                                             const DimensionModel& dims, Coord d,
                                             const std::optional<DecayCertificate>& decay = std::nullopt,
                                             EnumOptions opt = {}) {
  opt.max_coord = d;
  return eps_dimension(a, b, eps, dims, decay, opt);
}

/// Smallest d0 with restricted(d0) = unrestricted: the largest coordinate in
/// J_{c,eps}.
inline Coord stabilization_dim(const EpsDimResult& r) { return r.index_set.max_coord(); }

inline Coord stabilization_dim(const WeightModel& a, const WeightModel& b, double eps, const DimensionModel& dims,
                               const std::optional<DecayCertificate>& decay = std::nullopt,
                               const EnumOptions& opt = {}) {
  return stabilization_dim(eps_dimension(a, b, eps, dims, decay, opt));
}

struct SplineCount {
  std::uint64_t n = 0;                // exact count, spline dims, b = 1
  std::size_t omega_count = 0;        // sets with m(omega) >= 0
  double literal_count = 0.0;         // sum 2^m |omega|^m with the (2 lambda) m(omega)
  double upper_bound = 0.0;           // 1 + 2 sum (2|omega|)^{m(omega)}, same m(omega)
  bool truncated = false;
};

namespace detail {

// All nonempty omega with prod_{k in omega} t_k >= thr (gamma product type)
// or table entries with gamma_omega * f^{|omega|} >= thr.
inline std::vector<std::pair<SupportSet, double>> supports_above(const GammaModel& gamma, double per_coord,
                                                                 double thr, std::size_t cap, bool& truncated) {
  std::vector<std::pair<SupportSet, double>> out;
  const double cut = thr * (1.0 - kSlack);
  if (gamma.is_table()) {
    for (const auto& w : gamma.support_sets()) {
      if (w.empty()) continue;
      const double v = gamma(w) * std::pow(per_coord, static_cast<double>(w.size()));
      if (v >= cut) out.emplace_back(w, gamma(w));
    }
    return out;
  }
  const Sequence t = gamma.coordinate_sequence()->scaled(per_coord);
  const std::optional<std::size_t> order = gamma.is_finite_order() ? gamma.max_order() : std::nullopt;
  auto above_one = t.last_at_least(std::nextafter(1.0, 2.0));
  if (!above_one) fail(ErrorCode::NotCompact, "gamma_omega does not decay");
  std::vector<double> suffix(*above_one + 2, 1.0);
  for (Coord k = *above_one; k >= 1; --k) suffix[k - 1] = suffix[k] * std::max(1.0, t(k));
  auto gain_after = [&](Coord k) { return k >= *above_one ? 1.0 : suffix[k]; };
  auto K = t.last_at_least(cut / suffix[0]);
  if (!K) fail(ErrorCode::NotCompact, "gamma_omega does not decay");
  std::vector<Coord> cur;
  std::function<void(double, Coord)> dfs = [&](double v, Coord last) {
    if (order && cur.size() >= *order) return;
    for (Coord k = last + 1; k <= *K && !truncated; ++k) {
      const double vk = v * t(k);
      if (vk * gain_after(k) < cut) continue;
      cur.push_back(k);
      if (vk >= cut) {
        if (out.size() >= cap) {
          truncated = true;
        } else {
          SupportSet w(cur);
          out.emplace_back(w, gamma(w));
        }
      }
      dfs(vk, k);
      cur.pop_back();
    }
  };
  dfs(1.0, 0);
  return out;
}

inline double binomial(std::uint64_t n, std::uint64_t k) {
  double r = 1.0;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

}  // namespace detail

/// Closed-form eps-dimension of the spline model with fixed s and lambda
/// against L2: 1 + sum_omega sum_{m=0}^{m(omega)} 2^m C(m+|omega|-1, |omega|-1),
/// where m(omega) is the largest m with gamma_omega^{-1} lambda^{|omega|}
/// 4^{s(m+|omega|)} <= eps^{-2}.
inline SplineCount spline_eps_dimension(const GammaModel& gamma, double s, double lambda, double eps,
                                        std::size_t omega_cap = 1'000'000) {
  if (!(s > 0) || !(lambda > 0) || !(eps > 0)) fail(ErrorCode::InvalidArgument, "s, lambda and eps must be positive");
  SplineCount r;
  const double thr = detail::inclusion_threshold(eps);
  const WeightModel a = WeightModel::spline(gamma, Smoothness::constant(s), Sequence::constant(lambda));
  auto weight_at = [&](const SupportSet& w, std::uint64_t m) {
    IndexVector j;
    for (Coord k : w) j.set(k, 1);
    j.set(w.max_coord(), static_cast<Level>(1 + m));
    return a(j);
  };

  const auto omegas = detail::supports_above(gamma, 1.0 / (lambda * std::exp2(2.0 * s)), thr, omega_cap, r.truncated);
  r.n = 1;
  for (const auto& [w, g] : omegas) {
    if (!(g > 0)) continue;
    const double size = static_cast<double>(w.size());
    double est = std::log2(std::pow(eps, -1.0 / s) * std::pow(g * std::pow(std::exp2(2.0 * s) * lambda, -size), 0.5 / s));
    if (!std::isfinite(est)) continue;
    std::int64_t m = static_cast<std::int64_t>(std::floor(est));
    while (m >= 0 && !(1.0 / weight_at(w, static_cast<std::uint64_t>(m)) >= thr)) --m;
    while (1.0 / weight_at(w, static_cast<std::uint64_t>(m + 1)) >= thr) ++m;
    if (m < 0) continue;
    ++r.omega_count;
    for (std::int64_t i = 0; i <= m; ++i) {
      if (i >= 63) fail(ErrorCode::EnumerationCap, "spline count overflows 64 bits");
      const double comb = detail::binomial(static_cast<std::uint64_t>(i) + w.size() - 1, w.size() - 1);
      const double add = std::ldexp(comb, static_cast<int>(i));
      if (add > 1.8e19 || static_cast<double>(r.n) + add > 1.8e19) fail(ErrorCode::EnumerationCap, "spline count overflows 64 bits");
      r.n += static_cast<std::uint64_t>(add);
    }
  }

  // the counting chain as printed, with (2 lambda) and |omega|^m vectors
  bool lit_truncated = false;
  const auto lit = detail::supports_above(gamma, 1.0 / (2.0 * lambda), thr, omega_cap, lit_truncated);
  r.literal_count = 1.0;
  r.upper_bound = 1.0;
  for (const auto& [w, g] : lit) {
    if (!(g > 0)) continue;
    const double size = static_cast<double>(w.size());
    const double ml = std::floor(std::log2(std::pow(eps, -1.0 / s) * std::pow(g * std::pow(2.0 * lambda, -size), 0.5 / s)));
    if (!(ml >= 0)) continue;
    for (double i = 0; i <= ml; ++i) r.literal_count += std::pow(2.0 * size, i);
    r.upper_bound += 2.0 * std::pow(2.0 * size, ml);
  }
  r.truncated = r.truncated || lit_truncated;
  return r;
}

}  // namespace tensorsplit
