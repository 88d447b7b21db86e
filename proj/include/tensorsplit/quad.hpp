#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "tensorsplit/error.hpp"

namespace tensorsplit {

/// Gauss-Legendre rule on (0,1); nodes ascending, weights sum to 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t order() const noexcept { return nodes.size(); }
};

inline QuadratureRule gauss_legendre(int n) {
  if (n < 1 || n > 64) fail(ErrorCode::OrderOutOfRange, "Gauss-Legendre order must lie in [1, 64]");
  QuadratureRule q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 1.0 / ((1.0 - x * x) * dp * dp);  // (2 / ...) halved for (0,1)
    q.nodes[i] = 0.5 * (1.0 - x);
    q.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.5;
  return q;
}

inline double integrate_1d(const std::function<double(double)>& g, const QuadratureRule& rule) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) s += rule.weights[i] * g(rule.nodes[i]);
  return s;
}

/// Integral over [lo, hi] with the rule mapped affinely.
inline double integrate_interval(const std::function<double(double)>& g, double lo, double hi,
                                 const QuadratureRule& rule) {
  if (!(hi > lo)) return 0.0;
  const double h = hi - lo;
  double s = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) s += rule.weights[i] * g(lo + h * rule.nodes[i]);
  return h * s;
}

/// Integral over [0,1] split at the given breakpoints; exact for integrands
/// that are polynomial of degree < 2n on each piece.
inline double integrate_piecewise(const std::function<double(double)>& g, std::vector<double> breaks,
                                  const QuadratureRule& rule) {
  breaks.push_back(0.0);
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::clamp(breaks[i], 0.0, 1.0), hi = std::clamp(breaks[i + 1], 0.0, 1.0);
    s += integrate_interval(g, lo, hi, rule);
  }
  return s;
}

/// Tensor rule on [0,1]^2 with piecewise splitting in each variable.
inline double integrate_2d(const std::function<double(double, double)>& g, const std::vector<double>& breaks_x,
                           const std::function<std::vector<double>(double)>& breaks_t, const QuadratureRule& rule) {
  return integrate_piecewise(
      [&](double x) { return integrate_piecewise([&](double t) { return g(x, t); }, breaks_t(x), rule); }, breaks_x,
      rule);
}

/// Full tensor grid over [0,1]^d with per-coordinate rules; f receives the
/// point. Summation runs in lexicographic node order.
inline double integrate_tensor(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<QuadratureRule>& rules) {
  const std::size_t d = rules.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  double total = 0.0;
  if (d == 0) return f(x);
  for (;;) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = rules[k].nodes[idx[k]];
      w *= rules[k].weights[idx[k]];
    }
    total += w * f(x);
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++idx[k] < rules[k].order()) break;
      idx[k] = 0;
      if (k == 0) return total;
    }
  }
}

}  // namespace tensorsplit
