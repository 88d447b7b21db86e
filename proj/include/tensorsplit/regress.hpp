#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tensorsplit/decomp.hpp"
#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/parallel.hpp"

namespace tensorsplit {

using Point = std::vector<double>;

/// Univariate anchored H1 kernel: min(|x - x*|, |y - x*|) on the same side of
/// the anchor, 0 across it.
inline double anchored_h1_1d(double x, double y, double x_star) {
  const double a = x - x_star, b = y - x_star;
  if (a * b <= 0.0) return 0.0;
  return std::min(std::fabs(a), std::fabs(b));
}

/// Orthonormal univariate basis on [0,1]; index 0 is the constant.
enum class Basis { Cosine, Legendre };

inline double basis_value(Basis basis, Level j, double x) {
  if (j == 0) return 1.0;
  if (basis == Basis::Cosine) return std::numbers::sqrt2 * std::cos(std::numbers::pi * j * x);
  const double t = 2.0 * x - 1.0;
  double p0 = 1.0, p1 = t;
  for (Level k = 2; k <= j; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * j + 1.0) * p1;
}

struct KernelSpec {
  /// sum_omega gamma_omega prod_{k in omega} eta(x_k, y_k); omega ranges over
  /// subsets of the input coordinates.
  struct AnchoredH1 {
    Anchor anchor;
    GammaModel gamma = GammaModel::product(Sequence::constant(1.0));
  };
  /// sum_j b_j^{-1} prod_k e_{j_k}(x_k) e_{j_k}(y_k) over a finite index set.
  struct TensorProduct {
    Basis basis = Basis::Cosine;
    std::map<IndexVector, double, CanonicalLess> b;
  };
  struct Custom {
    std::function<double(std::span<const double>, std::span<const double>)> eval;
    std::string name = "custom";
  };
  std::variant<AnchoredH1, TensorProduct, Custom> variant = AnchoredH1{};

  double operator()(std::span<const double> x, std::span<const double> y) const {
    if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "kernel arguments differ in dimension");
    if (auto a = std::get_if<AnchoredH1>(&variant)) {
      const double xs = a->anchor.x_star;
      if (const Sequence* g = a->gamma.coordinate_sequence(); g && a->gamma.is_product()) {
        double v = 1.0;
        for (std::size_t k = 0; k < x.size(); ++k) v *= 1.0 + (*g)(static_cast<Coord>(k + 1)) * anchored_h1_1d(x[k], y[k], xs);
        return v;
      }
      std::vector<double> eta(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) eta[k] = anchored_h1_1d(x[k], y[k], xs);
      double v = 0.0;
      for (const auto& w : all_subsets(static_cast<Coord>(x.size()))) {
        double p = a->gamma(w);
        for (Coord k : w) p *= eta[k - 1];
        v += p;
      }
      return v;
    }
    if (auto t = std::get_if<TensorProduct>(&variant)) {
      double v = 0.0;
      for (const auto& [j, bj] : t->b) {
        if (bj == 0.0) continue;
        if (j.max_coord() > x.size()) fail(ErrorCode::InvalidArgument, "kernel index exceeds input dimension");
        double p = 1.0 / bj;
        for (const auto& [k, l] : j.entries()) p *= basis_value(t->basis, l, x[k - 1]) * basis_value(t->basis, l, y[k - 1]);
        v += p;
      }
      return v;
    }
    return std::get<Custom>(variant).eval(x, y);
  }
};

/// Inputs in [0,1]^d with an n x L target matrix.
struct SampleSet {
  std::vector<Point> inputs;
  Eigen::MatrixXd outputs;

  std::size_t size() const noexcept { return inputs.size(); }
  void validate() const {
    if (inputs.empty()) fail(ErrorCode::InvalidArgument, "sample set is empty");
    if (static_cast<std::size_t>(outputs.rows()) != inputs.size() || outputs.cols() < 1)
      fail(ErrorCode::InvalidArgument, "outputs must have one row per input");
    const std::size_t d = inputs.front().size();
    for (const auto& x : inputs) {
      if (x.size() != d) fail(ErrorCode::InvalidArgument, "inputs differ in dimension");
      for (double v : x)
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidArgument, "input outside the unit cube");
    }
    if (!outputs.allFinite()) fail(ErrorCode::InvalidArgument, "outputs must be finite");
  }
};

struct FittedModel {
  Eigen::MatrixXd coefficients;  // n x L
  KernelSpec kernel;
  std::vector<double> lambdas;
  std::vector<Point> inputs;
  double jitter = 0.0;  // diagonal shift that made the factorization succeed
};

inline Eigen::MatrixXd gram_matrix(const KernelSpec& kernel, const std::vector<Point>& xs) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n == 0) fail(ErrorCode::InvalidArgument, "no points");
  Eigen::MatrixXd g(n, n);
  parallel_for(xs.size(), [&](std::size_t i) {
    for (Eigen::Index j = 0; j < n; ++j) g(static_cast<Eigen::Index>(i), j) = kernel(xs[i], xs[j]);
  });
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-10) fail(ErrorCode::KernelAsymmetric, "Gram matrix is not symmetric");
  return 0.5 * (g + g.transpose());
}

namespace detail {

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd system;  // G + n lambda I, without jitter
  double jitter = 0.0;
};

// Cholesky of G + n lambda I; on failure retries with 1e-12 .. 1e-6 times
// trace(G)/n added to the diagonal.
inline Factorization factorize(const Eigen::MatrixXd& g, double lambda) {
  if (!(lambda > 0)) fail(ErrorCode::InvalidArgument, "lambda must be positive");
  const auto n = g.rows();
  Factorization f;
  f.system = g;
  f.system.diagonal().array() += static_cast<double>(n) * lambda;
  f.llt.compute(f.system);
  if (f.llt.info() == Eigen::Success) return f;
  const double unit = std::max(g.trace() / static_cast<double>(n), 1e-300);
  for (double s = 1e-12; s <= 1e-6 * (1 + 1e-9); s *= 10) {
    Eigen::MatrixXd m = f.system;
    m.diagonal().array() += s * unit;
    f.llt.compute(m);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = s * unit;
      return f;
    }
  }
  fail(ErrorCode::SolveFailed, "Cholesky failed after jitter escalation");
}

// one step of iterative refinement against the unjittered system
inline Eigen::MatrixXd solve(const Factorization& f, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd c = f.llt.solve(y);
  const Eigen::MatrixXd r = y - f.system * c;
  c += f.llt.solve(r);
  return c;
}

}  // namespace detail

/// Representer solution c = (G + n lambda I)^{-1} Y for every output column
/// with per-output lambdas. Equal lambdas share one factorization.
inline FittedModel fit_map(const SampleSet& samples, const KernelSpec& kernel, std::vector<double> lambdas) {
  samples.validate();
  const auto L = samples.outputs.cols();
  if (lambdas.size() == 1 && L > 1) lambdas.assign(static_cast<std::size_t>(L), lambdas.front());
  if (static_cast<Eigen::Index>(lambdas.size()) != L) fail(ErrorCode::InvalidArgument, "one lambda per output required");
  FittedModel m;
  m.kernel = kernel;
  m.lambdas = lambdas;
  m.inputs = samples.inputs;
  const Eigen::MatrixXd g = gram_matrix(kernel, samples.inputs);
  m.coefficients.resize(g.rows(), L);
  const bool shared = std::all_of(lambdas.begin(), lambdas.end(), [&](double l) { return l == lambdas.front(); });
  if (shared) {
    const auto f = detail::factorize(g, lambdas.front());
    m.coefficients = detail::solve(f, samples.outputs);
    m.jitter = f.jitter;
    return m;
  }
  std::vector<double> jit(static_cast<std::size_t>(L), 0.0);
  parallel_for(static_cast<std::size_t>(L), [&](std::size_t l) {
    const auto f = detail::factorize(g, lambdas[l]);
    m.coefficients.col(static_cast<Eigen::Index>(l)) = detail::solve(f, samples.outputs.col(static_cast<Eigen::Index>(l)));
    jit[l] = f.jitter;
  });
  m.jitter = *std::max_element(jit.begin(), jit.end());
  return m;
}

inline FittedModel fit(const SampleSet& samples, const KernelSpec& kernel, double lambda) {
  if (samples.outputs.cols() != 1) fail(ErrorCode::InvalidArgument, "fit expects a single output; use fit_map");
  return fit_map(samples, kernel, {lambda});
}

/// sum_i c_i kappa(x, x^i) for every output.
inline Eigen::VectorXd predict(const FittedModel& model, std::span<const double> x) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(model.inputs.size()));
  for (std::size_t i = 0; i < model.inputs.size(); ++i) k(static_cast<Eigen::Index>(i)) = model.kernel(x, model.inputs[i]);
  return model.coefficients.transpose() * k;
}

inline double predict_scalar(const FittedModel& model, std::span<const double> x) { return predict(model, x)(0); }

/// (1/n) |y - G c|^2 + lambda c^T G c, the penalized sample error of the
/// kernel expansion with coefficients c.
inline double objective(const Eigen::MatrixXd& g, const Eigen::VectorXd& y, const Eigen::VectorXd& c, double lambda) {
  const Eigen::VectorXd r = y - g * c;
  return r.squaredNorm() / static_cast<double>(y.size()) + lambda * c.dot(g * c);
}

}  // namespace tensorsplit
