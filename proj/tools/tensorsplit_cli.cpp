#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "tensorsplit.hpp"
#include "tensorsplit/io.hpp"

namespace fs = std::filesystem;
using namespace tensorsplit;
using io::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNotCertified = 10;
constexpr int kExitModuleBase = 20;  // + ErrorCode value

struct Globals {
  std::string config;
  std::string out;
  unsigned threads = 0;
  int quad_order = 32;
  double anchor = 0.5;
  std::uint64_t cap = 10'000'000;
  bool include_empty = false;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, "config " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ConfigInvalid, "config root must be an object");
  return j;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(io::fmt(v)); }

GammaModel gamma_or_ones(const json& c) {
  return c.contains("gamma") ? io::parse_gamma(c.at("gamma"), "gamma") : GammaModel::product(Sequence::constant(1.0));
}

int run_epsdim(const json& c, const Globals& g, std::ostream& os) {
  io::check_keys(c, {"a", "b", "dims", "eps", "restrict"}, "config");
  const WeightModel a = io::parse_weight(io::need(c, "a", "config"), "a");
  const WeightModel b = c.contains("b") ? io::parse_weight(c.at("b"), "b") : WeightModel::ones();
  const std::string dk = c.contains("dims") ? io::text(c, "dims", "config") : "all_one";
  DimensionModel dims = DimensionModel::all_one();
  if (dk == "spline") dims = DimensionModel::spline();
  else if (dk != "all_one") fail(ErrorCode::ConfigInvalid, "dims must be all_one or spline");
  const auto eps = io::numbers(io::need(c, "eps", "config"), "eps");
  std::vector<std::uint64_t> restrict_to;
  if (c.contains("restrict"))
    for (const auto& d : c.at("restrict")) restrict_to.push_back(io::count(d, "restrict"));

  EnumOptions opt;
  opt.cap = g.cap;
  io::CsvWriter w(os);
  w.row({"eps", "d", "n", "index_count", "stabilization_dim", "truncated"});
  for (double e : eps) {
    if (!(e > 0)) fail(ErrorCode::ConfigInvalid, "eps values must be positive");
    spdlog::info("epsdim: eps = {}", e);
    const auto r = eps_dimension(a, b, e, dims, std::nullopt, opt);
    w.row({io::fmt(e), "inf", std::to_string(r.n), std::to_string(r.index_set.size()),
           std::to_string(stabilization_dim(r)), r.truncated ? "true" : "false"});
    for (auto d : restrict_to) {
      const auto rr = eps_dimension_restricted(a, b, e, dims, static_cast<Coord>(d), std::nullopt, opt);
      w.row({io::fmt(e), std::to_string(d), std::to_string(rr.n), std::to_string(rr.index_set.size()),
             std::to_string(stabilization_dim(rr)), rr.truncated ? "true" : "false"});
    }
  }
  return 0;
}

int run_transform(const json& c, const Globals&, std::ostream& os) {
  io::check_keys(c, {"a", "indices"}, "config");
  const WeightModel a = io::parse_weight(io::need(c, "a", "config"), "a");
  const TailSum tail = require_tail(a);
  require_v_norm(a, tail);
  io::CsvWriter w(os);
  w.row({"j", "a", "a_hat", "ratio"});
  for (const auto& jj : io::need(c, "indices", "config")) {
    const IndexVector j = io::parse_index(jj, "indices");
    const double aj = a(j);
    if (aj == 0.0) {
      w.row({j.to_string(), io::fmt(0.0), io::fmt(0.0), "nan"});
      continue;
    }
    const double h = hat_transform(a, j, tail);
    w.row({j.to_string(), io::fmt(aj), io::fmt(h), io::fmt(h / aj)});
  }
  return 0;
}

int run_decompose(const json& c, const Globals& g, Mode mode, std::ostream& os) {
  io::check_keys(c, {"function", "gamma"}, "config");
  const SeparableFunction f = io::parse_function(io::need(c, "function", "config"), "function");
  const GammaModel gamma = gamma_or_ones(c);
  const auto terms = decompose(f, mode, Anchor(g.anchor), g.quad_order);
  io::CsvWriter w(os);
  w.row({"omega", "mixed_norm_sq", "error_estimate", "gamma", "weighted"});
  for (const auto& t : terms) {
    const double gw = gamma(t.omega);
    const double weighted = gw > 0 ? t.mixed_norm_sq / gw : (t.mixed_norm_sq == 0.0 ? 0.0 : kInf);
    w.row({t.omega.to_string(), io::fmt(t.mixed_norm_sq), io::fmt(t.error_estimate), io::fmt(gw), io::fmt(weighted)});
  }
  return 0;
}

int run_equiv(const json& c, const Globals& g, std::ostream& os) {
  io::check_keys(c, {"gamma", "q_tilde"}, "config");
  const GammaModel gamma = io::parse_gamma(io::need(c, "gamma", "config"), "gamma");
  const double q_tilde = io::number_or(c, "q_tilde", 1.0, "config");
  const Anchor anchor(g.anchor);
  const auto rep = evaluate_default(gamma, q_const(anchor), q_tilde);
  json out;
  out["anchor"] = anchor.x_star;
  out["q"] = rep.q;
  out["alpha"] = rep.alpha_spec;
  out["c_prime"] = num(rep.c_prime);
  out["c_dprime"] = num(rep.c_dprime);
  if (auto cert = rep.certificate()) {
    out["status"] = "certified";
    out["c"] = cert->c;
  } else {
    out["status"] = "not certified";
    out["failing_condition"] = rep.failing();
  }
  if (auto p = std::get_if<GammaModel::Product>(&gamma.variant())) {
    const bool pwl1 = product_weight_equivalence(p->gamma);
    out["sum_sqrt_gamma_finite"] = pwl1;
    out["equivalent"] = pwl1;
  }
  os << out.dump(2) << '\n';
  return rep.certified() ? 0 : kExitNotCertified;
}

int run_sobol(const json& c, const Globals& g, std::ostream& os) {
  io::check_keys(c, {"function", "gamma", "mode", "include_empty"}, "config");
  const SeparableFunction f = io::parse_function(io::need(c, "function", "config"), "function");
  const GammaModel gamma = gamma_or_ones(c);
  const Mode mode = io::parse_mode(io::text(c, "mode", "config"), "mode");
  const bool include_empty = g.include_empty || (c.contains("include_empty") && c.at("include_empty").get<bool>());
  const auto t = sobol_indices(f, gamma, mode, Anchor(g.anchor), include_empty, g.quad_order);
  io::CsvWriter w(os);
  w.row({"omega", "S", "S_tot"});
  for (const auto& [omega, s] : t.per_omega) w.row({omega.to_string(), io::fmt(s), io::fmt(t.total.at(omega))});
  return 0;
}

int run_truncate(const json& c, const Globals& g, std::ostream& os) {
  io::check_keys(c, {"function", "gamma", "mode", "m_max"}, "config");
  const SeparableFunction f = io::parse_function(io::need(c, "function", "config"), "function");
  const GammaModel gamma = gamma_or_ones(c);
  const Mode mode = io::parse_mode(io::text(c, "mode", "config"), "mode");
  const std::size_t m_max = c.contains("m_max") ? io::count(c.at("m_max"), "m_max") : f.dim;
  const Anchor anchor(g.anchor);
  const double norm = weighted_norm(f, gamma, mode, anchor, g.quad_order);
  io::CsvWriter w(os);
  w.row({"m", "error", "bound", "bound_ratio"});
  for (std::size_t m = 0; m <= m_max; ++m) {
    const double err = l2_error(f, truncate_m(f, m, mode, anchor, g.quad_order));
    const double bound = truncation_bound(gamma, m, mode, anchor) * norm;
    w.row({std::to_string(m), io::fmt(err), io::fmt(bound), io::fmt(bound > 0 ? err / bound : (err == 0 ? 0.0 : kInf))});
  }
  return 0;
}

int run_regress(const json& c, const Globals& g, const fs::path& base, std::ostream& os) {
  io::check_keys(c, {"samples", "inputs", "kernel", "lambda", "holdout", "seed"}, "config");
  fs::path sp = io::text(c, "samples", "config");
  if (sp.is_relative()) sp = base / sp;
  const auto table = io::read_numeric_csv(sp.string());
  const std::size_t d = io::count(io::need(c, "inputs", "config"), "inputs");
  if (d == 0 || d >= table.header.size()) fail(ErrorCode::ConfigInvalid, "inputs must leave at least one output column");
  const std::size_t L = table.header.size() - d;
  const KernelSpec kernel = io::parse_kernel(io::need(c, "kernel", "config"), "kernel", g.anchor);
  const auto lambdas = io::numbers(io::need(c, "lambda", "config"), "lambda");
  for (double l : lambdas)
    if (!(l > 0)) fail(ErrorCode::ConfigInvalid, "lambda must be positive");
  const double holdout = io::number_or(c, "holdout", 0.0, "config");
  if (!(holdout >= 0 && holdout < 1)) fail(ErrorCode::ConfigInvalid, "holdout must lie in [0, 1)");
  const auto seed = c.contains("seed") ? io::count(c.at("seed"), "seed") : 0;

  std::vector<std::size_t> order(table.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  const auto n_test = static_cast<std::size_t>(std::floor(holdout * static_cast<double>(order.size())));
  const std::size_t n_train = order.size() - n_test;
  if (n_train == 0) fail(ErrorCode::ConfigInvalid, "no training samples");

  auto take = [&](std::size_t from, std::size_t to) {
    SampleSet s;
    s.outputs.resize(static_cast<Eigen::Index>(to - from), static_cast<Eigen::Index>(L));
    for (std::size_t i = from; i < to; ++i) {
      const auto& r = table.rows[order[i]];
      s.inputs.emplace_back(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(d));
      for (std::size_t l = 0; l < L; ++l)
        s.outputs(static_cast<Eigen::Index>(i - from), static_cast<Eigen::Index>(l)) = r[d + l];
    }
    return s;
  };
  const SampleSet train = take(0, n_train), test = take(n_train, order.size());
  const FittedModel m = fit_map(train, kernel, lambdas);

  json out;
  out["n_train"] = n_train;
  out["n_test"] = n_test;
  out["lambda"] = m.lambdas;
  out["jitter"] = m.jitter;
  json coef = json::array();
  for (Eigen::Index i = 0; i < m.coefficients.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index l = 0; l < m.coefficients.cols(); ++l) row.push_back(m.coefficients(i, l));
    coef.push_back(row);
  }
  out["coefficients"] = coef;
  if (n_test > 0) {
    double se = 0.0;
    for (std::size_t i = 0; i < n_test; ++i) {
      const Eigen::VectorXd p = predict(m, test.inputs[i]);
      se += (p - test.outputs.row(static_cast<Eigen::Index>(i)).transpose()).squaredNorm();
    }
    out["rmse_test"] = std::sqrt(se / static_cast<double>(n_test * L));
  } else {
    out["rmse_test"] = nullptr;
  }
  os << out.dump(2) << '\n';
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("tensorsplit");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lv = std::getenv("TENSORSPLIT_LOG")) {
    const std::string s = lv;
    if (s == "error") spdlog::set_level(spdlog::level::err);
    else if (s == "warn") spdlog::set_level(spdlog::level::warn);
    else if (s == "info") spdlog::set_level(spdlog::level::info);
    else if (s == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring TENSORSPLIT_LOG={}", s);
  }
}

int report(const std::string& code, const std::string& what, int status, const json& extra = json::object()) {
  json e = {{"error", code}, {"message", what}};
  for (const auto& [k, v] : extra.items()) e[k] = v;
  std::cerr << e.dump() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Globals g;
  CLI::App app{"Weighted tensor-product decompositions: eps-dimensions, norm equivalence, sensitivity, regression"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", g.config, "JSON config path")->required();
  app.add_option("--out", g.out, "output path (default: stdout)");
  app.add_option("--threads", g.threads, "worker threads (0: hardware count)");
  app.add_option("--quad-order", g.quad_order, "Gauss-Legendre order for decompositions")->check(CLI::Range(1, 64));
  app.add_option("--anchor", g.anchor, "anchor x*")->check(CLI::Range(0.0, 1.0));
  app.add_option("--cap", g.cap, "enumeration cap");
  app.add_flag("--include-empty", g.include_empty, "sobol: keep the empty set in numerator and denominator");
  for (const char* name : {"epsdim", "transform", "anova", "anchored", "equiv", "sobol", "truncate", "regress"})
    app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("ConfigInvalid", e.what(), kExitConfig);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  set_default_threads(g.threads);
  try {
    const json cfg = load_config(g.config);
    const fs::path base = fs::path(g.config).parent_path();
    std::ostringstream buf;
    int status = 0;
    if (sub == "epsdim") status = run_epsdim(cfg, g, buf);
    else if (sub == "transform") status = run_transform(cfg, g, buf);
    else if (sub == "anova") status = run_decompose(cfg, g, Mode::Anova, buf);
    else if (sub == "anchored") status = run_decompose(cfg, g, Mode::Anchored, buf);
    else if (sub == "equiv") status = run_equiv(cfg, g, buf);
    else if (sub == "sobol") status = run_sobol(cfg, g, buf);
    else if (sub == "truncate") status = run_truncate(cfg, g, buf);
    else status = run_regress(cfg, g, base, buf);
    if (g.out.empty()) {
      std::cout << buf.str();
    } else {
      std::ofstream out(g.out, std::ios::binary);
      if (!out) fail(ErrorCode::ConfigInvalid, "cannot write " + g.out);
      out << buf.str();
    }
    spdlog::info("{} finished with status {}", sub, status);
    return status;
  } catch (const NormDegenerateError& e) {
    json w = json::array();
    for (const auto& [n, s] : e.witness().box_bounds) w.push_back({{"box", n}, {"inverse_sum", s}});
    return report(std::string(to_string(e.code())), e.what(), kExitModuleBase + static_cast<int>(e.code()), {{"witness", w}});
  } catch (const Error& e) {
    const int status = e.code() == ErrorCode::ConfigInvalid ? kExitConfig : kExitModuleBase + static_cast<int>(e.code());
    return report(std::string(to_string(e.code())), e.what(), status);
  } catch (const json::exception& e) {
    return report("ConfigInvalid", e.what(), kExitConfig);
  } catch (const std::exception& e) {
    return report("Internal", e.what(), 1);
  }
}
