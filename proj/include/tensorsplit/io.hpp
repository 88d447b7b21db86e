#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tensorsplit/decomp.hpp"
#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/regress.hpp"
#include "tensorsplit/sequence.hpp"
#include "tensorsplit/weights.hpp"

namespace tensorsplit::io {

using nlohmann::json;

/// 17 significant digits; inf and nan spelled out.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC 4180 writer with LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << quote(fields[i]);
    }
    os_ << '\n';
  }

  static std::string quote(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string s = "\"";
    for (char c : f) {
      if (c == '"') s += '"';
      s += c;
    }
    return s + '"';
  }

 private:
  std::ostream& os_;
};

/// Numeric CSV with one header line.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline NumericTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot open " + path);
  NumericTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) fail(ErrorCode::ConfigInvalid, path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> r;
    for (const auto& f : split(line)) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != f.size()) fail(ErrorCode::ConfigInvalid, path + ":" + std::to_string(n) + ": not a number");
      r.push_back(v);
    }
    if (r.size() != t.header.size()) fail(ErrorCode::ConfigInvalid, path + ":" + std::to_string(n) + ": wrong field count");
    t.rows.push_back(std::move(r));
  }
  return t;
}

// ---- strict JSON access

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::ConfigInvalid, where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) fail(ErrorCode::ConfigInvalid, where + ": unknown key '" + k + "'");
  }
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCode::ConfigInvalid, where + ": missing '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(ErrorCode::ConfigInvalid, where + ": expected a number");
  return j.get<double>();
}

inline double number(const json& j, const char* key, const std::string& where) {
  return number(need(j, key, where), where + "." + key);
}

inline double number_or(const json& j, const char* key, double dflt, const std::string& where) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : dflt;
}

inline std::uint64_t count(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    fail(ErrorCode::ConfigInvalid, where + ": expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline std::string text(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_string()) fail(ErrorCode::ConfigInvalid, where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail(ErrorCode::ConfigInvalid, where + ": expected a number array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

// ---- model specs

/// number: constant; array: finitely supported list; object: head values
/// followed by c r^k k^{-p}.
inline Sequence parse_sequence(const json& j, const std::string& where) {
  if (j.is_number()) return Sequence::constant(j.get<double>());
  if (j.is_array()) return Sequence::list(numbers(j, where));
  check_keys(j, {"head", "c", "r", "p"}, where);
  std::vector<double> head = j.contains("head") ? numbers(j.at("head"), where + ".head") : std::vector<double>{};
  Envelope e{number_or(j, "c", 0.0, where), number_or(j, "r", 1.0, where), number_or(j, "p", 0.0, where)};
  if (!(e.r > 0)) fail(ErrorCode::ConfigInvalid, where + ".r must be positive");
  return Sequence(std::move(head), e);
}

inline SupportSet parse_support(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::ConfigInvalid, where + ": expected a coordinate array");
  std::vector<Coord> c;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto k = count(j[i], where);
    if (k == 0) fail(ErrorCode::ConfigInvalid, where + ": coordinates are 1-based");
    c.push_back(static_cast<Coord>(k));
  }
  return SupportSet(std::move(c));
}

/// [[k, level], ...]
inline IndexVector parse_index(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::ConfigInvalid, where + ": expected [[coord, level], ...]");
  IndexVector v;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) fail(ErrorCode::ConfigInvalid, where + ": expected [coord, level] pairs");
    const auto k = count(e[0], where), l = count(e[1], where);
    if (k == 0) fail(ErrorCode::ConfigInvalid, where + ": coordinates are 1-based");
    v.set(static_cast<Coord>(k), static_cast<Level>(l));
  }
  return v;
}

inline GammaModel parse_gamma(const json& j, const std::string& where) {
  const std::string kind = text(j, "kind", where);
  if (kind == "product") {
    check_keys(j, {"kind", "gamma"}, where);
    return GammaModel::product(parse_sequence(need(j, "gamma", where), where + ".gamma"));
  }
  if (kind == "finite_order") {
    check_keys(j, {"kind", "order", "gamma"}, where);
    return GammaModel::finite_order(count(need(j, "order", where), where + ".order"),
                                    parse_sequence(need(j, "gamma", where), where + ".gamma"));
  }
  if (kind == "table") {
    check_keys(j, {"kind", "entries"}, where);
    std::map<SupportSet, double, SubsetOrder> t;
    for (const auto& e : need(j, "entries", where)) {
      check_keys(e, {"omega", "value"}, where + ".entries");
      t[parse_support(need(e, "omega", where), where + ".omega")] = number(e, "value", where + ".entries");
    }
    return GammaModel::table(std::move(t));
  }
  fail(ErrorCode::ConfigInvalid, where + ": unknown gamma kind '" + kind + "'");
}

inline Smoothness parse_smoothness(const json& j, const std::string& where) {
  if (j.is_number()) return Smoothness::constant(j.get<double>());
  check_keys(j, {"head", "a", "b"}, where);
  Smoothness s;
  if (j.contains("head")) s.head = numbers(j.at("head"), where + ".head");
  s.a = number_or(j, "a", 1.0, where);
  s.b = number_or(j, "b", 0.0, where);
  return s;
}

inline WeightModel parse_weight(const json& j, const std::string& where) {
  const std::string kind = text(j, "kind", where);
  try {
    if (kind == "ones") {
      check_keys(j, {"kind"}, where);
      return WeightModel::ones();
    }
    if (kind == "product") {
      check_keys(j, {"kind", "gamma"}, where);
      return WeightModel::product(parse_sequence(need(j, "gamma", where), where + ".gamma"));
    }
    if (kind == "spline") {
      check_keys(j, {"kind", "gamma", "s", "lambda"}, where);
      return WeightModel::spline(parse_gamma(need(j, "gamma", where), where + ".gamma"),
                                 j.contains("s") ? parse_smoothness(j.at("s"), where + ".s") : Smoothness::constant(1.0),
                                 j.contains("lambda") ? parse_sequence(j.at("lambda"), where + ".lambda")
                                                      : Sequence::constant(1.0));
    }
    if (kind == "anisotropic") {
      check_keys(j, {"kind", "gamma", "s"}, where);
      return WeightModel::anisotropic(parse_gamma(need(j, "gamma", where), where + ".gamma"),
                                      j.contains("s") ? parse_smoothness(j.at("s"), where + ".s")
                                                      : Smoothness::constant(1.0));
    }
    if (kind == "table") {
      check_keys(j, {"kind", "entries", "monotone"}, where);
      std::map<IndexVector, double, CanonicalLess> t;
      for (const auto& e : need(j, "entries", where)) {
        check_keys(e, {"j", "value"}, where + ".entries");
        t[parse_index(need(e, "j", where), where + ".j")] = number(e, "value", where + ".entries");
      }
      const bool mono = j.contains("monotone") && j.at("monotone").get<bool>();
      return WeightModel::table(std::move(t), mono);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::ConfigInvalid, where + ": " + e.what());
    throw;
  }
  fail(ErrorCode::ConfigInvalid, where + ": unknown weight kind '" + kind + "'");
}

inline UnivariateFactor parse_factor(const json& j, const std::string& where) {
  const std::string kind = text(j, "kind", where);
  if (kind == "poly") {
    check_keys(j, {"coord", "kind", "coeffs"}, where);
    return UnivariateFactor::polynomial(numbers(need(j, "coeffs", where), where + ".coeffs"));
  }
  if (kind == "monomial") {
    check_keys(j, {"coord", "kind", "p"}, where);
    return UnivariateFactor::monomial(static_cast<unsigned>(count(need(j, "p", where), where + ".p")));
  }
  if (kind == "sin" || kind == "cos") {
    check_keys(j, {"coord", "kind", "a", "b"}, where);
    const double a = number(j, "a", where), b = number_or(j, "b", 0.0, where);
    return kind == "sin" ? UnivariateFactor::sine(a, b) : UnivariateFactor::cosine(a, b);
  }
  if (kind == "exp") {
    check_keys(j, {"coord", "kind", "a"}, where);
    return UnivariateFactor::exponential(number(j, "a", where));
  }
  fail(ErrorCode::ConfigInvalid, where + ": unknown factor kind '" + kind + "'");
}

/// {"dim": d, "terms": [{"coef": c, "factors": [{"coord": k, "kind": ...}]}]}
inline SeparableFunction parse_function(const json& j, const std::string& where) {
  check_keys(j, {"dim", "terms"}, where);
  SeparableFunction f;
  f.dim = count(need(j, "dim", where), where + ".dim");
  if (f.dim == 0) fail(ErrorCode::ConfigInvalid, where + ".dim must be positive");
  const json& terms = need(j, "terms", where);
  if (!terms.is_array()) fail(ErrorCode::ConfigInvalid, where + ".terms: expected an array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string w = where + ".terms[" + std::to_string(i) + "]";
    check_keys(terms[i], {"coef", "factors"}, w);
    SeparableFunction::Term t;
    t.coef = number_or(terms[i], "coef", 1.0, w);
    if (terms[i].contains("factors"))
      for (const auto& fj : terms[i].at("factors")) {
        const auto k = static_cast<Coord>(count(need(fj, "coord", w), w + ".coord"));
        if (k == 0 || k > f.dim) fail(ErrorCode::ConfigInvalid, w + ": coordinate outside 1..dim");
        if (t.factors.count(k)) fail(ErrorCode::ConfigInvalid, w + ": repeated coordinate");
        t.factors.emplace(k, parse_factor(fj, w));
      }
    f.terms.push_back(std::move(t));
  }
  return f;
}

inline KernelSpec parse_kernel(const json& j, const std::string& where, double default_anchor) {
  const std::string kind = text(j, "kind", where);
  if (kind == "anchored_h1") {
    check_keys(j, {"kind", "anchor", "gamma"}, where);
    KernelSpec::AnchoredH1 k;
    k.anchor = Anchor(number_or(j, "anchor", default_anchor, where));
    if (j.contains("gamma")) k.gamma = parse_gamma(j.at("gamma"), where + ".gamma");
    return KernelSpec{k};
  }
  if (kind == "tensor") {
    check_keys(j, {"kind", "basis", "entries"}, where);
    KernelSpec::TensorProduct k;
    const std::string basis = j.contains("basis") ? text(j, "basis", where) : "cosine";
    if (basis == "cosine") k.basis = Basis::Cosine;
    else if (basis == "legendre") k.basis = Basis::Legendre;
    else fail(ErrorCode::ConfigInvalid, where + ".basis: expected cosine or legendre");
    for (const auto& e : need(j, "entries", where)) {
      check_keys(e, {"j", "b"}, where + ".entries");
      const double b = number(e, "b", where + ".entries");
      if (!(b > 0)) fail(ErrorCode::ConfigInvalid, where + ".entries: b must be positive");
      k.b[parse_index(need(e, "j", where), where + ".j")] = b;
    }
    return KernelSpec{k};
  }
  fail(ErrorCode::ConfigInvalid, where + ": unknown kernel kind '" + kind + "'");
}

inline Mode parse_mode(const std::string& s, const std::string& where) {
  if (s == "anova") return Mode::Anova;
  if (s == "anchored") return Mode::Anchored;
  fail(ErrorCode::ConfigInvalid, where + ": mode must be anova or anchored");
}

}  // namespace tensorsplit::io
