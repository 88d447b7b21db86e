#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tensorsplit/io.hpp"
#include "test_support.hpp"

using namespace tensorsplit;
using namespace tensorsplit::io;

namespace {

void expect_config_invalid(const std::function<void()>& f) {
  try {
    f();
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid) << e.what();
  }
}

std::string temp_file(const std::string& name, const std::string& body) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(Fmt, RoundTripsAndSpecials) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 6.02214076e23}) EXPECT_EQ(std::stod(fmt(v)), v);
  EXPECT_EQ(fmt(0.5), "0.5");
  EXPECT_EQ(fmt(kInf), "inf");
  EXPECT_EQ(fmt(-kInf), "-inf");
  EXPECT_EQ(fmt(std::nan("")), "nan");
}

TEST(Csv, Quoting) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"a", "b,c", "say \"hi\"", "line\nbreak"});
  w.row({});
  EXPECT_EQ(os.str(), "a,\"b,c\",\"say \"\"hi\"\"\",\"line\nbreak\"\n\n");
}

TEST(Csv, ReadNumeric) {
  const auto t = read_numeric_csv(temp_file("ok.csv", "x1,x2,y\r\n0.1,0.2,3\n\n0.5,1e-3,-4\n"));
  ASSERT_EQ(t.header.size(), 3u);
  EXPECT_EQ(t.header[2], "y");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], 1e-3);
  EXPECT_EQ(t.rows[0][2], 3.0);
  expect_config_invalid([] { read_numeric_csv(temp_file("bad1.csv", "x,y\n0.1,abc\n")); });
  expect_config_invalid([] { read_numeric_csv(temp_file("bad2.csv", "x,y\n0.1\n")); });
  expect_config_invalid([] { read_numeric_csv(temp_file("bad3.csv", "x,y\n0.1,2x\n")); });
  expect_config_invalid([] { read_numeric_csv(temp_file("bad4.csv", "")); });
  expect_config_invalid([] { read_numeric_csv(::testing::TempDir() + "missing.csv"); });
}

TEST(Parse, Sequences) {
  EXPECT_EQ(parse_sequence(json(0.5), "s")(7), 0.5);
  const auto l = parse_sequence(json::parse("[1, 0.5]"), "s");
  EXPECT_EQ(l(2), 0.5);
  EXPECT_EQ(l(3), 0.0);
  const auto p = parse_sequence(json::parse(R"({"c": 2, "p": 2})"), "s");
  EXPECT_DOUBLE_EQ(p(4), 2.0 / 16.0);
  const auto h = parse_sequence(json::parse(R"({"head": [9], "c": 1, "r": 0.5})"), "s");
  EXPECT_EQ(h(1), 9.0);
  EXPECT_DOUBLE_EQ(h(3), 0.125);
  expect_config_invalid([] { parse_sequence(json::parse(R"({"c": 1, "q": 2})"), "s"); });
  expect_config_invalid([] { parse_sequence(json::parse(R"({"c": 1, "r": 0})"), "s"); });
  expect_config_invalid([] { parse_sequence(json::parse(R"([1, "x"])"), "s"); });
}

TEST(Parse, Gamma) {
  const auto g = parse_gamma(json::parse(R"({"kind": "table", "entries": [{"omega": [2, 1], "value": 3}]})"), "g");
  EXPECT_EQ(g(SupportSet{1, 2}), 3.0);
  const auto f = parse_gamma(json::parse(R"({"kind": "finite_order", "order": 1, "gamma": 0.5})"), "g");
  EXPECT_EQ(f(SupportSet{3}), 0.5);
  EXPECT_EQ(f(SupportSet{1, 3}), 0.0);
  expect_config_invalid([] { parse_gamma(json::parse(R"({"kind": "bogus"})"), "g"); });
  expect_config_invalid([] { parse_gamma(json::parse(R"({"kind": "product"})"), "g"); });
  expect_config_invalid([] { parse_gamma(json::parse(R"({"kind": "product", "gamma": 1, "x": 0})"), "g"); });
  expect_config_invalid([] { parse_gamma(json::parse(R"({"kind": "table", "entries": [{"omega": [0], "value": 1}]})"), "g"); });
  expect_config_invalid([] { parse_gamma(json::parse(R"({"kind": "finite_order", "order": -1, "gamma": 1})"), "g"); });
}

TEST(Parse, Weights) {
  const auto w = parse_weight(json::parse(R"({"kind": "table", "entries": [{"j": [[1, 2]], "value": 4}]})"), "w");
  EXPECT_EQ(w(IndexVector{{1, 2}}), 4.0);
  const auto p = parse_weight(json::parse(R"({"kind": "product", "gamma": [0.25]})"), "w");
  EXPECT_DOUBLE_EQ(p(IndexVector{{1, 2}}), 16.0);
  const auto s = parse_weight(
      json::parse(R"({"kind": "spline", "gamma": {"kind": "product", "gamma": {"c": 1, "p": 2}}, "s": {"a": 1, "b": 0.5}})"), "w");
  EXPECT_TRUE(std::isfinite(s(IndexVector{{1, 1}})));
  expect_config_invalid([] { parse_weight(json::parse(R"({"kind": "ones", "gamma": 1})"), "w"); });
  expect_config_invalid([] { parse_weight(json::parse(R"({"kind": "nope"})"), "w"); });
  expect_config_invalid([] { parse_weight(json::parse(R"({"kind": "table", "entries": [{"j": [[1]], "value": 4}]})"), "w"); });
}

TEST(Parse, Function) {
  const auto f = parse_function(json::parse(R"({"dim": 2, "terms": [
      {"coef": 2, "factors": [{"coord": 1, "kind": "monomial", "p": 2}, {"coord": 2, "kind": "poly", "coeffs": [1, 1]}]},
      {"factors": [{"coord": 2, "kind": "exp", "a": 1}]},
      {"coef": 0.5}]})"), "f");
  const std::vector<double> x{0.5, 0.25};
  EXPECT_NEAR(f(x), 2.0 * 0.25 * 1.25 + std::exp(0.25) + 0.5, 1e-15);
  expect_config_invalid([] { parse_function(json::parse(R"({"dim": 0, "terms": []})"), "f"); });
  expect_config_invalid([] { parse_function(json::parse(R"({"dim": 1, "terms": [{"factors": [{"coord": 2, "kind": "monomial", "p": 1}]}]})"), "f"); });
  expect_config_invalid([] {
    parse_function(json::parse(R"({"dim": 1, "terms": [{"factors": [{"coord": 1, "kind": "monomial", "p": 1}, {"coord": 1, "kind": "monomial", "p": 1}]}]})"), "f");
  });
  expect_config_invalid([] { parse_function(json::parse(R"({"dim": 1, "terms": [{"factors": [{"coord": 1, "kind": "tan"}]}]})"), "f"); });
  expect_config_invalid([] { parse_function(json::parse(R"({"dim": 1, "terms": {}, "extra": 1})"), "f"); });
}

TEST(Parse, KernelAndMode) {
  const auto k = parse_kernel(json::parse(R"({"kind": "anchored_h1"})"), "k", 0.25);
  EXPECT_EQ(std::get<KernelSpec::AnchoredH1>(k.variant).anchor.x_star, 0.25);
  const auto t = parse_kernel(json::parse(R"({"kind": "tensor", "basis": "legendre", "entries": [{"j": [], "b": 1}]})"), "k", 0.5);
  EXPECT_DOUBLE_EQ(t(std::vector<double>{0.1}, std::vector<double>{0.9}), 1.0);
  expect_config_invalid([] { parse_kernel(json::parse(R"({"kind": "tensor", "entries": [{"j": [], "b": 0}]})"), "k", 0.5); });
  expect_config_invalid([] { parse_kernel(json::parse(R"({"kind": "tensor", "basis": "fourier", "entries": []})"), "k", 0.5); });
  EXPECT_EQ(parse_mode("anova", "m"), Mode::Anova);
  EXPECT_EQ(parse_mode("anchored", "m"), Mode::Anchored);
  expect_config_invalid([] { parse_mode("ANOVA", "m"); });
}

TEST(Parse, ShippedConfigsAreValidJson) {
  for (const char* name : {"anchored", "anova", "epsdim", "epsdim_spline", "equiv", "equiv_not_certified", "regress", "sobol",
                           "transform", "truncate"}) {
    std::ifstream in(std::string(TENSORSPLIT_CONFIGS) + "/" + name + ".json");
    ASSERT_TRUE(in) << name;
    json parsed;
    EXPECT_NO_THROW(parsed = json::parse(in)) << name;
    EXPECT_FALSE(parsed.is_null()) << name;
  }
}
