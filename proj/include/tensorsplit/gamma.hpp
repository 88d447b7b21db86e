#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "tensorsplit/error.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/sequence.hpp"

namespace tensorsplit {

/// Weight sequence gamma_omega over finite subsets of coordinates, with
/// gamma_{} = 1.
///
///  - Product:     gamma_omega = prod_{k in omega} gamma_k
///  - FiniteOrder: product weights truncated to |omega| <= order
///  - Table:       explicit finite table; absent sets have weight 0
class GammaModel {
 public:
  struct Product {
    Sequence gamma;
  };
  struct FiniteOrder {
    std::size_t order;
    Sequence gamma;
  };
  struct Table {
    std::map<SupportSet, double, SubsetOrder> values;
  };
  using Variant = std::variant<Product, FiniteOrder, Table>;

  GammaModel() : GammaModel(Table{}) {}
  explicit GammaModel(Variant v) : v_(std::move(v)) { validate(); }

  static GammaModel product(Sequence gamma) { return GammaModel(Product{std::move(gamma)}); }
  static GammaModel finite_order(std::size_t order, Sequence gamma) {
    return GammaModel(FiniteOrder{order, std::move(gamma)});
  }
  static GammaModel table(std::map<SupportSet, double, SubsetOrder> values) {
    return GammaModel(Table{std::move(values)});
  }
  /// gamma supported on the empty set only.
  static GammaModel constants_only() { return table({}); }

  const Variant& variant() const noexcept { return v_; }
  bool is_product() const { return std::holds_alternative<Product>(v_); }
  bool is_finite_order() const { return std::holds_alternative<FiniteOrder>(v_); }
  bool is_table() const { return std::holds_alternative<Table>(v_); }

  double operator()(const SupportSet& omega) const {
    if (omega.empty()) return 1.0;
    return std::visit(
        [&](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Table>) {
            auto it = m.values.find(omega);
            return it == m.values.end() ? 0.0 : it->second;
          } else {
            if constexpr (std::is_same_v<T, FiniteOrder>)
              if (omega.size() > m.order) return 0.0;
            double g = 1.0;
            for (Coord k : omega) g *= m.gamma(k);
            return g;
          }
        },
        v_);
  }

  /// Per-coordinate factors for the product-type variants.
  const Sequence* coordinate_sequence() const {
    if (auto p = std::get_if<Product>(&v_)) return &p->gamma;
    if (auto f = std::get_if<FiniteOrder>(&v_)) return &f->gamma;
    return nullptr;
  }

  /// Maximal |omega| carrying positive weight (nullopt: unbounded).
  std::optional<std::size_t> max_order() const {
    if (auto f = std::get_if<FiniteOrder>(&v_)) return f->order;
    if (auto t = std::get_if<Table>(&v_)) {
      std::size_t m = 0;
      for (const auto& [w, g] : t->values)
        if (g > 0) m = std::max(m, w.size());
      return m;
    }
    const auto& g = std::get<Product>(v_).gamma;
    if (auto last = g.last_nonzero()) return static_cast<std::size_t>(*last);
    return std::nullopt;
  }

  /// Whether only finitely many sets carry positive weight.
  bool finite_support() const {
    if (is_table()) return true;
    return coordinate_sequence()->finitely_supported();
  }

  /// All sets with positive weight, including {}, in SubsetOrder. Only for
  /// finitely supported models.
  std::vector<SupportSet> support_sets() const {
    if (!finite_support()) fail(ErrorCode::TailUnavailable, "gamma has infinitely many positive entries");
    std::vector<SupportSet> out{SupportSet{}};
    if (auto t = std::get_if<Table>(&v_)) {
      for (const auto& [w, g] : t->values)
        if (g > 0 && !w.empty()) out.push_back(w);
    } else {
      const auto& seq = *coordinate_sequence();
      std::vector<Coord> active;
      for (Coord k = 1; k <= seq.head_size(); ++k)
        if (seq(k) > 0) active.push_back(k);
      const std::size_t cap = max_order().value_or(active.size());
      for (const auto& w : subsets_of(SupportSet(active)))
        if (!w.empty() && w.size() <= cap) out.push_back(w);
    }
    std::sort(out.begin(), out.end(), SubsetOrder{});
    return out;
  }

  /// Support {omega : gamma_omega > 0} is closed under taking subsets.
  bool support_monotone() const {
    if (!is_table()) return true;
    for (const auto& w : support_sets())
      for (const auto& v : subsets_of(w))
        if ((*this)(v) <= 0) return false;
    return true;
  }

 private:
  void validate() const {
    if (auto t = std::get_if<Table>(&v_)) {
      for (const auto& [w, g] : t->values) {
        if (!(g >= 0) || !std::isfinite(g)) fail(ErrorCode::InvalidArgument, "gamma values must be finite and nonnegative");
        if (w.empty() && g != 1.0) fail(ErrorCode::InvalidArgument, "gamma of the empty set must be 1");
      }
    } else {
      const auto& seq = *coordinate_sequence();
      for (double v : seq.head())
        if (!(v >= 0)) fail(ErrorCode::InvalidArgument, "gamma_k must be nonnegative");
      if (seq.envelope().c < 0) fail(ErrorCode::InvalidArgument, "gamma_k must be nonnegative");
    }
  }

  Variant v_;
};

}  // namespace tensorsplit
