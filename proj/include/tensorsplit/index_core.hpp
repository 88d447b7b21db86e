#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tensorsplit/error.hpp"

namespace tensorsplit {

using Coord = std::uint32_t;  // 1-based coordinate direction
using Level = std::uint32_t;

/// Finite subset of the coordinate directions {1, 2, ...}, kept sorted and
/// duplicate free.
class SupportSet {
 public:
  SupportSet() = default;
  SupportSet(std::initializer_list<Coord> coords) : SupportSet(std::vector<Coord>(coords)) {}
  explicit SupportSet(std::vector<Coord> coords) : coords_(std::move(coords)) {
    std::sort(coords_.begin(), coords_.end());
    coords_.erase(std::unique(coords_.begin(), coords_.end()), coords_.end());
    if (!coords_.empty() && coords_.front() == 0)
      fail(ErrorCode::InvalidArgument, "coordinates are 1-based");
  }

  std::size_t size() const noexcept { return coords_.size(); }
  bool empty() const noexcept { return coords_.empty(); }
  auto begin() const noexcept { return coords_.begin(); }
  auto end() const noexcept { return coords_.end(); }
  const std::vector<Coord>& coords() const noexcept { return coords_; }
  Coord max_coord() const noexcept { return coords_.empty() ? 0 : coords_.back(); }

  bool contains(Coord k) const { return std::binary_search(coords_.begin(), coords_.end(), k); }

  bool is_subset_of(const SupportSet& other) const {
    return std::includes(other.coords_.begin(), other.coords_.end(), coords_.begin(), coords_.end());
  }

  SupportSet with(Coord k) const {
    auto c = coords_;
    c.push_back(k);
    return SupportSet(std::move(c));
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(coords_[i]);
    }
    return s + "}";
  }

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::vector<Coord> coords_;
};

/// Orders support sets by cardinality, then lexicographically. This is the
/// summation order used for every subset sum in the library.
struct SubsetOrder {
  bool operator()(const SupportSet& a, const SupportSet& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.coords() < b.coords();
  }
};

/// All subsets of `omega` in SubsetOrder.
inline std::vector<SupportSet> subsets_of(const SupportSet& omega) {
  const auto& c = omega.coords();
  const std::size_t n = c.size();
  std::vector<SupportSet> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Coord> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) s.push_back(c[i]);
    out.emplace_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), SubsetOrder{});
  return out;
}

/// All subsets of {1, ..., d} in SubsetOrder.
inline std::vector<SupportSet> all_subsets(std::size_t d) {
  std::vector<Coord> c(d);
  for (std::size_t i = 0; i < d; ++i) c[i] = static_cast<Coord>(i + 1);
  return subsets_of(SupportSet(std::move(c)));
}

/// Finitely supported multi-index. Only nonzero levels are stored, so the
/// zero index is the empty vector and infinitely many coordinates cost
/// nothing.
class IndexVector {
 public:
  using Entry = std::pair<Coord, Level>;

  IndexVector() = default;
  IndexVector(std::initializer_list<Entry> entries) {
    for (const auto& [k, l] : entries) set(k, l);
  }

  static IndexVector unit(Coord k, Level level = 1) {
    IndexVector j;
    j.set(k, level);
    return j;
  }

  Level operator[](Coord k) const {
    auto it = find(k);
    return (it != entries_.end() && it->first == k) ? it->second : 0;
  }

  /// Sets level j_k; level 0 removes the coordinate from the support.
  void set(Coord k, Level level) {
    if (k == 0) fail(ErrorCode::InvalidArgument, "coordinates are 1-based");
    auto it = find(k);
    const bool present = it != entries_.end() && it->first == k;
    if (level == 0) {
      if (present) entries_.erase(it);
    } else if (present) {
      it->second = level;
    } else {
      entries_.insert(it, {k, level});
    }
  }

  IndexVector with(Coord k, Level level) const {
    IndexVector j = *this;
    j.set(k, level);
    return j;
  }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  bool is_zero() const noexcept { return entries_.empty(); }
  std::size_t l0() const noexcept { return entries_.size(); }
  std::uint64_t l1() const noexcept {
    std::uint64_t s = 0;
    for (const auto& e : entries_) s += e.second;
    return s;
  }
  Coord max_coord() const noexcept { return entries_.empty() ? 0 : entries_.back().first; }

  SupportSet support() const {
    std::vector<Coord> c;
    c.reserve(entries_.size());
    for (const auto& e : entries_) c.push_back(e.first);
    return SupportSet(std::move(c));
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(entries_[i].first) + ":" + std::to_string(entries_[i].second);
    }
    return s + "}";
  }

  friend bool operator==(const IndexVector&, const IndexVector&) = default;

 private:
  std::vector<Entry>::iterator find(Coord k) {
    return std::lower_bound(entries_.begin(), entries_.end(), k,
                            [](const Entry& e, Coord c) { return e.first < c; });
  }
  std::vector<Entry>::const_iterator find(Coord k) const {
    return std::lower_bound(entries_.begin(), entries_.end(), k,
                            [](const Entry& e, Coord c) { return e.first < c; });
  }

  std::vector<Entry> entries_;
};

inline SupportSet support(const IndexVector& j) { return j.support(); }

/// Componentwise order: i <= j iff i_k <= j_k for every k.
inline bool leq(const IndexVector& i, const IndexVector& j) {
  for (const auto& [k, l] : i)
    if (l > j[k]) return false;
  return true;
}

/// Canonical order: by |j|_1, then support, then levels.
struct CanonicalLess {
  bool operator()(const IndexVector& a, const IndexVector& b) const {
    const auto la = a.l1(), lb = b.l1();
    if (la != lb) return la < lb;
    const auto& ea = a.entries();
    const auto& eb = b.entries();
    const bool by_support = std::lexicographical_compare(
        ea.begin(), ea.end(), eb.begin(), eb.end(),
        [](const auto& x, const auto& y) { return x.first < y.first; });
    if (by_support) return true;
    const bool rev_support = std::lexicographical_compare(
        eb.begin(), eb.end(), ea.begin(), ea.end(),
        [](const auto& x, const auto& y) { return x.first < y.first; });
    if (rev_support) return false;
    return std::lexicographical_compare(
        ea.begin(), ea.end(), eb.begin(), eb.end(),
        [](const auto& x, const auto& y) { return x.second < y.second; });
  }
};

/// Finite set of multi-indices iterated in canonical order. Whether the set
/// is monotone (downward closed) is computed on first request and cached;
/// the cache is atomic so concurrent readers are safe.
class IndexSet {
 public:
  using Storage = std::set<IndexVector, CanonicalLess>;

  IndexSet() = default;
  IndexSet(std::initializer_list<IndexVector> members) : members_(members) {}
  template <class It>
  IndexSet(It first, It last) : members_(first, last) {}

  IndexSet(const IndexSet& o) : members_(o.members_), monotone_(o.monotone_.load()) {}
  IndexSet(IndexSet&& o) noexcept : members_(std::move(o.members_)), monotone_(o.monotone_.load()) {}
  IndexSet& operator=(const IndexSet& o) {
    members_ = o.members_;
    monotone_.store(o.monotone_.load());
    return *this;
  }
  IndexSet& operator=(IndexSet&& o) noexcept {
    members_ = std::move(o.members_);
    monotone_.store(o.monotone_.load());
    return *this;
  }

  bool insert(const IndexVector& j) {
    const bool added = members_.insert(j).second;
    if (added) monotone_.store(kUnknown);
    return added;
  }

  bool contains(const IndexVector& j) const { return members_.count(j) != 0; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  auto begin() const noexcept { return members_.begin(); }
  auto end() const noexcept { return members_.end(); }

  bool is_monotone() const {
    int cached = monotone_.load();
    if (cached != kUnknown) return cached == kYes;
    const bool m = compute_monotone();
    monotone_.store(m ? kYes : kNo);
    return m;
  }

  Coord max_coord() const {
    Coord m = 0;
    for (const auto& j : members_) m = std::max(m, j.max_coord());
    return m;
  }

  friend bool operator==(const IndexSet& a, const IndexSet& b) { return a.members_ == b.members_; }

 private:
  static constexpr int kUnknown = -1, kNo = 0, kYes = 1;

  // Downward closed iff every member's immediate predecessors are members.
  bool compute_monotone() const {
    for (const auto& j : members_) {
      for (const auto& [k, l] : j)
        if (!contains(j.with(k, l - 1))) return false;
    }
    return true;
  }

  Storage members_;
  mutable std::atomic<int> monotone_{kUnknown};
};

/// Every i with i <= j, including the zero index.
inline std::vector<IndexVector> lower_set(const IndexVector& j) {
  std::vector<IndexVector> out{IndexVector{}};
  for (const auto& [k, l] : j) {
    const std::size_t n = out.size();
    for (std::size_t r = 0; r < n; ++r)
      for (Level v = 1; v <= l; ++v) out.push_back(out[r].with(k, v));
  }
  return out;
}

/// Smallest monotone superset of `s`.
inline IndexSet downward_closure(const IndexSet& s) {
  IndexSet out;
  for (const auto& j : s) {
    if (out.contains(j)) continue;
    for (const auto& i : lower_set(j)) out.insert(i);
  }
  return out;
}

inline bool is_monotone(const IndexSet& s) { return s.is_monotone(); }

}  // namespace tensorsplit
