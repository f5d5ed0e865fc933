#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tgm/errors.hpp"
#include "tgm/expr.hpp"

namespace tgm {

using Point = Eigen::VectorXd;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// A single coordinate chart with a sampling box. Points where the optional
/// excluded predicate evaluates to a non-positive value are never sampled.
class Chart {
public:
  Chart(std::vector<std::string> coords, std::vector<Interval> box)
      : coords_(std::move(coords)), box_(std::move(box)) {
    if (coords_.empty()) throw Error("chart needs at least one coordinate");
    if (box_.size() != coords_.size()) throw Error("sample box must give one interval per coordinate");
    std::set<std::string> seen;
    for (const auto& c : coords_) {
      if (!is_identifier(c)) throw Error("invalid coordinate name '" + c + "'");
      if (expr::function_from_name(c)) throw Error("coordinate name '" + c + "' is reserved");
      if (!seen.insert(c).second) throw Error("duplicate coordinate name '" + c + "'");
    }
    for (std::size_t i = 0; i < box_.size(); ++i)
      if (!(box_[i].lo < box_[i].hi))
        throw Error("degenerate sample interval for coordinate '" + coords_[i] + "'");
  }

  /// Unit box [0,1]^n.
  explicit Chart(std::vector<std::string> coords)
      : Chart(coords, std::vector<Interval>(coords.size(), Interval{})) {}

  int dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<std::string>& coords() const { return coords_; }
  const std::vector<Interval>& box() const { return box_; }

  std::optional<int> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i] == name) return static_cast<int>(i);
    return std::nullopt;
  }

  int require_index(std::string_view name) const {
    if (auto i = index_of(name)) return *i;
    throw UnknownSymbolError(std::string(name));
  }

  void set_excluded(std::optional<ScalarField> predicate) { excluded_ = std::move(predicate); }
  const std::optional<ScalarField>& excluded() const { return excluded_; }

  bool in_box(const Point& p) const {
    for (int i = 0; i < dim(); ++i)
      if (p[i] < box_[i].lo || p[i] > box_[i].hi) return false;
    return true;
  }

  /// True when p is inside the box and not excluded. A predicate that cannot
  /// be evaluated at p excludes it.
  bool accepts(const Point& p) const {
    if (!in_box(p)) return false;
    if (!excluded_) return true;
    try {
      return excluded_->eval(std::span<const double>(p.data(), p.size())) > 0.0;
    } catch (const DomainError&) {
      return false;
    }
  }

  ScalarField parse(std::string_view text) const { return parse_expression(text, coords_); }
  std::string print(const ScalarField& f) const { return to_string(f, coords_); }

  bool operator==(const Chart& other) const { return coords_ == other.coords_; }

private:
  std::vector<std::string> coords_;
  std::vector<Interval> box_;
  std::optional<ScalarField> excluded_;
};

inline std::span<const double> as_span(const Point& p) { return {p.data(), static_cast<std::size_t>(p.size())}; }

namespace detail {

inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

inline constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47};

// 53 random bits to [0,1); portable across standard libraries.
inline double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Deterministic quasi-random sample: a Halton sequence with a seeded
/// Cranley-Patterson shift, mapped into the box and filtered by the chart's
/// excluded predicate.
inline std::vector<Point> sample_points(const Chart& chart, int count, std::uint64_t seed) {
  const int n = chart.dim();
  if (n > static_cast<int>(std::size(detail::kPrimes))) throw Error("chart dimension too large for sampler");
  std::mt19937_64 rng(seed);
  std::vector<double> shift(static_cast<std::size_t>(n));
  for (auto& s : shift) s = detail::unit_double(rng);

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::uint64_t max_attempts = 1000ull * static_cast<std::uint64_t>(std::max(count, 1));
  for (std::uint64_t idx = 1; static_cast<int>(out.size()) < count; ++idx) {
    if (idx > max_attempts) throw Error("excluded predicate rejects nearly the whole sample box");
    Point p(n);
    for (int i = 0; i < n; ++i) {
      double u = detail::radical_inverse(idx, detail::kPrimes[i]) + shift[static_cast<std::size_t>(i)];
      u -= std::floor(u);
      const auto& iv = chart.box()[static_cast<std::size_t>(i)];
      p[i] = iv.lo + u * (iv.hi - iv.lo);
    }
    if (chart.accepts(p)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace tgm
