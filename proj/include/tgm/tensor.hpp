#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tgm/chart.hpp"
#include "tgm/errors.hpp"
#include "tgm/expr.hpp"

namespace tgm {

enum class Valence { scalar, vector, oneform, twoform, threeform, fourform, symbilinear, bilinear };

inline std::string_view valence_name(Valence v) {
  switch (v) {
    case Valence::scalar: return "scalar";
    case Valence::vector: return "vector";
    case Valence::oneform: return "oneform";
    case Valence::twoform: return "twoform";
    case Valence::threeform: return "threeform";
    case Valence::fourform: return "fourform";
    case Valence::symbilinear: return "symbilinear";
    case Valence::bilinear: return "bilinear";
  }
  return "?";
}

/// Degree of a differential form valence (scalars are 0-forms), -1 otherwise.
inline int form_degree(Valence v) {
  switch (v) {
    case Valence::scalar: return 0;
    case Valence::oneform: return 1;
    case Valence::twoform: return 2;
    case Valence::threeform: return 3;
    case Valence::fourform: return 4;
    default: return -1;
  }
}

inline Valence form_valence(int degree) {
  switch (degree) {
    case 0: return Valence::scalar;
    case 1: return Valence::oneform;
    case 2: return Valence::twoform;
    case 3: return Valence::threeform;
    case 4: return Valence::fourform;
    default: throw ValenceError("forms of degree " + std::to_string(degree) + " are not supported");
  }
}

/// Number of indices.
inline int tensor_rank(Valence v) {
  switch (v) {
    case Valence::scalar: return 0;
    case Valence::vector:
    case Valence::oneform: return 1;
    case Valence::twoform:
    case Valence::symbilinear:
    case Valence::bilinear: return 2;
    case Valence::threeform: return 3;
    case Valence::fourform: return 4;
  }
  return 0;
}

inline std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

inline std::size_t component_count(Valence v, int n) {
  const auto un = static_cast<std::size_t>(n);
  switch (v) {
    case Valence::vector: return un;
    case Valence::symbilinear: return un * (un + 1) / 2;
    case Valence::bilinear: return un * un;
    default: return binomial(n, form_degree(v));
  }
}

namespace forms {

using Index = std::array<int, 4>;

/// Strictly increasing index tuples of length k from {0..n-1}, lexicographic.
inline std::vector<Index> combinations(int n, int k) {
  std::vector<Index> out;
  Index c{};
  std::function<void(int, int)> rec = [&](int pos, int start) {
    if (pos == k) {
      out.push_back(c);
      return;
    }
    for (int i = start; i < n; ++i) {
      c[static_cast<std::size_t>(pos)] = i;
      rec(pos + 1, i + 1);
    }
  };
  rec(0, 0);
  return out;
}

/// Sorts idx in place and returns the permutation sign, or 0 on a repeated index.
inline int sort_with_sign(std::span<int> idx) {
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j)
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        sign = -sign;
      }
  for (std::size_t i = 0; i + 1 < idx.size(); ++i)
    if (idx[i] == idx[i + 1]) return 0;
  return sign;
}

/// Position of a strictly increasing tuple in `combinations(n, k)`.
inline std::size_t rank_of(int n, std::span<const int> sorted) {
  const int k = static_cast<int>(sorted.size());
  std::size_t r = 0;
  int prev = -1;
  for (int pos = 0; pos < k; ++pos) {
    for (int v = prev + 1; v < sorted[static_cast<std::size_t>(pos)]; ++v) r += binomial(n - 1 - v, k - 1 - pos);
    prev = sorted[static_cast<std::size_t>(pos)];
  }
  return r;
}

}  // namespace forms

/// Small dense row-major array with n^rank entries.
struct DenseTensor {
  int n = 0;
  int rank = 0;
  std::vector<double> data;

  double operator()(int i) const { return data[static_cast<std::size_t>(i)]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i * n + j)]; }
  double operator()(int i, int j, int k) const { return data[static_cast<std::size_t>((i * n + j) * n + k)]; }
  double operator()(int i, int j, int k, int l) const {
    return data[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
  }
};

/// Component array of ScalarFields with a declared valence. Antisymmetric
/// valences store only increasing index tuples and symbilinear only i <= j,
/// so (anti)symmetry holds by construction.
class TensorField {
public:
  using ChartPtr = std::shared_ptr<const Chart>;

  TensorField(ChartPtr chart, Valence valence, std::vector<ScalarField> components)
      : chart_(std::move(chart)), valence_(valence), comps_(std::move(components)) {
    if (!chart_) throw Error("tensor field needs a chart");
    if (comps_.size() != component_count(valence_, chart_->dim()))
      throw ValenceError("a " + std::string(valence_name(valence_)) + " in dimension " +
                         std::to_string(chart_->dim()) + " has " +
                         std::to_string(component_count(valence_, chart_->dim())) + " components, got " +
                         std::to_string(comps_.size()));
  }

  static TensorField zero(ChartPtr chart, Valence valence) {
    auto count = component_count(valence, chart->dim());
    return TensorField(std::move(chart), valence, std::vector<ScalarField>(count));
  }

  /// Builds a field from a function of full index tuples; only independent
  /// components are queried.
  static TensorField from_indices(ChartPtr chart, Valence valence,
                                  const std::function<ScalarField(std::span<const int>)>& fn) {
    const int n = chart->dim();
    std::vector<ScalarField> comps;
    comps.reserve(component_count(valence, n));
    switch (valence) {
      case Valence::vector:
        for (int i = 0; i < n; ++i) comps.push_back(fn(std::array<int, 1>{i}));
        break;
      case Valence::symbilinear:
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) comps.push_back(fn(std::array<int, 2>{i, j}));
        break;
      case Valence::bilinear:
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) comps.push_back(fn(std::array<int, 2>{i, j}));
        break;
      default: {
        const int k = form_degree(valence);
        for (const auto& c : forms::combinations(n, k))
          comps.push_back(fn(std::span<const int>(c.data(), static_cast<std::size_t>(k))));
      }
    }
    return TensorField(std::move(chart), valence, std::move(comps));
  }

  static TensorField scalar(ChartPtr chart, ScalarField f) {
    return TensorField(std::move(chart), Valence::scalar, {std::move(f)});
  }

  const ChartPtr& chart_ptr() const { return chart_; }
  const Chart& chart() const { return *chart_; }
  int dim() const { return chart_->dim(); }
  Valence valence() const { return valence_; }
  std::span<const ScalarField> components() const { return comps_; }

  /// Component for a full index tuple; forms return the signed stored entry.
  ScalarField at(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != tensor_rank(valence_)) throw ValenceError("wrong number of indices");
    const int n = dim();
    switch (valence_) {
      case Valence::vector: return comps_[static_cast<std::size_t>(idx[0])];
      case Valence::bilinear: return comps_[static_cast<std::size_t>(idx[0] * n + idx[1])];
      case Valence::symbilinear: {
        int i = std::min(idx[0], idx[1]), j = std::max(idx[0], idx[1]);
        return comps_[sym_offset(i, j)];
      }
      default: {
        std::array<int, 4> buf{};
        std::copy(idx.begin(), idx.end(), buf.begin());
        std::span<int> s(buf.data(), idx.size());
        int sign = forms::sort_with_sign(s);
        if (sign == 0) return ScalarField::constant(0.0);
        const ScalarField& c = comps_[forms::rank_of(n, s)];
        return sign > 0 ? c : -c;
      }
    }
  }

  ScalarField at() const { return at(std::span<const int>{}); }
  ScalarField at(int i) const { return at(std::array<int, 1>{i}); }
  ScalarField at(int i, int j) const { return at(std::array<int, 2>{i, j}); }
  ScalarField at(int i, int j, int k) const { return at(std::array<int, 3>{i, j, k}); }

  /// All n^rank components at p (row-major).
  DenseTensor eval_dense(const Point& p) const {
    const int n = dim();
    const int r = tensor_rank(valence_);
    DenseTensor out{n, r, {}};
    std::size_t total = 1;
    for (int i = 0; i < r; ++i) total *= static_cast<std::size_t>(n);
    out.data.assign(total, 0.0);
    auto pt = as_span(p);
    switch (valence_) {
      case Valence::scalar:
      case Valence::vector:
      case Valence::oneform:
      case Valence::bilinear:
        for (std::size_t i = 0; i < comps_.size(); ++i) out.data[i] = comps_[i].eval(pt);
        break;
      case Valence::symbilinear: {
        std::size_t c = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            double v = comps_[c++].eval(pt);
            out.data[static_cast<std::size_t>(i * n + j)] = v;
            out.data[static_cast<std::size_t>(j * n + i)] = v;
          }
        break;
      }
      default: {
        const int k = form_degree(valence_);
        auto combos = forms::combinations(n, k);
        for (std::size_t c = 0; c < combos.size(); ++c) {
          double v = comps_[c].eval(pt);
          if (v == 0.0) continue;
          std::array<int, 4> perm{0, 1, 2, 3};
          // every permutation of the combo, with its sign
          std::sort(perm.begin(), perm.begin() + k);
          do {
            std::array<int, 4> idx{};
            for (int a = 0; a < k; ++a) idx[static_cast<std::size_t>(a)] = combos[c][static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
            std::array<int, 4> tmp = idx;
            int sign = forms::sort_with_sign(std::span<int>(tmp.data(), static_cast<std::size_t>(k)));
            std::size_t off = 0;
            for (int a = 0; a < k; ++a) off = off * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
            out.data[off] = sign * v;
          } while (std::next_permutation(perm.begin(), perm.begin() + k));
        }
      }
    }
    return out;
  }

  double eval_scalar(const Point& p) const {
    require(Valence::scalar);
    return comps_[0].eval(as_span(p));
  }

  /// Vector or 1-form components at p.
  Eigen::VectorXd eval_vector(const Point& p) const {
    if (tensor_rank(valence_) != 1) throw ValenceError("expected a vector or 1-form");
    Eigen::VectorXd v(dim());
    for (int i = 0; i < dim(); ++i) v[i] = comps_[static_cast<std::size_t>(i)].eval(as_span(p));
    return v;
  }

  /// Matrix of a rank-2 tensor at p, (i,j) -> T_ij.
  Eigen::MatrixXd eval_matrix(const Point& p) const {
    if (tensor_rank(valence_) != 2) throw ValenceError("expected a rank-2 tensor");
    DenseTensor d = eval_dense(p);
    Eigen::MatrixXd m(dim(), dim());
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) m(i, j) = d(i, j);
    return m;
  }

  void require(Valence v) const {
    if (valence_ != v)
      throw ValenceError("expected " + std::string(valence_name(v)) + ", got " + std::string(valence_name(valence_)));
  }

  void require_same_chart(const TensorField& other) const {
    if (chart_ != other.chart_ && !(*chart_ == *other.chart_)) throw ChartMismatchError();
  }

  friend TensorField operator+(const TensorField& a, const TensorField& b) {
    a.require_same_chart(b);
    b.require(a.valence_);
    std::vector<ScalarField> c(a.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comps_[i] + b.comps_[i];
    return TensorField(a.chart_, a.valence_, std::move(c));
  }

  friend TensorField operator-(const TensorField& a, const TensorField& b) {
    a.require_same_chart(b);
    b.require(a.valence_);
    std::vector<ScalarField> c(a.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comps_[i] - b.comps_[i];
    return TensorField(a.chart_, a.valence_, std::move(c));
  }

  friend TensorField operator*(const ScalarField& f, const TensorField& t) {
    std::vector<ScalarField> c(t.comps_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = f * t.comps_[i];
    return TensorField(t.chart_, t.valence_, std::move(c));
  }

  friend TensorField operator-(const TensorField& t) { return ScalarField::constant(-1.0) * t; }

private:
  std::size_t sym_offset(int i, int j) const {
    const int n = dim();
    return static_cast<std::size_t>(i * n - i * (i - 1) / 2 + (j - i));
  }

  ChartPtr chart_;
  Valence valence_;
  std::vector<ScalarField> comps_;
};

/// Views any rank-2 tensor as a full bilinear form.
inline TensorField to_bilinear(const TensorField& t) {
  if (tensor_rank(t.valence()) != 2) throw ValenceError("expected a rank-2 tensor");
  return TensorField::from_indices(t.chart_ptr(), Valence::bilinear,
                                   [&](std::span<const int> ij) { return t.at(ij); });
}

/// Parses component strings into a vector field or 1-form.
inline TensorField parse_rank1(const TensorField::ChartPtr& chart, Valence v, std::span<const std::string> texts) {
  if (tensor_rank(v) != 1) throw ValenceError("expected a rank-1 valence");
  if (static_cast<int>(texts.size()) != chart->dim()) throw ValenceError("wrong component count");
  std::vector<ScalarField> c;
  for (const auto& t : texts) c.push_back(chart->parse(t));
  return TensorField(chart, v, std::move(c));
}

}  // namespace tgm
