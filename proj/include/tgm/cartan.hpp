#pragma once

// Cartan calculus on one chart: d, interior products, Lie derivatives,
// Lie brackets and the Levi-Civita connection.
//
// Conventions: (dα)_ij = ∂_i α_j − ∂_j α_i, (dB)_ijk = ∂_i B_jk − ∂_j B_ik + ∂_k B_ij,
// (ι_X ω)_{i…} = X^k ω_{k i…} (contraction on the first slot).

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "tgm/tensor.hpp"

namespace tgm {

inline bool is_covariant(Valence v) {
  return form_degree(v) >= 1 || v == Valence::symbilinear || v == Valence::bilinear;
}

inline TensorField partial(const TensorField& f, int var) {
  std::vector<ScalarField> c;
  for (const auto& s : f.components()) c.push_back(differentiate(s, var));
  return TensorField(f.chart_ptr(), f.valence(), std::move(c));
}

inline ScalarField partial(const ScalarField& f, const Chart& chart, std::string_view coord) {
  return differentiate(f, chart.require_index(coord));
}

inline TensorField exterior_derivative(const TensorField& omega) {
  const int k = form_degree(omega.valence());
  if (k < 0) throw ValenceError("exterior derivative needs a form, got " + std::string(valence_name(omega.valence())));
  Valence out = form_valence(k + 1);
  return TensorField::from_indices(omega.chart_ptr(), out, [&](std::span<const int> idx) {
    ScalarField acc;
    std::array<int, 4> rest{};
    for (int r = 0; r <= k; ++r) {
      int m = 0;
      for (int s = 0; s <= k; ++s)
        if (s != r) rest[static_cast<std::size_t>(m++)] = idx[static_cast<std::size_t>(s)];
      ScalarField term =
          differentiate(omega.at(std::span<const int>(rest.data(), static_cast<std::size_t>(k))), idx[static_cast<std::size_t>(r)]);
      acc = (r % 2 == 0) ? acc + term : acc - term;
    }
    return acc;
  });
}

/// ι_X on a k-form (k >= 1) or on the first slot of a bilinear form.
inline TensorField interior_product(const TensorField& X, const TensorField& omega) {
  X.require(Valence::vector);
  X.require_same_chart(omega);
  const int n = X.dim();
  Valence out;
  const int k = form_degree(omega.valence());
  if (k >= 1)
    out = form_valence(k - 1);
  else if (omega.valence() == Valence::symbilinear || omega.valence() == Valence::bilinear)
    out = Valence::oneform;
  else
    throw ValenceError("interior product needs a form of degree >= 1, got " + std::string(valence_name(omega.valence())));
  const int rank = tensor_rank(omega.valence());
  return TensorField::from_indices(X.chart_ptr(), out, [&](std::span<const int> idx) {
    ScalarField acc;
    std::array<int, 4> full{};
    for (int j = 0; j < n; ++j) {
      if (X.at(j).is_zero()) continue;
      full[0] = j;
      for (std::size_t a = 0; a < idx.size(); ++a) full[a + 1] = idx[a];
      acc += X.at(j) * omega.at(std::span<const int>(full.data(), static_cast<std::size_t>(rank)));
    }
    return acc;
  });
}

/// α(X) for a 1-form α and a vector field X.
inline ScalarField apply(const TensorField& alpha, const TensorField& X) {
  alpha.require(Valence::oneform);
  X.require(Valence::vector);
  alpha.require_same_chart(X);
  ScalarField acc;
  for (int i = 0; i < X.dim(); ++i) acc += alpha.at(i) * X.at(i);
  return acc;
}

inline TensorField lie_bracket(const TensorField& X, const TensorField& Y) {
  X.require(Valence::vector);
  Y.require(Valence::vector);
  X.require_same_chart(Y);
  const int n = X.dim();
  return TensorField::from_indices(X.chart_ptr(), Valence::vector, [&](std::span<const int> idx) {
    const int i = idx[0];
    ScalarField acc;
    for (int j = 0; j < n; ++j) {
      acc += X.at(j) * differentiate(Y.at(i), j);
      acc -= Y.at(j) * differentiate(X.at(i), j);
    }
    return acc;
  });
}

/// 𝓛_X T for scalars, vectors, forms and (symmetric) bilinear forms.
inline TensorField lie_derivative(const TensorField& X, const TensorField& T) {
  X.require(Valence::vector);
  X.require_same_chart(T);
  const int n = X.dim();
  if (T.valence() == Valence::scalar) {
    ScalarField acc;
    for (int i = 0; i < n; ++i) acc += X.at(i) * differentiate(T.at(), i);
    return TensorField::scalar(T.chart_ptr(), acc);
  }
  if (T.valence() == Valence::vector) return lie_bracket(X, T);
  if (!is_covariant(T.valence()))
    throw ValenceError("Lie derivative not supported for " + std::string(valence_name(T.valence())));
  const int rank = tensor_rank(T.valence());
  return TensorField::from_indices(T.chart_ptr(), T.valence(), [&](std::span<const int> idx) {
    ScalarField acc;
    for (int j = 0; j < n; ++j) acc += X.at(j) * differentiate(T.at(idx), j);
    std::array<int, 4> swapped{};
    for (int r = 0; r < rank; ++r) {
      std::copy(idx.begin(), idx.end(), swapped.begin());
      for (int j = 0; j < n; ++j) {
        ScalarField dX = differentiate(X.at(j), idx[static_cast<std::size_t>(r)]);
        if (dX.is_zero()) continue;
        swapped[static_cast<std::size_t>(r)] = j;
        acc += T.at(std::span<const int>(swapped.data(), static_cast<std::size_t>(rank))) * dX;
      }
    }
    return acc;
  });
}

// ---------------------------------------------------------------------------
// Symbolic linear algebra for small matrices of scalar fields.

using SymbolicMatrix = std::vector<std::vector<ScalarField>>;

inline ScalarField symbolic_determinant(const SymbolicMatrix& m) {
  const std::size_t n = m.size();
  if (n == 0) return ScalarField::constant(1.0);
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  ScalarField acc;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].is_zero()) continue;
    SymbolicMatrix minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<ScalarField> row;
      for (std::size_t cc = 0; cc < n; ++cc)
        if (cc != c) row.push_back(m[r][cc]);
      minor.push_back(std::move(row));
    }
    ScalarField term = m[0][c] * symbolic_determinant(minor);
    acc = (c % 2 == 0) ? acc + term : acc - term;
  }
  return acc;
}

/// Adjugate / determinant. Exponential in n; intended for n <= 4.
inline SymbolicMatrix symbolic_inverse(const SymbolicMatrix& m) {
  const std::size_t n = m.size();
  ScalarField det = symbolic_determinant(m);
  SymbolicMatrix inv(n, std::vector<ScalarField>(n));
  if (n == 1) {
    inv[0][0] = ScalarField::constant(1.0) / det;
    return inv;
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      SymbolicMatrix minor;
      for (std::size_t rr = 0; rr < n; ++rr) {
        if (rr == r) continue;
        std::vector<ScalarField> row;
        for (std::size_t cc = 0; cc < n; ++cc)
          if (cc != c) row.push_back(m[rr][cc]);
        minor.push_back(std::move(row));
      }
      ScalarField cof = symbolic_determinant(minor);
      if ((r + c) % 2 == 1) cof = -cof;
      inv[c][r] = cof / det;  // transpose of the cofactor matrix
    }
  return inv;
}

inline SymbolicMatrix to_symbolic_matrix(const TensorField& t) {
  if (tensor_rank(t.valence()) != 2) throw ValenceError("expected a rank-2 tensor");
  const int n = t.dim();
  SymbolicMatrix m(static_cast<std::size_t>(n), std::vector<ScalarField>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = t.at(i, j);
  return m;
}

inline constexpr int kMaxSymbolicInverseDim = 4;

/// Symbolic g^{-1} stored as a symbilinear field (n <= 4).
inline TensorField inverse_metric(const TensorField& g) {
  g.require(Valence::symbilinear);
  if (g.dim() > kMaxSymbolicInverseDim)
    throw Error("symbolic inverse only available for dim <= " + std::to_string(kMaxSymbolicInverseDim));
  SymbolicMatrix inv = symbolic_inverse(to_symbolic_matrix(g));
  return TensorField::from_indices(g.chart_ptr(), Valence::symbilinear, [&](std::span<const int> ij) {
    return inv[static_cast<std::size_t>(ij[0])][static_cast<std::size_t>(ij[1])];
  });
}

/// Evaluates g at p and checks it is invertible.
inline Eigen::MatrixXd eval_metric(const TensorField& g, const Point& p) {
  Eigen::MatrixXd gm = g.eval_matrix(p);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gm);
  lu.setThreshold(1e-12);
  if (lu.rank() < gm.rows()) throw SingularMetricError("metric is singular at the evaluation point");
  return gm;
}

// ---------------------------------------------------------------------------

/// Levi-Civita connection Γ^k_ij = ½ g^{kl}(∂_i g_lj + ∂_j g_li − ∂_l g_ij).
/// Symbolic for dim <= 4; otherwise the inverse is taken numerically per point.
class Christoffel {
public:
  explicit Christoffel(TensorField g) : g_(std::move(g)) {
    g_.require(Valence::symbilinear);
    const int n = g_.dim();
    dg_.reserve(static_cast<std::size_t>(n * n * n));
    // dg_[(l*n + i)*n + j] = ∂_l g_ij
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dg_.push_back(differentiate(g_.at(i, j), l));
    if (n <= kMaxSymbolicInverseDim) {
      TensorField ginv = inverse_metric(g_);
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            ScalarField acc;
            for (int l = 0; l < n; ++l) {
              ScalarField first = lower(i, l, j) + lower(j, l, i) - lower(l, i, j);
              if (first.is_zero()) continue;
              acc += ginv.at(k, l) * first;
            }
            symbolic_.push_back(ScalarField::constant(0.5) * acc);
          }
    }
  }

  bool symbolic() const { return !symbolic_.empty(); }
  int dim() const { return g_.dim(); }

  /// Γ^k_ij as a field (symbolic mode only).
  const ScalarField& at(int k, int i, int j) const {
    if (!symbolic()) throw Error("Christoffel symbols are numeric-only in this dimension");
    const int n = dim();
    return symbolic_[static_cast<std::size_t>((k * n + i) * n + j)];
  }

  /// All Γ^k_ij at p, entry (k, i, j).
  DenseTensor eval(const Point& p) const {
    const int n = dim();
    Eigen::MatrixXd gm = eval_metric(g_, p);
    DenseTensor out{n, 3, std::vector<double>(static_cast<std::size_t>(n * n * n))};
    if (symbolic()) {
      for (std::size_t c = 0; c < symbolic_.size(); ++c) out.data[c] = symbolic_[c].eval(as_span(p));
      return out;
    }
    Eigen::MatrixXd ginv = gm.inverse();
    std::vector<double> d(dg_.size());
    for (std::size_t c = 0; c < dg_.size(); ++c) d[c] = dg_[c].eval(as_span(p));
    auto D = [&](int l, int i, int j) { return d[static_cast<std::size_t>((l * n + i) * n + j)]; };
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l) acc += ginv(k, l) * (D(i, l, j) + D(j, l, i) - D(l, i, j));
          out.data[static_cast<std::size_t>((k * n + i) * n + j)] = 0.5 * acc;
        }
    return out;
  }

  const TensorField& metric() const { return g_; }

private:
  // ∂_a g_bc
  const ScalarField& lower(int a, int b, int c) const {
    const int n = dim();
    return dg_[static_cast<std::size_t>((a * n + b) * n + c)];
  }

  TensorField g_;
  std::vector<ScalarField> dg_;
  std::vector<ScalarField> symbolic_;
};

inline Christoffel christoffel(const TensorField& g) { return Christoffel(g); }

/// max_{k,i,j} |∇_k g_ij| at p, with ∇_k g_ij = ∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il.
inline double metricity_defect(const Christoffel& gamma, const Point& p) {
  const TensorField& g = gamma.metric();
  const int n = g.dim();
  Eigen::MatrixXd gm = g.eval_matrix(p);
  DenseTensor G = gamma.eval(p);
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = differentiate(g.at(i, j), k).eval(as_span(p));
        for (int l = 0; l < n; ++l) v -= G(l, k, i) * gm(l, j) + G(l, k, j) * gm(i, l);
        worst = std::max(worst, std::abs(v));
      }
  return worst;
}

}  // namespace tgm
