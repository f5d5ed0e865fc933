#pragma once

// The split exact Courant algebroid (T⊕T*)M twisted by a closed 3-form H,
// with the generalized metric V = graph(g).
//
// Pairing:  ⟨(X,α),(Y,β)⟩ = α(Y) + β(X)                 (no factor ½)
// Dorfman:  [(X,α),(Y,β)] = ([X,Y], 𝓛_X β − ι_Y dα + ι_Y ι_X H)

#include <utility>

#include <Eigen/Dense>

#include "tgm/fields.hpp"

namespace tgm {

/// A section (X, α) of (T⊕T*)M.
class GeneralizedSection {
public:
  GeneralizedSection(TensorField X, TensorField alpha) : X_(std::move(X)), alpha_(std::move(alpha)) {
    X_.require(Valence::vector);
    alpha_.require(Valence::oneform);
    X_.require_same_chart(alpha_);
  }

  static GeneralizedSection vector(TensorField X) {
    auto zero = TensorField::zero(X.chart_ptr(), Valence::oneform);
    return {std::move(X), std::move(zero)};
  }
  static GeneralizedSection form(TensorField alpha) {
    auto zero = TensorField::zero(alpha.chart_ptr(), Valence::vector);
    return {std::move(zero), std::move(alpha)};
  }

  const TensorField& X() const { return X_; }
  const TensorField& alpha() const { return alpha_; }
  const TensorField::ChartPtr& chart_ptr() const { return X_.chart_ptr(); }
  int dim() const { return X_.dim(); }

  /// Stacked components (X; α) at p.
  Eigen::VectorXd eval(const Point& p) const {
    const int n = dim();
    Eigen::VectorXd v(2 * n);
    v.head(n) = X_.eval_vector(p);
    v.tail(n) = alpha_.eval_vector(p);
    return v;
  }

  void require_same_chart(const GeneralizedSection& o) const { X_.require_same_chart(o.X_); }

  friend GeneralizedSection operator+(const GeneralizedSection& a, const GeneralizedSection& b) {
    return {a.X_ + b.X_, a.alpha_ + b.alpha_};
  }
  friend GeneralizedSection operator-(const GeneralizedSection& a, const GeneralizedSection& b) {
    return {a.X_ - b.X_, a.alpha_ - b.alpha_};
  }
  friend GeneralizedSection operator*(const ScalarField& f, const GeneralizedSection& s) {
    return {f * s.X_, f * s.alpha_};
  }

private:
  TensorField X_;
  TensorField alpha_;
};

/// Metric g and closed 3-form H on one chart.
class CourantData {
public:
  CourantData(TensorField g, TensorField H) : g_(std::move(g)), H_(std::move(H)) {
    g_.require(Valence::symbilinear);
    H_.require(Valence::threeform);
    g_.require_same_chart(H_);
  }

  const TensorField& g() const { return g_; }
  const TensorField& H() const { return H_; }
  const TensorField::ChartPtr& chart_ptr() const { return g_.chart_ptr(); }
  const Chart& chart() const { return g_.chart(); }
  int dim() const { return g_.dim(); }

  void require_chart(const GeneralizedSection& s) const { g_.require_same_chart(s.X()); }

private:
  TensorField g_;
  TensorField H_;
};

struct CourantValidation {
  double min_metric_eigenvalue = 0.0;
  double max_dH = 0.0;
  bool positive_definite = false;
  bool closed = false;
  bool ok() const { return positive_definite && closed; }
};

/// Checks g > 0 (eigenvalues) and dH = 0 at the given points.
inline CourantValidation validate(const CourantData& data, std::span<const Point> points, double closed_tol = 1e-10) {
  CourantValidation r;
  r.min_metric_eigenvalue = std::numeric_limits<double>::infinity();
  TensorField dH = exterior_derivative(data.H());
  for (const auto& p : points) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data.g().eval_matrix(p), Eigen::EigenvaluesOnly);
    r.min_metric_eigenvalue = std::min(r.min_metric_eigenvalue, es.eigenvalues().minCoeff());
    for (const auto& c : dH.components()) r.max_dH = std::max(r.max_dH, std::abs(c.eval(as_span(p))));
  }
  r.positive_definite = r.min_metric_eigenvalue > 0.0;
  r.closed = r.max_dH <= closed_tol;
  return r;
}

// ---------------------------------------------------------------------------

inline ScalarField pairing(const GeneralizedSection& s1, const GeneralizedSection& s2) {
  s1.require_same_chart(s2);
  return apply(s1.alpha(), s2.X()) + apply(s2.alpha(), s1.X());
}

inline const TensorField& anchor(const GeneralizedSection& s) { return s.X(); }

inline GeneralizedSection dorfman(const GeneralizedSection& s1, const GeneralizedSection& s2,
                                  const CourantData& data) {
  s1.require_same_chart(s2);
  data.require_chart(s1);
  const TensorField& X = s1.X();
  const TensorField& Y = s2.X();
  TensorField form = lie_derivative(X, s2.alpha()) - interior_product(Y, exterior_derivative(s1.alpha())) +
                     interior_product(Y, interior_product(X, data.H()));
  return {lie_bracket(X, Y), std::move(form)};
}

/// (X, α) ↦ (X, α + ι_X B).
inline GeneralizedSection b_transform_section(const TensorField& B, const GeneralizedSection& s) {
  B.require(Valence::twoform);
  B.require_same_chart(s.X());
  return {s.X(), s.alpha() + interior_product(s.X(), B)};
}

/// H ↦ H − dB.
inline CourantData b_transform_data(const TensorField& B, const CourantData& data) {
  B.require(Valence::twoform);
  B.require_same_chart(data.g());
  return {data.g(), data.H() - exterior_derivative(B)};
}

inline std::pair<GeneralizedSection, CourantData> b_transform(const TensorField& B, const GeneralizedSection& s,
                                                              const CourantData& data) {
  return {b_transform_section(B, s), b_transform_data(B, data)};
}

/// u₊ = (u, ι_u g)
inline GeneralizedSection plus_embed(const TensorField& u, const CourantData& data) {
  return {u, interior_product(u, data.g())};
}

/// u₋ = (u, −ι_u g)
inline GeneralizedSection minus_embed(const TensorField& u, const CourantData& data) {
  return {u, -interior_product(u, data.g())};
}

/// Raises a 1-form with a symbolic g^{-1}.
inline TensorField sharp(const TensorField& alpha, const TensorField& ginv) {
  alpha.require(Valence::oneform);
  return TensorField::from_indices(alpha.chart_ptr(), Valence::vector, [&](std::span<const int> idx) {
    ScalarField acc;
    for (int j = 0; j < alpha.dim(); ++j) acc += ginv.at(idx[0], j) * alpha.at(j);
    return acc;
  });
}

/// s = a₊ + b₋ with a = (X + g⁻¹α)/2, b = (X − g⁻¹α)/2 (symbolic).
inline std::pair<TensorField, TensorField> decompose(const GeneralizedSection& s, const CourantData& data) {
  data.require_chart(s);
  TensorField raised = sharp(s.alpha(), inverse_metric(data.g()));
  auto half = ScalarField::constant(0.5);
  return {half * (s.X() + raised), half * (s.X() - raised)};
}

/// R_V(s) = a₊ − b₋ = (g⁻¹α, ι_X g) (symbolic).
inline GeneralizedSection reflect_V(const GeneralizedSection& s, const CourantData& data) {
  auto [a, b] = decompose(s, data);
  return plus_embed(a, data) - minus_embed(b, data);
}

// ---------------------------------------------------------------------------
// Pointwise matrices on ℝ²ⁿ = T_p M ⊕ T*_p M.

/// Matrix of the pairing: [[0, I], [I, 0]].
inline Eigen::MatrixXd pairing_matrix(int n) {
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  eta.topRightCorner(n, n).setIdentity();
  eta.bottomLeftCorner(n, n).setIdentity();
  return eta;
}

/// R_V = [[0, g⁻¹], [g, 0]].
inline Eigen::MatrixXd reflection_matrix(const Eigen::MatrixXd& g) {
  const auto n = g.rows();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  R.topRightCorner(n, n) = g.inverse();
  R.bottomLeftCorner(n, n) = g;
  return R;
}

/// G_V(s,t) = ⟨s, R_V t⟩, i.e. diag(g, g⁻¹).
inline Eigen::MatrixXd generalized_metric_matrix(const Eigen::MatrixXd& g) {
  const auto n = g.rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  G.topLeftCorner(n, n) = g;
  G.bottomRightCorner(n, n) = g.inverse();
  return G;
}

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> decompose_at(const Eigen::VectorXd& s, const Eigen::MatrixXd& g) {
  const auto n = g.rows();
  Eigen::VectorXd raised = g.partialPivLu().solve(s.tail(n));
  return {0.5 * (s.head(n) + raised), 0.5 * (s.head(n) - raised)};
}

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> decompose_at(const GeneralizedSection& s, const CourantData& data,
                                                                const Point& p) {
  return decompose_at(s.eval(p), eval_metric(data.g(), p));
}

inline Eigen::VectorXd reflect_V_at(const Eigen::VectorXd& s, const Eigen::MatrixXd& g) {
  const auto n = g.rows();
  auto [a, b] = decompose_at(s, g);
  Eigen::VectorXd out(2 * n);
  out.head(n) = a - b;
  out.tail(n) = g * a + g * b;
  return out;
}

}  // namespace tgm
