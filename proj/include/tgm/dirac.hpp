#pragma once

// Regular small Dirac structures given by a spanning frame, and the
// pointwise π±/annihilator linear algebra.

#include <vector>

#include <Eigen/Dense>

#include "tgm/courant.hpp"

namespace tgm {

inline constexpr double kIsotropyTol = 1e-10;
inline constexpr double kInvolutivityTol = 1e-9;
inline constexpr double kRegularityTol = 1e-8;
inline constexpr double kNullSpaceCutoff = 1e-10;

/// Orthonormal basis of ker(A); singular values below rel_cutoff·σ_max count as zero.
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& A, double rel_cutoff = kNullSpaceCutoff) {
  const auto cols = A.cols();
  if (A.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_cutoff * smax && s[i] > 0.0) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

/// Smallest of the min(rows, cols) singular values.
inline double min_singular_value(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues().minCoeff();
}

/// k sections e_a = (X_a, α_a) spanning D, together with the ambient (g, H).
class DiracFrame {
public:
  DiracFrame(CourantData data, std::vector<GeneralizedSection> sections)
      : data_(std::move(data)), sections_(std::move(sections)) {
    const int k = rank();
    if (k < 1 || k > data_.dim())
      throw Error("a Dirac frame needs between 1 and " + std::to_string(data_.dim()) + " sections, got " +
                  std::to_string(k));
    for (const auto& s : sections_) data_.require_chart(s);
  }

  const CourantData& data() const { return data_; }
  const std::vector<GeneralizedSection>& sections() const { return sections_; }
  const GeneralizedSection& section(int a) const { return sections_[static_cast<std::size_t>(a)]; }
  int rank() const { return static_cast<int>(sections_.size()); }
  int dim() const { return data_.dim(); }
  const Chart& chart() const { return data_.chart(); }

  /// 2n×k matrix with columns e_a(p).
  Eigen::MatrixXd eval(const Point& p) const {
    Eigen::MatrixXd m(2 * dim(), rank());
    for (int a = 0; a < rank(); ++a) m.col(a) = section(a).eval(p);
    return m;
  }

  /// n×k matrix with columns X_a(p).
  Eigen::MatrixXd eval_anchor(const Point& p) const { return eval(p).topRows(dim()); }

private:
  CourantData data_;
  std::vector<GeneralizedSection> sections_;
};

// ---------------------------------------------------------------------------

struct IsotropyReport {
  double max_violation = 0.0;
  double tolerance = kIsotropyTol;
  bool pass() const { return max_violation <= tolerance; }
};

/// max over points and pairs (a,b) of |⟨e_a, e_b⟩|.
inline IsotropyReport check_isotropy(const DiracFrame& frame, std::span<const Point> points,
                                     double tol = kIsotropyTol) {
  IsotropyReport r;
  r.tolerance = tol;
  const int k = frame.rank();
  std::vector<ScalarField> pairs;
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b) pairs.push_back(pairing(frame.section(a), frame.section(b)));
  for (const auto& p : points)
    for (const auto& f : pairs) r.max_violation = std::max(r.max_violation, std::abs(f.eval(as_span(p))));
  return r;
}

struct InvolutivityReport {
  double max_residual = 0.0;
  double tolerance = kInvolutivityTol;
  int rank_deficient_points = 0;
  /// Per point, per ordered pair (a·k + b): coefficients λ^c_ab with [e_a,e_b] ≈ Σ_c λ^c_ab e_c.
  std::vector<std::vector<Eigen::VectorXd>> structure_functions;
  bool regular() const { return rank_deficient_points == 0; }
  bool pass() const { return regular() && max_residual <= tolerance; }
};

/// Brackets of generators only; by the Leibniz rule this settles involutivity
/// of the C∞-module they generate.
inline InvolutivityReport check_involutivity(const DiracFrame& frame, std::span<const Point> points,
                                             double tol = kInvolutivityTol) {
  InvolutivityReport r;
  r.tolerance = tol;
  const int k = frame.rank();
  std::vector<GeneralizedSection> brackets;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) brackets.push_back(dorfman(frame.section(a), frame.section(b), frame.data()));
  for (const auto& p : points) {
    Eigen::MatrixXd D = frame.eval(p);
    std::vector<Eigen::VectorXd> lambdas;
    if (min_singular_value(D) < kRegularityTol) {
      ++r.rank_deficient_points;
      r.structure_functions.push_back(std::move(lambdas));
      continue;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    for (const auto& br : brackets) {
      Eigen::VectorXd v = br.eval(p);
      Eigen::VectorXd lambda = qr.solve(v);
      r.max_residual = std::max(r.max_residual, (D * lambda - v).norm());
      lambdas.push_back(std::move(lambda));
    }
    r.structure_functions.push_back(std::move(lambdas));
  }
  return r;
}

struct SingularValueReport {
  double min_singular_value = std::numeric_limits<double>::infinity();
  double tolerance = kRegularityTol;
  bool pass() const { return min_singular_value >= tolerance; }
};

/// min over points of σ_k of the 2n×k frame matrix.
inline SingularValueReport check_regularity(const DiracFrame& frame, std::span<const Point> points) {
  SingularValueReport r;
  for (const auto& p : points) r.min_singular_value = std::min(r.min_singular_value, min_singular_value(frame.eval(p)));
  return r;
}

/// min over points of σ_k of the n×k anchor matrix [X_1 … X_k].
inline SingularValueReport check_projectability(const DiracFrame& frame, std::span<const Point> points) {
  SingularValueReport r;
  for (const auto& p : points)
    r.min_singular_value = std::min(r.min_singular_value, min_singular_value(frame.eval_anchor(p)));
  return r;
}

// ---------------------------------------------------------------------------

struct PointFrameData {
  Point point;
  Eigen::MatrixXd g;           // n×n
  Eigen::MatrixXd E_basis;     // 2n×2n, identity in the canonical splitting
  Eigen::MatrixXd D_mat;       // 2n×k
  Eigen::MatrixXd beta_plus;   // n×k, β_a⁺ = α_a + ι_{X_a} g
  Eigen::MatrixXd beta_minus;  // n×k, β_a⁻ = α_a − ι_{X_a} g
  Eigen::MatrixXd ann_plus;    // n×(n−k), orthonormal basis of Ann(D₊)
  Eigen::MatrixXd ann_minus;   // n×(n−k), orthonormal basis of Ann(D₋)

  int dim() const { return static_cast<int>(g.rows()); }
  int rank() const { return static_cast<int>(D_mat.cols()); }
};

inline PointFrameData point_frame(const DiracFrame& frame, const Point& p) {
  const int n = frame.dim();
  PointFrameData d;
  d.point = p;
  d.g = eval_metric(frame.data().g(), p);
  d.E_basis = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  d.D_mat = frame.eval(p);
  if (min_singular_value(d.D_mat) < kRegularityTol) throw NumericalError("frame is not regular at the point");
  Eigen::MatrixXd X = d.D_mat.topRows(n);
  Eigen::MatrixXd alpha = d.D_mat.bottomRows(n);
  d.beta_plus = alpha + d.g * X;
  d.beta_minus = alpha - d.g * X;
  d.ann_plus = null_space(d.beta_plus.transpose());
  d.ann_minus = null_space(d.beta_minus.transpose());
  if (d.ann_plus.cols() != n - frame.rank())
    throw NumericalError("π₊ is not injective at the point (frame not isotropic or g degenerate)");
  if (d.ann_minus.cols() != n - frame.rank())
    throw NumericalError("π₋ is not injective at the point (frame not isotropic or g degenerate)");
  return d;
}

}  // namespace tgm
