#pragma once

// Dirac-Riemannian foliation test for (E, V, D): the transverse generalized
// metric V_D = D ⊕ (D⊥ ∩ V), the connection coefficients ω± that certify
// gaugeability, and quotient data for projectable D.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tgm/dirac.hpp"
#include "tgm/parallel.hpp"

namespace tgm {

struct Tolerances {
  double pass = 1e-9;
  double fail = 1e-6;
};

enum class Verdict { transverse, not_transverse, inconclusive };

inline std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::transverse: return "transverse";
    case Verdict::not_transverse: return "not_transverse";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Lemma tensor T_a = 𝓛_{X_a} g + ι_{X_a} H − dα_a

struct LemmaTensor {
  std::vector<TensorField> T;          // bilinear, one per generator
  std::vector<TensorField> symmetric;  // 𝓛_{X_a} g
  std::vector<TensorField> skew;       // ι_{X_a} H − dα_a

  Eigen::MatrixXd eval(int a, const Point& p) const { return T[static_cast<std::size_t>(a)].eval_matrix(p); }
};

inline LemmaTensor lemma_tensor(const DiracFrame& frame) {
  LemmaTensor out;
  const auto& data = frame.data();
  for (const auto& e : frame.sections()) {
    TensorField sym = lie_derivative(e.X(), data.g());
    TensorField skew = interior_product(e.X(), data.H()) - exterior_derivative(e.alpha());
    out.T.push_back(to_bilinear(sym) + to_bilinear(skew));
    out.symmetric.push_back(std::move(sym));
    out.skew.push_back(std::move(skew));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise membership T ∈ D₊⊗T*M + T*M⊗D₋

struct MembershipSolution {
  Eigen::MatrixXd omega_plus;   // k×n, row b is the covector (ω⁺)_a^b
  Eigen::MatrixXd omega_minus;  // k×n
  double residual = 0.0;        // Frobenius norm of the defect
  Eigen::Index design_rank = 0;
  Eigen::Index expected_rank = 0;
  bool rank_ok() const { return design_rank == expected_rank; }
};

/// Minimum-norm least squares for T_ij = Σ_b β⁺_{b,i} w⁺_{b,j} − w⁻_{b,i} β⁻_{b,j}.
inline MembershipSolution membership_solve(const Eigen::MatrixXd& T, const Eigen::MatrixXd& beta_plus,
                                           const Eigen::MatrixXd& beta_minus) {
  const auto n = T.rows();
  const auto k = beta_plus.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n * n, 2 * k * n);
  Eigen::VectorXd rhs(n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = i * n + j;
      rhs[row] = T(i, j);
      for (Eigen::Index b = 0; b < k; ++b) {
        A(row, b * n + j) += beta_plus(i, b);
        A(row, k * n + b * n + i) -= beta_minus(j, b);
      }
    }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  Eigen::VectorXd z = cod.solve(rhs);
  MembershipSolution s;
  s.omega_plus.resize(k, n);
  s.omega_minus.resize(k, n);
  for (Eigen::Index b = 0; b < k; ++b)
    for (Eigen::Index j = 0; j < n; ++j) {
      s.omega_plus(b, j) = z[b * n + j];
      s.omega_minus(b, j) = z[k * n + b * n + j];
    }
  s.residual = (A * z - rhs).norm();
  s.design_rank = cod.rank();
  s.expected_rank = 2 * k * n - k * k;
  return s;
}

inline MembershipSolution membership_solve(const Eigen::MatrixXd& T, const PointFrameData& pfd) {
  return membership_solve(T, pfd.beta_plus, pfd.beta_minus);
}

/// Σ_b β⁺_b ⊗ w⁺_b − w⁻_b ⊗ β⁻_b, i.e. the tensor the solution represents.
inline Eigen::MatrixXd reassemble(const MembershipSolution& s, const Eigen::MatrixXd& beta_plus,
                                  const Eigen::MatrixXd& beta_minus) {
  return beta_plus * s.omega_plus - s.omega_minus.transpose() * beta_minus.transpose();
}

// ---------------------------------------------------------------------------
// Connection table

struct GeneratorConnection {
  Eigen::MatrixXd omega_plus;   // k×n
  Eigen::MatrixXd omega_minus;  // k×n
  double residual = 0.0;
  bool rank_ok = true;
};

struct PointConnection {
  Point point;
  std::vector<GeneratorConnection> generators;
};

struct ConnectionTable {
  std::vector<PointConnection> points;

  double max_residual() const {
    double m = 0.0;
    for (const auto& p : points)
      for (const auto& g : p.generators) m = std::max(m, g.residual);
    return m;
  }

  double max_norm() const {
    double m = 0.0;
    for (const auto& p : points)
      for (const auto& g : p.generators) m = std::max({m, g.omega_plus.norm(), g.omega_minus.norm()});
    return m;
  }

  bool rank_ok() const {
    for (const auto& p : points)
      for (const auto& g : p.generators)
        if (!g.rank_ok) return false;
    return true;
  }

  /// Informational: max over points of |Δω| / |Δx| to the nearest other point.
  double continuity() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = i;
      double dist = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < points.size(); ++j) {
        if (j == i) continue;
        double d = (points[j].point - points[i].point).norm();
        if (d < dist) {
          dist = d;
          best = j;
        }
      }
      if (best == i || dist == 0.0) continue;
      for (std::size_t a = 0; a < points[i].generators.size(); ++a) {
        const auto& x = points[i].generators[a];
        const auto& y = points[best].generators[a];
        double diff = std::sqrt((x.omega_plus - y.omega_plus).squaredNorm() + (x.omega_minus - y.omega_minus).squaredNorm());
        worst = std::max(worst, diff / dist);
      }
    }
    return worst;
  }
};

inline ConnectionTable solve_connections(const DiracFrame& frame, const LemmaTensor& lemma,
                                         std::span<const Point> points) {
  ConnectionTable table;
  table.points.resize(points.size());
  parallel_for(points.size(), [&](std::size_t idx) {
    const Point& p = points[idx];
    PointFrameData pfd = point_frame(frame, p);
    PointConnection pc;
    pc.point = p;
    for (int a = 0; a < frame.rank(); ++a) {
      MembershipSolution s = membership_solve(lemma.eval(a, p), pfd);
      pc.generators.push_back({s.omega_plus, s.omega_minus, s.residual, s.rank_ok()});
    }
    table.points[idx] = std::move(pc);
  });
  return table;
}

/// ω± ≡ 0 at every point.
inline ConnectionTable zero_connections(const DiracFrame& frame, std::span<const Point> points) {
  ConnectionTable table;
  const int k = frame.rank(), n = frame.dim();
  for (const auto& p : points) {
    PointConnection pc;
    pc.point = p;
    for (int a = 0; a < k; ++a)
      pc.generators.push_back({Eigen::MatrixXd::Zero(k, n), Eigen::MatrixXd::Zero(k, n), 0.0, true});
    table.points.push_back(std::move(pc));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Bracket oracle: ⟨[e_a, u₊], v₋⟩ for u ∈ Ann(D₊), v ∈ Ann(D₋)

struct OracleReport {
  double max_bracket = 0.0;      // via the Dorfman bracket
  double max_contraction = 0.0;  // via T_a(u, v)
  double value() const { return max_bracket; }
};

/// The pairing is tensorial in u once u₊, v₋ ∈ D⊥, so u is extended as a
/// constant-coefficient field and [e_a, u₊] is assembled from the brackets
/// with the coordinate fields (∂_i)₊.
inline OracleReport bracket_oracle(const DiracFrame& frame, std::span<const Point> points,
                                   const LemmaTensor* lemma = nullptr) {
  const int n = frame.dim(), k = frame.rank();
  const auto& data = frame.data();
  std::vector<std::vector<GeneralizedSection>> brackets(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    std::vector<ScalarField> comps(static_cast<std::size_t>(n));
    comps[static_cast<std::size_t>(i)] = ScalarField::constant(1.0);
    TensorField coord(data.chart_ptr(), Valence::vector, std::move(comps));
    GeneralizedSection coord_plus = plus_embed(coord, data);
    for (int a = 0; a < k; ++a)
      brackets[static_cast<std::size_t>(a)].push_back(dorfman(frame.section(a), coord_plus, data));
  }
  std::optional<LemmaTensor> own;
  if (!lemma) {
    own = lemma_tensor(frame);
    lemma = &*own;
  }
  const Eigen::MatrixXd eta = pairing_matrix(n);
  OracleReport r;
  std::vector<OracleReport> per_point(points.size());
  parallel_for(points.size(), [&](std::size_t idx) {
    const Point& p = points[idx];
    PointFrameData pfd = point_frame(frame, p);
    OracleReport local;
    for (int a = 0; a < k; ++a) {
      Eigen::MatrixXd B(2 * n, n);
      for (int i = 0; i < n; ++i) B.col(i) = brackets[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)].eval(p);
      Eigen::MatrixXd T = lemma->eval(a, p);
      for (Eigen::Index ui = 0; ui < pfd.ann_plus.cols(); ++ui) {
        Eigen::VectorXd bracket = B * pfd.ann_plus.col(ui);
        for (Eigen::Index vi = 0; vi < pfd.ann_minus.cols(); ++vi) {
          Eigen::VectorXd v = pfd.ann_minus.col(vi);
          Eigen::VectorXd v_minus(2 * n);
          v_minus << v, -(pfd.g * v);
          local.max_bracket = std::max(local.max_bracket, std::abs(bracket.dot(eta * v_minus)));
          local.max_contraction =
              std::max(local.max_contraction, std::abs(pfd.ann_plus.col(ui).dot(T * v)));
        }
      }
    }
    per_point[idx] = local;
  });
  for (const auto& l : per_point) {
    r.max_bracket = std::max(r.max_bracket, l.max_bracket);
    r.max_contraction = std::max(r.max_contraction, l.max_contraction);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Compatibility conditions with ∇ = ½(ω⁺+ω⁻), φ = ½(ω⁺−ω⁻):
//
//   M⁺_aij = ∂_i ρ̄_aj − Γ^k_ij ρ̄_ak − ∇_i{}^b{}_a ρ̄_bj − φ_i{}^b{}_a α_bj,      Sym(M⁺) = 0
//   M⁻_aij = ∂_i α_aj − Γ^k_ij α_ak − ∇_i{}^b{}_a α_bj − φ_i{}^b{}_a ρ̄_bj − ½(ι_{X_a}H)_ij,  Alt(M⁻) = 0
//
// with ρ̄_a = ι_{X_a} g and the covariant-derivative slot first.

struct CompatibilityReport {
  double sym_max = 0.0;
  double alt_max = 0.0;
  double max() const { return std::max(sym_max, alt_max); }
};

class CompatibilityChecker {
public:
  explicit CompatibilityChecker(const DiracFrame& frame) : frame_(frame), gamma_(frame.data().g()) {
    for (const auto& e : frame.sections()) {
      TensorField rho_bar = interior_product(e.X(), frame.data().g());
      grad_rho_.push_back(gradient(rho_bar));
      grad_alpha_.push_back(gradient(e.alpha()));
      rho_bar_.push_back(std::move(rho_bar));
      iota_H_.push_back(interior_product(e.X(), frame.data().H()));
    }
  }

  /// Per generator: (Sym M⁺, Alt M⁻) at p for the given coefficients.
  std::pair<double, double> residual_at(const PointConnection& pc) const {
    const Point& p = pc.point;
    const int n = frame_.dim(), k = frame_.rank();
    DenseTensor G = gamma_.eval(p);
    std::vector<Eigen::VectorXd> rho(static_cast<std::size_t>(k)), alpha(static_cast<std::size_t>(k));
    for (int b = 0; b < k; ++b) {
      rho[static_cast<std::size_t>(b)] = rho_bar_[static_cast<std::size_t>(b)].eval_vector(p);
      alpha[static_cast<std::size_t>(b)] = frame_.section(b).alpha().eval_vector(p);
    }
    double sym = 0.0, alt = 0.0;
    for (int a = 0; a < k; ++a) {
      const auto& conn = pc.generators[static_cast<std::size_t>(a)];
      Eigen::MatrixXd nabla = 0.5 * (conn.omega_plus + conn.omega_minus);  // (b, i)
      Eigen::MatrixXd phi = 0.5 * (conn.omega_plus - conn.omega_minus);
      Eigen::MatrixXd Mp = eval_matrix(grad_rho_[static_cast<std::size_t>(a)], p);
      Eigen::MatrixXd Mm = eval_matrix(grad_alpha_[static_cast<std::size_t>(a)], p);
      Eigen::MatrixXd iH = iota_H_[static_cast<std::size_t>(a)].eval_matrix(p);
      const auto& ra = rho[static_cast<std::size_t>(a)];
      const auto& aa = alpha[static_cast<std::size_t>(a)];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          for (int l = 0; l < n; ++l) {
            Mp(i, j) -= G(l, i, j) * ra[l];
            Mm(i, j) -= G(l, i, j) * aa[l];
          }
          for (int b = 0; b < k; ++b) {
            const auto& rb = rho[static_cast<std::size_t>(b)];
            const auto& ab = alpha[static_cast<std::size_t>(b)];
            Mp(i, j) -= nabla(b, i) * rb[j] + phi(b, i) * ab[j];
            Mm(i, j) -= nabla(b, i) * ab[j] + phi(b, i) * rb[j];
          }
          Mm(i, j) -= 0.5 * iH(i, j);
        }
      sym = std::max(sym, (0.5 * (Mp + Mp.transpose())).cwiseAbs().maxCoeff());
      alt = std::max(alt, (0.5 * (Mm - Mm.transpose())).cwiseAbs().maxCoeff());
    }
    return {sym, alt};
  }

  CompatibilityReport check(const ConnectionTable& table) const {
    std::vector<std::pair<double, double>> res(table.points.size());
    parallel_for(table.points.size(), [&](std::size_t i) { res[i] = residual_at(table.points[i]); });
    CompatibilityReport r;
    for (const auto& [e1, e2] : res) {
      r.sym_max = std::max(r.sym_max, e1);
      r.alt_max = std::max(r.alt_max, e2);
    }
    return r;
  }

private:
  // entry i*n + j holds ∂_i w_j
  static std::vector<ScalarField> gradient(const TensorField& w) {
    std::vector<ScalarField> out;
    for (int i = 0; i < w.dim(); ++i)
      for (int j = 0; j < w.dim(); ++j) out.push_back(differentiate(w.at(j), i));
    return out;
  }

  Eigen::MatrixXd eval_matrix(const std::vector<ScalarField>& grad, const Point& p) const {
    const int n = frame_.dim();
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = grad[static_cast<std::size_t>(i * n + j)].eval(as_span(p));
    return m;
  }

  const DiracFrame& frame_;
  Christoffel gamma_;
  std::vector<TensorField> rho_bar_;
  std::vector<std::vector<ScalarField>> grad_rho_;
  std::vector<std::vector<ScalarField>> grad_alpha_;
  std::vector<TensorField> iota_H_;
};

inline CompatibilityReport check_compatibility(const DiracFrame& frame, const ConnectionTable& table) {
  return CompatibilityChecker(frame).check(table);
}

// ---------------------------------------------------------------------------

struct TransverseReport {
  double lemma_max_residual = 0.0;
  OracleReport oracle;
  std::optional<CompatibilityReport> compatibility;
  Verdict verdict = Verdict::inconclusive;
  Tolerances tolerances;
  ConnectionTable table;
  double omega_max_norm = 0.0;
  double continuity = 0.0;  // informational only
  bool design_rank_ok = true;
  std::string note;
};

inline Verdict decide(double lemma, double oracle, const Tolerances& tol) {
  if (lemma <= tol.pass && oracle <= tol.pass) return Verdict::transverse;
  if (lemma >= tol.fail && oracle >= tol.fail) return Verdict::not_transverse;
  return Verdict::inconclusive;
}

/// Runs the Lemma least-squares route and the bracket oracle at every point;
/// a transverse verdict also certifies the compatibility conditions with the solved ω±.
inline TransverseReport transverse_check(const DiracFrame& frame, std::span<const Point> points,
                                         const Tolerances& tol = {}) {
  TransverseReport r;
  r.tolerances = tol;
  LemmaTensor lemma = lemma_tensor(frame);
  r.table = solve_connections(frame, lemma, points);
  r.lemma_max_residual = r.table.max_residual();
  r.oracle = bracket_oracle(frame, points, &lemma);
  r.verdict = decide(r.lemma_max_residual, r.oracle.value(), tol);
  r.omega_max_norm = r.table.max_norm();
  r.continuity = r.table.continuity();
  r.design_rank_ok = r.table.rank_ok();
  if (r.verdict == Verdict::transverse) {
    r.compatibility = check_compatibility(frame, r.table);
    r.note = "V_D is a D-transverse generalized metric; the sigma model with target data (g, H) can be gauged along D";
  } else if (r.verdict == Verdict::not_transverse) {
    r.note = "V_D is not invariant under brackets with D; no connections satisfy the compatibility conditions";
  } else {
    r.note = "residuals fall between the pass and fail tolerances or the two routes disagree";
  }
  return r;
}

// ---------------------------------------------------------------------------
// V_D = D ⊕ (D⊥ ∩ V) at a point

struct VDBasis {
  Eigen::MatrixXd basis;  // 2n×n: e_a(p) then u₊ for u ∈ Ann(D₊)
  Eigen::Index rank = 0;
  double max_sandwich_violation = 0.0;  // max |⟨e_a, w⟩| over basis columns w
  double min_positivity = 0.0;          // min eigenvalue of the pairing on the u₊ block
  bool ok(double tol = 1e-10) const {
    return rank == basis.cols() && max_sandwich_violation <= tol && min_positivity > 0.0;
  }
};

inline VDBasis build_VD(const DiracFrame& frame, const Point& p) {
  PointFrameData pfd = point_frame(frame, p);
  const int n = frame.dim(), k = frame.rank();
  VDBasis out;
  out.basis.resize(2 * n, n);
  out.basis.leftCols(k) = pfd.D_mat;
  for (int c = 0; c < n - k; ++c) {
    Eigen::VectorXd u = pfd.ann_plus.col(c);
    out.basis.col(k + c) << u, pfd.g * u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.basis);
  const auto& s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > 1e-10 * s[0]) ++out.rank;
  if (out.rank < n) throw NumericalError("V_D has a rank defect at the point");
  const Eigen::MatrixXd eta = pairing_matrix(n);
  out.max_sandwich_violation = (pfd.D_mat.transpose() * eta * out.basis).cwiseAbs().maxCoeff();
  if (n > k) {
    Eigen::MatrixXd comp = out.basis.rightCols(n - k);
    Eigen::MatrixXd gram = comp.transpose() * eta * comp;
    out.min_positivity = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().minCoeff();
  } else {
    out.min_positivity = std::numeric_limits<double>::infinity();  // W = D, nothing to check
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quotient data for projectable D in adapted coordinates

struct QuotientSpec {
  std::vector<std::string> leaf_coords;    // coordinates along ρ(D)
  std::optional<TensorField> flattening_B;  // B with α_a + ι_{X_a} B = 0
};

enum class QuotientStatus { ok, not_projectable, not_flattened, not_basic };

inline std::string_view quotient_status_name(QuotientStatus s) {
  switch (s) {
    case QuotientStatus::ok: return "ok";
    case QuotientStatus::not_projectable: return "not_projectable";
    case QuotientStatus::not_flattened: return "not_flattened";
    case QuotientStatus::not_basic: return "not_basic";
  }
  return "?";
}

struct QuotientResult {
  QuotientStatus status = QuotientStatus::ok;
  std::optional<TensorField> h;         // degenerate metric with ker h = ρ(D)
  std::optional<TensorField> H_prime;   // H − dB
  std::optional<TensorField> g_Q;       // on the base chart
  std::optional<TensorField> H_Q;
  std::shared_ptr<const Chart> base_chart;
  double projectability = 0.0;      // min σ_k of the anchor matrix
  double flattening_defect = 0.0;   // max |α_a + ι_{X_a} B|
  double leaf_derivative = 0.0;     // max |∂_leaf h|, |∂_leaf H'|
  double iota_h = 0.0;              // max |ι_X h|
  double lie_h = 0.0;               // max |𝓛_X h|
  double iota_H = 0.0;              // max |ι_X H'|
  double lie_H = 0.0;               // max |𝓛_X H'|
  double pullback_defect = 0.0;     // h, H' at leaf-shifted points
  double basic_violation() const { return std::max({leaf_derivative, iota_h, lie_h, iota_H, lie_H}); }
  bool ok() const { return status == QuotientStatus::ok; }
};

namespace detail {

inline double max_abs(std::span<const ScalarField> comps, std::span<const Point> points) {
  double m = 0.0;
  for (const auto& p : points)
    for (const auto& c : comps) m = std::max(m, std::abs(c.eval(as_span(p))));
  return m;
}

}  // namespace detail

inline QuotientResult quotient_extract(const DiracFrame& frame, const QuotientSpec& spec, std::span<const Point> points,
                                       double tol = 1e-10) {
  QuotientResult r;
  const int n = frame.dim(), k = frame.rank();
  const auto& data = frame.data();
  const auto& chart_ptr = data.chart_ptr();

  r.projectability = check_projectability(frame, points).min_singular_value;
  if (r.projectability < kRegularityTol) {
    r.status = QuotientStatus::not_projectable;
    return r;
  }
  if (static_cast<int>(spec.leaf_coords.size()) != k)
    throw Error("adapted coordinates must name one leaf coordinate per generator");
  std::vector<int> leaf;
  for (const auto& name : spec.leaf_coords) leaf.push_back(data.chart().require_index(name));

  TensorField B = spec.flattening_B ? *spec.flattening_B : TensorField::zero(chart_ptr, Valence::twoform);
  CourantData flat = b_transform_data(B, data);
  std::vector<TensorField> X;
  for (const auto& e : frame.sections()) {
    GeneralizedSection moved = b_transform_section(B, e);
    r.flattening_defect = std::max(r.flattening_defect, detail::max_abs(moved.alpha().components(), points));
    X.push_back(e.X());
  }
  if (r.flattening_defect > tol) {
    r.status = QuotientStatus::not_flattened;
    return r;
  }

  // h = g − Σ_ab ι_{X_a}g ⊗ (G⁻¹)_ab ι_{X_b}g with G_ab = g(X_a, X_b)
  std::vector<TensorField> flatX;
  for (const auto& x : X) flatX.push_back(interior_product(x, data.g()));
  SymbolicMatrix G(static_cast<std::size_t>(k), std::vector<ScalarField>(static_cast<std::size_t>(k)));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      G[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = apply(flatX[static_cast<std::size_t>(a)], X[static_cast<std::size_t>(b)]);
  SymbolicMatrix Ginv = symbolic_inverse(G);
  TensorField h = TensorField::from_indices(chart_ptr, Valence::symbilinear, [&](std::span<const int> ij) {
    ScalarField acc = data.g().at(ij);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        acc -= flatX[static_cast<std::size_t>(a)].at(ij[0]) * Ginv[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] *
               flatX[static_cast<std::size_t>(b)].at(ij[1]);
    return acc;
  });
  const TensorField& Hp = flat.H();

  for (int l : leaf) {
    r.leaf_derivative = std::max(r.leaf_derivative, detail::max_abs(partial(h, l).components(), points));
    r.leaf_derivative = std::max(r.leaf_derivative, detail::max_abs(partial(Hp, l).components(), points));
  }
  for (const auto& x : X) {
    r.iota_h = std::max(r.iota_h, detail::max_abs(interior_product(x, h).components(), points));
    r.lie_h = std::max(r.lie_h, detail::max_abs(lie_derivative(x, h).components(), points));
    r.iota_H = std::max(r.iota_H, detail::max_abs(interior_product(x, Hp).components(), points));
    r.lie_H = std::max(r.lie_H, detail::max_abs(lie_derivative(x, Hp).components(), points));
  }
  // compare against the leaf coordinates reflected through the box centre
  for (const auto& p : points) {
    Point q = p;
    for (int l : leaf) {
      const auto& iv = data.chart().box()[static_cast<std::size_t>(l)];
      q[l] = iv.lo + iv.hi - p[l];
    }
    for (const TensorField* t : std::array<const TensorField*, 2>{&h, &Hp}) {
      DenseTensor a = t->eval_dense(p), b = t->eval_dense(q);
      for (std::size_t c = 0; c < a.data.size(); ++c)
        r.pullback_defect = std::max(r.pullback_defect, std::abs(a.data[c] - b.data[c]));
    }
  }
  r.h = simplify(h);
  r.H_prime = simplify(Hp);
  if (r.basic_violation() > tol) {
    r.status = QuotientStatus::not_basic;
    return r;
  }

  // restriction to the base coordinates, leaf coordinates frozen at the box centre
  std::vector<std::string> base_names;
  std::vector<Interval> base_box;
  std::vector<int> base_index;
  std::vector<ScalarField> replacement(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& iv = data.chart().box()[static_cast<std::size_t>(i)];
    if (std::find(leaf.begin(), leaf.end(), i) != leaf.end()) {
      replacement[static_cast<std::size_t>(i)] = ScalarField::constant(0.5 * (iv.lo + iv.hi));
    } else {
      replacement[static_cast<std::size_t>(i)] = ScalarField::variable(static_cast<int>(base_names.size()));
      base_names.push_back(data.chart().coords()[static_cast<std::size_t>(i)]);
      base_box.push_back(iv);
      base_index.push_back(i);
    }
  }
  r.base_chart = std::make_shared<const Chart>(base_names, base_box);
  auto restrict = [&](const TensorField& t, Valence v) {
    return TensorField::from_indices(r.base_chart, v, [&](std::span<const int> idx) {
      std::array<int, 4> full{};
      for (std::size_t a = 0; a < idx.size(); ++a) full[a] = base_index[static_cast<std::size_t>(idx[a])];
      return substitute(t.at(std::span<const int>(full.data(), idx.size())), replacement);
    });
  };
  r.g_Q = simplify(restrict(h, Valence::symbilinear));
  r.H_Q = simplify(restrict(Hp, Valence::threeform));
  return r;
}

}  // namespace tgm
