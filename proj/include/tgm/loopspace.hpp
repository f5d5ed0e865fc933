#pragma once

// Discretized phase space T*LM of a sigma model on N lattice sites with
// spacing Δσ = 2π/N. A state is f(∂σ)_m = (Dx_m, p_m) where Dx is the central
// difference. Elementary brackets:
//
//   {x_m^i, p_{m',j}} = δ^i_j δ_{mm'} / Δσ
//   {p_{m,i}, p_{m',j}} = −H_ijk(x_m) Dx_m^k δ_{mm'} / Δσ
//
// With these conventions the smeared currents satisfy
//   {μ(s₁φ₁), μ(s₂φ₂)} = −μ([s₁,s₂] φ₁φ₂) − ∫ ⟨s₁,s₂⟩ φ₁' φ₂ dσ
// in the continuum limit, [·,·] being the Dorfman bracket.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tgm/transverse.hpp"

namespace tgm {

struct LoopState {
  Eigen::MatrixXd x;  // N×n positions
  Eigen::MatrixXd p;  // N×n momenta

  int sites() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  double delta_sigma() const { return 2.0 * std::numbers::pi / sites(); }
  double sigma(int m) const { return m * delta_sigma(); }
  int wrap(int m) const { return ((m % sites()) + sites()) % sites(); }

  Point position(int m) const { return x.row(wrap(m)).transpose(); }
  Eigen::VectorXd momentum(int m) const { return p.row(wrap(m)).transpose(); }

  /// (x_{m+1} − x_{m−1}) / (2Δσ)
  Eigen::VectorXd velocity(int m) const {
    return (x.row(wrap(m + 1)) - x.row(wrap(m - 1))).transpose() / (2.0 * delta_sigma());
  }

  /// f(∂σ)_m = (Dx_m, p_m) ∈ ℝ²ⁿ
  Eigen::VectorXd f(int m) const {
    Eigen::VectorXd out(2 * dim());
    out << velocity(m), momentum(m);
    return out;
  }
};

struct LoopGradient {
  Eigen::MatrixXd dx;  // ∂F/∂x_m^i
  Eigen::MatrixXd dp;  // ∂F/∂p_{m,i}
};

/// A differentiable function on loop states; `gradient` is optional and
/// falls back to central finite differences.
struct LoopFunctional {
  std::function<double(const LoopState&)> value;
  std::function<LoopGradient(const LoopState&)> gradient;
};

inline constexpr double kGradientStep = 1e-6;

inline LoopGradient fd_gradient(const LoopFunctional& F, const LoopState& L, double step = kGradientStep) {
  LoopGradient g{Eigen::MatrixXd::Zero(L.sites(), L.dim()), Eigen::MatrixXd::Zero(L.sites(), L.dim())};
  LoopState work = L;
  for (int m = 0; m < L.sites(); ++m)
    for (int i = 0; i < L.dim(); ++i) {
      double saved = work.x(m, i);
      work.x(m, i) = saved + step;
      double up = F.value(work);
      work.x(m, i) = saved - step;
      double down = F.value(work);
      work.x(m, i) = saved;
      g.dx(m, i) = (up - down) / (2.0 * step);

      saved = work.p(m, i);
      work.p(m, i) = saved + step;
      up = F.value(work);
      work.p(m, i) = saved - step;
      down = F.value(work);
      work.p(m, i) = saved;
      g.dp(m, i) = (up - down) / (2.0 * step);
    }
  return g;
}

inline LoopGradient gradient_of(const LoopFunctional& F, const LoopState& L) {
  LoopGradient g = F.gradient ? F.gradient(L) : fd_gradient(F, L);
  if (!g.dx.allFinite() || !g.dp.allFinite()) throw NumericalError("non-finite gradient");
  return g;
}

/// {F, G} at L; twist terms use H from `data`.
inline double poisson_bracket(const LoopGradient& dF, const LoopGradient& dG, const LoopState& L,
                              const CourantData& data) {
  const int N = L.sites(), n = L.dim();
  const double ds = L.delta_sigma();
  double canonical = ((dF.dx.array() * dG.dp.array()) - (dF.dp.array() * dG.dx.array())).sum() / ds;
  double twist = 0.0;
  bool flat = true;
  for (const auto& c : data.H().components())
    if (!c.is_zero()) flat = false;
  if (!flat) {
    for (int m = 0; m < N; ++m) {
      DenseTensor H = data.H().eval_dense(L.position(m));
      Eigen::VectorXd v = L.velocity(m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double c = 0.0;
          for (int k = 0; k < n; ++k) c -= H(i, j, k) * v[k];
          twist += dF.dp(m, i) * dG.dp(m, j) * c;
        }
    }
  }
  return canonical + twist / ds;
}

inline double poisson_bracket(const LoopFunctional& F, const LoopFunctional& G, const LoopState& L,
                              const CourantData& data) {
  return poisson_bracket(gradient_of(F, L), gradient_of(G, L), L, data);
}

namespace detail {

inline void require_in_chart(const Chart& chart, const LoopState& L) {
  for (int m = 0; m < L.sites(); ++m)
    if (!chart.in_box(L.position(m))) throw Error("loop site " + std::to_string(m) + " lies outside the chart box");
}

/// Gradient of Σ_m dens_m Δσ from per-site partials (∂_x, ∂_v, ∂_p) of the density.
inline LoopGradient assemble_local_gradient(const LoopState& L, const Eigen::MatrixXd& dens_x,
                                            const Eigen::MatrixXd& dens_v, const Eigen::MatrixXd& dens_p) {
  const int N = L.sites();
  const double ds = L.delta_sigma();
  LoopGradient g{ds * dens_x, ds * dens_p};
  for (int m = 0; m < N; ++m)
    g.dx.row(m) += 0.5 * (dens_v.row(L.wrap(m - 1)) - dens_v.row(L.wrap(m + 1)));
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hamiltonian of the generalized metric V

/// ½ Σ_m ⟨f_m, R_V f_m⟩ Δσ = ½ Σ_m (|Dx_m|²_g + |p_m|²_{g⁻¹}) Δσ
inline double hamiltonian_V(const LoopState& L, const CourantData& data) {
  detail::require_in_chart(data.chart(), L);
  double acc = 0.0;
  const int n = L.dim();
  for (int m = 0; m < L.sites(); ++m) {
    Eigen::MatrixXd g = eval_metric(data.g(), L.position(m));
    Eigen::VectorXd f = L.f(m);
    acc += f.dot(pairing_matrix(n) * reflect_V_at(f, g));
  }
  return 0.5 * acc * L.delta_sigma();
}

inline LoopFunctional hamiltonian_V_functional(const CourantData& data) {
  return {[data](const LoopState& L) { return hamiltonian_V(L, data); }, {}};
}

// ---------------------------------------------------------------------------
// Smeared currents μ(sφ) = Σ_m φ(σ_m) ⟨s(x_m), f_m⟩ Δσ

struct SmearedCurrent {
  GeneralizedSection section;
  ScalarField testfn;  // in the single variable σ
};

inline std::shared_ptr<const Chart> sigma_chart() {
  static const auto chart =
      std::make_shared<const Chart>(std::vector<std::string>{"sigma"}, std::vector<Interval>{{0.0, 2.0 * std::numbers::pi}});
  return chart;
}

inline ScalarField parse_testfn(std::string_view text) { return sigma_chart()->parse(text); }

inline double eval_sigma(const ScalarField& f, double sigma) { return f.eval(std::span<const double>(&sigma, 1)); }

inline double current(const SmearedCurrent& c, const LoopState& L) {
  double acc = 0.0;
  for (int m = 0; m < L.sites(); ++m) {
    Point x = L.position(m);
    acc += eval_sigma(c.testfn, L.sigma(m)) *
           (c.section.alpha().eval_vector(x).dot(L.velocity(m)) + c.section.X().eval_vector(x).dot(L.momentum(m)));
  }
  return acc * L.delta_sigma();
}

/// Current functional with its exact gradient.
inline LoopFunctional current_functional(const SmearedCurrent& c) {
  const int n = c.section.dim();
  std::vector<ScalarField> dalpha, dX;  // entry j*n + i = ∂_j (·)_i
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      dalpha.push_back(differentiate(c.section.alpha().at(i), j));
      dX.push_back(differentiate(c.section.X().at(i), j));
    }
  auto grad = [c, dalpha, dX, n](const LoopState& L) {
    const int N = L.sites();
    Eigen::MatrixXd gx(N, n), gv(N, n), gp(N, n);
    for (int m = 0; m < N; ++m) {
      Point x = L.position(m);
      const double phi = eval_sigma(c.testfn, L.sigma(m));
      Eigen::VectorXd v = L.velocity(m), p = L.momentum(m);
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          acc += dalpha[static_cast<std::size_t>(j * n + i)].eval(as_span(x)) * v[i] +
                 dX[static_cast<std::size_t>(j * n + i)].eval(as_span(x)) * p[i];
        gx(m, j) = phi * acc;
      }
      gv.row(m) = phi * c.section.alpha().eval_vector(x).transpose();
      gp.row(m) = phi * c.section.X().eval_vector(x).transpose();
    }
    return detail::assemble_local_gradient(L, gx, gv, gp);
  };
  return {[c](const LoopState& L) { return current(c, L); }, grad};
}

// ---------------------------------------------------------------------------
// Constraint surface f: TS¹ → D⊥

/// Positions x_loop(σ_m) and momenta solving ⟨(Dx_m, p_m), e_a(x_m)⟩ = 0:
/// the least-norm particular solution plus a smooth seeded homogeneous part.
inline LoopState constraint_state(const DiracFrame& frame, std::span<const ScalarField> x_loop, int N,
                                  std::uint64_t seed, double homogeneous_amplitude = 0.5) {
  const int n = frame.dim(), k = frame.rank();
  if (static_cast<int>(x_loop.size()) != n) throw Error("loop needs one expression per coordinate");
  if (N < 4) throw Error("need at least 4 lattice sites");
  LoopState L{Eigen::MatrixXd(N, n), Eigen::MatrixXd::Zero(N, n)};
  for (int m = 0; m < N; ++m)
    for (int i = 0; i < n; ++i) L.x(m, i) = eval_sigma(x_loop[static_cast<std::size_t>(i)], L.sigma(m));
  detail::require_in_chart(frame.chart(), L);

  // smooth random homogeneous seed: Σ_{q=0..2} a_q cos qσ + b_q sin qσ per component
  constexpr int kModes = 3;
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd a(kModes, n), b(kModes, n);
  for (int q = 0; q < kModes; ++q)
    for (int i = 0; i < n; ++i) {
      a(q, i) = homogeneous_amplitude * (2.0 * detail::unit_double(rng) - 1.0);
      b(q, i) = homogeneous_amplitude * (2.0 * detail::unit_double(rng) - 1.0);
    }

  for (int m = 0; m < N; ++m) {
    Point x = L.position(m);
    Eigen::MatrixXd D = frame.eval(x);
    Eigen::MatrixXd A = D.topRows(n).transpose();  // rows X_a
    Eigen::VectorXd rhs = -(D.bottomRows(n).transpose() * L.velocity(m));
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    Eigen::VectorXd particular = cod.solve(rhs);
    if ((A * particular - rhs).norm() > 1e-10)
      throw NumericalError("inconsistent constraints at loop site " + std::to_string(m));
    Eigen::VectorXd seed_vec = Eigen::VectorXd::Zero(n);
    const double s = L.sigma(m);
    for (int q = 0; q < kModes; ++q) seed_vec += a.row(q).transpose() * std::cos(q * s) + b.row(q).transpose() * std::sin(q * s);
    Eigen::MatrixXd nullA = null_space(A);
    Eigen::VectorXd p = particular + nullA * (nullA.transpose() * seed_vec);
    L.p.row(m) = p.transpose();
  }
  (void)k;
  return L;
}

/// max over sites and generators of |⟨f_m, e_a(x_m)⟩|
inline double constraint_residual(const DiracFrame& frame, const LoopState& L) {
  const Eigen::MatrixXd eta = pairing_matrix(frame.dim());
  double worst = 0.0;
  for (int m = 0; m < L.sites(); ++m)
    worst = std::max(worst, (frame.eval(L.position(m)).transpose() * eta * L.f(m)).cwiseAbs().maxCoeff());
  return worst;
}

// ---------------------------------------------------------------------------
// Hamiltonian on the reduced phase space

enum class Extension { generalized_metric, euclidean };

/// Pointwise quadratic form Q with density ½ fᵀ Q f:
///  (i) project f onto D⊥ (G_V- or Euclidean-orthogonally),
///  (ii) represent D⊥/D by the G_V-orthocomplement C of D in D⊥,
///  (iii) W/D ≅ span{u₊ : u ∈ Ann(D₊)} projected to C,
///  (iv) R_W fixes W/D and negates its pairing-orthocomplement in C.
struct ReducedForm {
  Eigen::MatrixXd Q;
  double min_W_positivity = 0.0;  // smallest eigenvalue of the pairing on W/D
  bool degenerate = false;
};

inline ReducedForm reduced_form(const DiracFrame& frame, const Point& x, Extension ext) {
  const int n = frame.dim(), k = frame.rank();
  const Eigen::MatrixXd eta = pairing_matrix(n);
  PointFrameData pfd = point_frame(frame, x);
  const Eigen::MatrixXd G = generalized_metric_matrix(pfd.g);
  const Eigen::MatrixXd& D = pfd.D_mat;

  auto g_projector = [&](const Eigen::MatrixXd& basis) -> Eigen::MatrixXd {
    if (basis.cols() == 0) return Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Eigen::MatrixXd gram = basis.transpose() * G * basis;
    return basis * gram.ldlt().solve(basis.transpose() * G);
  };

  Eigen::MatrixXd perp = null_space(D.transpose() * eta);  // D⊥, orthonormal
  Eigen::MatrixXd to_perp = ext == Extension::generalized_metric ? g_projector(perp)
                                                                  : Eigen::MatrixXd(perp * perp.transpose());
  Eigen::MatrixXd C = perp * null_space(D.transpose() * G * perp);
  Eigen::MatrixXd to_C = g_projector(C);

  Eigen::MatrixXd vplus(2 * n, n - k);
  for (int c = 0; c < n - k; ++c) vplus.col(c) << pfd.ann_plus.col(c), pfd.g * pfd.ann_plus.col(c);
  Eigen::MatrixXd Wq = to_C * vplus;
  Eigen::MatrixXd Nq = C * null_space(Wq.transpose() * eta * C);

  ReducedForm out;
  if (n > k) {
    Eigen::MatrixXd gram = Wq.transpose() * eta * Wq;
    out.min_W_positivity = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (gram + gram.transpose())).eigenvalues().minCoeff();
  } else {
    out.min_W_positivity = std::numeric_limits<double>::infinity();
  }
  Eigen::MatrixXd basis(2 * n, Wq.cols() + Nq.cols());
  basis << Wq, Nq;
  if (basis.cols() != C.cols() || out.min_W_positivity <= 1e-12) out.degenerate = true;
  if (basis.cols() != C.cols()) {
    out.Q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    return out;
  }
  Eigen::VectorXd signs(basis.cols());
  signs << Eigen::VectorXd::Ones(Wq.cols()), -Eigen::VectorXd::Ones(Nq.cols());
  Eigen::MatrixXd RW = basis * signs.asDiagonal() * basis.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::MatrixXd P = to_C * to_perp;
  Eigen::MatrixXd Q = P.transpose() * eta * RW * P;
  out.Q = 0.5 * (Q + Q.transpose());
  return out;
}

inline double hamiltonian_W(const LoopState& L, const DiracFrame& frame, Extension ext = Extension::generalized_metric) {
  detail::require_in_chart(frame.chart(), L);
  double acc = 0.0;
  for (int m = 0; m < L.sites(); ++m) {
    ReducedForm rf = reduced_form(frame, L.position(m), ext);
    if (rf.degenerate) throw NumericalError("W/D is degenerate at loop site " + std::to_string(m));
    Eigen::VectorXd f = L.f(m);
    acc += f.dot(rf.Q * f);
  }
  return 0.5 * acc * L.delta_sigma();
}

inline constexpr double kPositionStep = 1e-5;

/// 𝓗_W with its gradient: exact in (Dx, p), central differences of Q in x.
inline LoopFunctional hamiltonian_W_functional(const DiracFrame& frame, Extension ext = Extension::generalized_metric) {
  auto grad = [&frame, ext](const LoopState& L) {
    detail::require_in_chart(frame.chart(), L);
    const int N = L.sites(), n = L.dim();
    Eigen::MatrixXd gx(N, n), gv(N, n), gp(N, n);
    for (int m = 0; m < N; ++m) {
      Point x = L.position(m);
      Eigen::VectorXd f = L.f(m);
      Eigen::VectorXd Qf = reduced_form(frame, x, ext).Q * f;
      gv.row(m) = Qf.head(n).transpose();
      gp.row(m) = Qf.tail(n).transpose();
      for (int i = 0; i < n; ++i) {
        Point up = x, down = x;
        up[i] += kPositionStep;
        down[i] -= kPositionStep;
        Eigen::MatrixXd dQ = (reduced_form(frame, up, ext).Q - reduced_form(frame, down, ext).Q) / (2.0 * kPositionStep);
        gx(m, i) = 0.5 * f.dot(dQ * f);
      }
    }
    return detail::assemble_local_gradient(L, gx, gv, gp);
  };
  return {[&frame, ext](const LoopState& L) { return hamiltonian_W(L, frame, ext); }, grad};
}

// ---------------------------------------------------------------------------
// Studies

inline double observed_order(double coarse, double fine, int n_coarse, int n_fine) {
  if (coarse <= 0.0 || fine <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(coarse / fine) / std::log(static_cast<double>(n_fine) / n_coarse);
}

struct GaugeRow {
  int N = 0;
  double max_bracket = 0.0;             // max |{μ(sφ), 𝓗_W}|
  double extension_disagreement = 0.0;  // max |b_GV − b_Euclid|
  double constraint_residual = 0.0;
  double H_V = 0.0;
  double H_W = 0.0;
  std::vector<double> brackets;         // per (generator, test function)
};

struct GaugeStudy {
  std::vector<GaugeRow> rows;
  std::vector<double> orders;  // between consecutive rows
};

inline std::vector<ScalarField> default_testfns() {
  return {parse_testfn("1"), parse_testfn("cos(sigma)"), parse_testfn("sin(sigma)")};
}

inline GaugeStudy gauge_invariance_study(const DiracFrame& frame, std::span<const ScalarField> x_loop,
                                         std::span<const int> N_list, std::uint64_t seed,
                                         std::span<const ScalarField> testfns) {
  GaugeStudy study;
  LoopFunctional HW = hamiltonian_W_functional(frame, Extension::generalized_metric);
  LoopFunctional HW_euclid = hamiltonian_W_functional(frame, Extension::euclidean);
  for (int N : N_list) {
    LoopState L = constraint_state(frame, x_loop, N, seed);
    GaugeRow row;
    row.N = N;
    row.constraint_residual = constraint_residual(frame, L);
    row.H_V = hamiltonian_V(L, frame.data());
    row.H_W = HW.value(L);
    LoopGradient dH = gradient_of(HW, L);
    LoopGradient dHe = gradient_of(HW_euclid, L);
    for (const auto& s : frame.sections())
      for (const auto& phi : testfns) {
        LoopGradient dmu = gradient_of(current_functional({s, phi}), L);
        double b = poisson_bracket(dmu, dH, L, frame.data());
        double be = poisson_bracket(dmu, dHe, L, frame.data());
        row.brackets.push_back(b);
        row.max_bracket = std::max(row.max_bracket, std::abs(b));
        row.extension_disagreement = std::max(row.extension_disagreement, std::abs(b - be));
      }
    study.rows.push_back(std::move(row));
  }
  for (std::size_t r = 1; r < study.rows.size(); ++r)
    study.orders.push_back(observed_order(study.rows[r - 1].max_bracket, study.rows[r].max_bracket,
                                          study.rows[r - 1].N, study.rows[r].N));
  return study;
}

struct ClosureEntry {
  int a = 0, b = 0;
  double bracket = 0.0;   // {μ(s_a φ₁), μ(s_b φ₂)}
  double expected = 0.0;  // −μ([s_a,s_b] φ₁φ₂) + anomaly
  double anomaly = 0.0;   // −Σ ⟨s_a,s_b⟩ φ₁' φ₂ Δσ
  double residual() const { return std::abs(bracket - expected); }
};

/// Current-algebra closure for one pair of sections at state L.
inline ClosureEntry closure_entry(const GeneralizedSection& s1, const GeneralizedSection& s2, const ScalarField& phi1,
                                  const ScalarField& phi2, const LoopState& L, const CourantData& data) {
  ClosureEntry e;
  e.bracket = poisson_bracket(current_functional({s1, phi1}), current_functional({s2, phi2}), L, data);
  SmearedCurrent product{dorfman(s1, s2, data), phi1 * phi2};
  ScalarField phi1_prime = differentiate(phi1, 0);
  ScalarField density = pairing(s1, s2);
  double anomaly = 0.0;
  for (int m = 0; m < L.sites(); ++m)
    anomaly -= density.eval(as_span(L.position(m))) * eval_sigma(phi1_prime, L.sigma(m)) * eval_sigma(phi2, L.sigma(m));
  e.anomaly = anomaly * L.delta_sigma();
  e.expected = -current(product, L) + e.anomaly;
  return e;
}

struct ClosureRow {
  int N = 0;
  std::vector<ClosureEntry> pairs;  // generator pairs (a, b)
  ClosureEntry control;             // (∂_1, 0), (0, dx^1) on flat data
  double max_residual() const {
    double m = 0.0;
    for (const auto& p : pairs) m = std::max(m, p.residual());
    return m;
  }
  double max_anomaly() const {
    double m = 0.0;
    for (const auto& p : pairs) m = std::max(m, std::abs(p.anomaly));
    return m;
  }
};

struct ClosureStudy {
  std::vector<ClosureRow> rows;
  std::vector<double> orders;          // Dirac pairs
  std::vector<double> control_orders;  // control pair residual
};

inline CourantData flat_data(const TensorField::ChartPtr& chart) {
  TensorField g = TensorField::from_indices(chart, Valence::symbilinear, [](std::span<const int> ij) {
    return ScalarField::constant(ij[0] == ij[1] ? 1.0 : 0.0);
  });
  return {g, TensorField::zero(chart, Valence::threeform)};
}

inline ClosureStudy closure_study(const DiracFrame& frame, std::span<const ScalarField> x_loop,
                                  std::span<const int> N_list, std::uint64_t seed) {
  ClosureStudy study;
  const ScalarField phi1 = parse_testfn("cos(sigma)"), phi2 = parse_testfn("sin(sigma)");
  const auto& chart = frame.data().chart_ptr();
  CourantData flat = flat_data(chart);
  std::vector<ScalarField> e1(static_cast<std::size_t>(frame.dim()));
  e1[0] = ScalarField::constant(1.0);
  GeneralizedSection c1 = GeneralizedSection::vector(TensorField(chart, Valence::vector, e1));
  GeneralizedSection c2 = GeneralizedSection::form(TensorField(chart, Valence::oneform, e1));
  for (int N : N_list) {
    LoopState L = constraint_state(frame, x_loop, N, seed);
    ClosureRow row;
    row.N = N;
    for (int a = 0; a < frame.rank(); ++a)
      for (int b = 0; b < frame.rank(); ++b) {
        ClosureEntry e = closure_entry(frame.section(a), frame.section(b), phi1, phi2, L, frame.data());
        e.a = a;
        e.b = b;
        row.pairs.push_back(e);
      }
    row.control = closure_entry(c1, c2, phi1, phi2, L, flat);
    study.rows.push_back(std::move(row));
  }
  for (std::size_t r = 1; r < study.rows.size(); ++r) {
    const auto& c = study.rows[r - 1];
    const auto& f = study.rows[r];
    study.orders.push_back(observed_order(c.max_residual(), f.max_residual(), c.N, f.N));
    study.control_orders.push_back(observed_order(c.control.residual(), f.control.residual(), c.N, f.N));
  }
  return study;
}

}  // namespace tgm
