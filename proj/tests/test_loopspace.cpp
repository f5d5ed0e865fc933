#include <gtest/gtest.h>

#include <numbers>

#include "common.hpp"

using namespace tgm;
using namespace tgm::testing;

namespace {

constexpr double kPi = std::numbers::pi;

LoopState circle(int N, double momentum = 0.0) {
  LoopState L{Eigen::MatrixXd::Zero(N, 3), Eigen::MatrixXd::Zero(N, 3)};
  for (int m = 0; m < N; ++m) {
    L.x(m, 0) = std::cos(L.sigma(m));
    L.x(m, 1) = std::sin(L.sigma(m));
    L.p(m, 0) = momentum * std::cos(L.sigma(m));
  }
  return L;
}

LoopState constant_loop(int N, Eigen::Vector3d x, Eigen::Vector3d p) {
  LoopState L{Eigen::MatrixXd(N, 3), Eigen::MatrixXd(N, 3)};
  for (int m = 0; m < N; ++m) {
    L.x.row(m) = x.transpose();
    L.p.row(m) = p.transpose();
  }
  return L;
}

LoopState random_state(const Chart& chart, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  LoopState L{Eigen::MatrixXd(N, 3), Eigen::MatrixXd(N, 3)};
  for (int m = 0; m < N; ++m)
    for (int i = 0; i < 3; ++i) {
      const auto& box = chart.box()[static_cast<std::size_t>(i)];
      L.x(m, i) = 0.5 * (box.lo + box.hi) + 0.2 * (box.hi - box.lo) * std::sin(L.sigma(m) * (i + 1) + u(rng));
      L.p(m, i) = u(rng);
    }
  return L;
}

LoopFunctional coordinate(int m0, int i, bool momentum) {
  return {[=](const LoopState& L) { return momentum ? L.p(m0, i) : L.x(m0, i); },
          [=](const LoopState& L) {
            LoopGradient g{Eigen::MatrixXd::Zero(L.sites(), L.dim()), Eigen::MatrixXd::Zero(L.sites(), L.dim())};
            (momentum ? g.dp : g.dx)(m0, i) = 1.0;
            return g;
          }};
}

LoopFunctional product(LoopFunctional F, LoopFunctional G) {
  return {[=](const LoopState& L) { return F.value(L) * G.value(L); },
          [=](const LoopState& L) {
            LoopGradient a = gradient_of(F, L), b = gradient_of(G, L);
            double f = F.value(L), g = G.value(L);
            return LoopGradient{f * b.dx + g * a.dx, f * b.dp + g * a.dp};
          }};
}

double relative_gap(const LoopGradient& a, const LoopGradient& b) {
  double scale = std::max({a.dx.cwiseAbs().maxCoeff(), a.dp.cwiseAbs().maxCoeff(), 1e-300});
  return std::max((a.dx - b.dx).cwiseAbs().maxCoeff(), (a.dp - b.dp).cwiseAbs().maxCoeff()) / scale;
}

// non-isotropic pair with non-trivial Dorfman bracket on any 3D chart
std::pair<GeneralizedSection, GeneralizedSection> generic_pair(const ChartPtr& c) {
  return {section(c, {"y", "0.5", "1"}, {"0", "x", "0"}), section(c, {"z", "1", "0.2*x"}, {"y", "0", "1"})};
}

}  // namespace

TEST(HamiltonianV, CircleEnergy) {
  auto c = chart3({-2, 2}, {-2, 2});
  for (int N : {16, 64, 256}) {
    LoopState L = circle(N);
    double ds = L.delta_sigma();
    EXPECT_NEAR(hamiltonian_V(L, flat3(c)), kPi * std::pow(std::sin(ds) / ds, 2), 1e-12);
  }
  EXPECT_NEAR(hamiltonian_V(circle(1024), flat3(c)), kPi, 1e-4);
}

TEST(HamiltonianV, ConstantLoopAndDiagonalMetric) {
  auto c = chart3();
  LoopState L = constant_loop(32, {0.1, 0.2, 0.3}, {1.0, -2.0, 0.5});
  EXPECT_NEAR(hamiltonian_V(L, flat3(c)), 0.5 * 5.25 * 2 * kPi, 1e-12);
  CourantData diag(metric(c, {"2", "0", "0", "3", "0", "4"}), H3(c, "0"));
  EXPECT_NEAR(hamiltonian_V(L, diag), 0.5 * (0.5 + 4.0 / 3 + 0.25 / 4) * 2 * kPi, 1e-12);
}

TEST(HamiltonianV, Positive) {
  DiracFrame f = s3();
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    EXPECT_GT(hamiltonian_V(random_state(f.chart(), 32, seed), f.data()), 0.0);
}

TEST(HamiltonianV, OutsideChartIsRejected) {
  auto c = chart3();
  EXPECT_THROW(hamiltonian_V(constant_loop(8, {5, 0, 0}, {0, 0, 0}), flat3(c)), Error);
}

TEST(Current, Examples) {
  auto c = chart3({-2, 2}, {-2, 2});
  LoopState L = circle(64, 1.0);
  // ⟨(∂x, 0), (Dx, p)⟩ = p_x = cos σ
  SmearedCurrent jx{GeneralizedSection::vector(vec(c, {"1", "0", "0"})), parse_testfn("cos(sigma)")};
  EXPECT_NEAR(current(jx, L), kPi, 1e-12);
  // Σ (x_{m+1} − x_{m−1})/2 telescopes
  SmearedCurrent dx{GeneralizedSection::form(form1(c, {"1", "0", "0"})), parse_testfn("1")};
  EXPECT_NEAR(current(dx, L), 0.0, 1e-14);
  // Dy = cos σ · sin(Δσ)/Δσ
  SmearedCurrent dy{GeneralizedSection::form(form1(c, {"0", "1", "0"})), parse_testfn("cos(sigma)")};
  double ds = L.delta_sigma();
  EXPECT_NEAR(current(dy, L), kPi * std::sin(ds) / ds, 1e-12);
}

TEST(Poisson, CanonicalPairing) {
  auto c = chart3();
  LoopState L = constant_loop(16, {0, 0, 0}, {0, 0, 0});
  EXPECT_NEAR(poisson_bracket(coordinate(3, 1, false), coordinate(3, 1, true), L, flat3(c)), 1.0 / L.delta_sigma(),
              1e-12);
  EXPECT_EQ(poisson_bracket(coordinate(3, 1, false), coordinate(4, 1, true), L, flat3(c)), 0.0);
  EXPECT_EQ(poisson_bracket(coordinate(3, 1, false), coordinate(3, 0, true), L, flat3(c)), 0.0);
  EXPECT_EQ(poisson_bracket(coordinate(3, 1, false), coordinate(5, 2, false), L, flat3(c)), 0.0);
}

TEST(Poisson, AlgebraicIdentities) {
  DiracFrame f = s2();
  auto c = f.data().chart_ptr();
  LoopState L = random_state(f.chart(), 32, 7);
  auto [a, b] = generic_pair(c);
  LoopFunctional F = current_functional({a, parse_testfn("cos(sigma)")});
  LoopFunctional G = current_functional({b, parse_testfn("1 + sin(2*sigma)")});
  LoopFunctional K = hamiltonian_V_functional(f.data());
  const auto& d = f.data();
  EXPECT_NEAR(poisson_bracket(K, K, L, d), 0.0, 1e-9);
  EXPECT_NEAR(poisson_bracket(F, F, L, d), 0.0, 1e-12);
  double fg = poisson_bracket(F, G, L, d), gf = poisson_bracket(G, F, L, d);
  EXPECT_NEAR(fg, -gf, 1e-12 * std::max(1.0, std::abs(fg)));
  double lhs = poisson_bracket(F, product(G, F), L, d);
  double rhs = poisson_bracket(F, G, L, d) * F.value(L) + G.value(L) * poisson_bracket(F, F, L, d);
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST(Poisson, CommutingCurrents) {
  auto c = chart3();
  LoopState L = random_state(*c, 32, 3);
  LoopFunctional jx = current_functional({GeneralizedSection::vector(vec(c, {"1", "0", "0"})), parse_testfn("cos(sigma)")});
  LoopFunctional jy = current_functional({GeneralizedSection::vector(vec(c, {"0", "1", "0"})), parse_testfn("1")});
  EXPECT_EQ(poisson_bracket(jx, jy, L, flat3(c)), 0.0);
  // ι_{∂y}ι_{∂x}H = H_xyz dz pairs with Dz
  EXPECT_NE(poisson_bracket(jx, jy, L, flat3(c, "1")), 0.0);
}

TEST(Gradients, RegisteredMatchFiniteDifferences) {
  for (const auto& f : {s2(), s3(), s5()}) {
    LoopState L = constraint_state(f, loop({"0.8*cos(sigma)", "0.8*sin(sigma)", "0.3*sin(2*sigma)"}), 32, 42);
    for (const auto& s : f.sections()) {
      LoopFunctional mu = current_functional({s, parse_testfn("cos(sigma)")});
      EXPECT_LE(relative_gap(gradient_of(mu, L), fd_gradient(mu, L)), 1e-5);
    }
    LoopFunctional HW = hamiltonian_W_functional(f);
    EXPECT_LE(relative_gap(gradient_of(HW, L), fd_gradient(HW, L)), 1e-5);
  }
}

TEST(ConstraintSurface, Examples) {
  auto x_loop = loop({"cos(sigma)", "sin(sigma)", "0"});
  LoopState L1 = constraint_state(s1(), x_loop, 64, 42);
  EXPECT_LE(L1.p.col(2).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(constraint_residual(s1(), L1), 1e-12);
  EXPECT_GT(L1.p.leftCols(2).cwiseAbs().maxCoeff(), 0.0);

  LoopState L2 = constraint_state(s2(), x_loop, 64, 42);
  for (int m = 0; m < 64; ++m) EXPECT_NEAR(L2.p(m, 2), -2.0 * L2.x(m, 0) * L2.velocity(m)(1), 1e-12);
  EXPECT_LE(constraint_residual(s2(), L2), 1e-12);

  LoopState Lc = constraint_state(s1(), loop({"0.3", "0.2", "0.1"}), 16, 1, 0.0);
  EXPECT_EQ(Lc.p.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(constraint_state(s1(), loop({"0", "0"}), 16, 1), Error);
  EXPECT_THROW(constraint_state(s1(), x_loop, 2, 1), Error);
}

TEST(ConstraintSurface, SeedIsDeterministic) {
  auto x_loop = loop({"cos(sigma)", "sin(sigma)", "0"});
  LoopState a = constraint_state(s2(), x_loop, 32, 9), b = constraint_state(s2(), x_loop, 32, 9);
  EXPECT_EQ(a.p, b.p);
  EXPECT_NE(a.p, constraint_state(s2(), x_loop, 32, 10).p);
}

TEST(HamiltonianW, FlatScenarioIsPlanarEnergy) {
  LoopState L = constraint_state(s1(), loop({"cos(sigma)", "sin(sigma)", "0.2*sin(sigma)"}), 64, 42);
  double expected = 0.0;
  for (int m = 0; m < L.sites(); ++m)
    expected += L.velocity(m).head(2).squaredNorm() + L.momentum(m).head(2).squaredNorm();
  expected *= 0.5 * L.delta_sigma();
  EXPECT_NEAR(hamiltonian_W(L, s1()), expected, 1e-12);
  EXPECT_NEAR(hamiltonian_W(L, s1(), Extension::euclidean), expected, 1e-12);

  LoopState Lc = constant_loop(16, {0.1, 0.2, 0.3}, {1.0, 2.0, 0.0});
  EXPECT_NEAR(hamiltonian_W(Lc, s1()), 0.5 * 5.0 * 2 * kPi, 1e-12);
}

TEST(HamiltonianW, ReducedFormKillsD) {
  for (const auto& f : {s1(), s2(), s3(), s4(), s5()}) {
    for (const auto& p : sample_points(f.chart(), 10, 4)) {
      for (auto ext : {Extension::generalized_metric, Extension::euclidean}) {
        ReducedForm r = reduced_form(f, p, ext);
        EXPECT_FALSE(r.degenerate);
        EXPECT_LE((r.Q * f.eval(p)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE(max_abs_diff(r.Q, r.Q.transpose()), 1e-12);
      }
    }
  }
}

TEST(GaugeStudy, ScenarioBehaviour) {
  std::vector<int> Ns{64, 128, 256};
  auto x_loop = loop({"cos(sigma)", "sin(sigma)", "0"});
  GaugeStudy g1 = gauge_invariance_study(s1(), x_loop, Ns, 42, default_testfns());
  for (const auto& row : g1.rows) EXPECT_LE(row.max_bracket, 1e-8);

  GaugeStudy g2 = gauge_invariance_study(s2(), x_loop, Ns, 42, default_testfns());
  for (double o : g2.orders) EXPECT_GE(o, 1.0);
  for (const auto& row : g2.rows) {
    EXPECT_LE(row.extension_disagreement, 1e-8);
    EXPECT_LE(row.constraint_residual, 1e-12);
  }

  auto x4 = loop({"0.5 + 0.4*cos(sigma)", "0.4*sin(sigma)", "0.3*sin(2*sigma)"});
  GaugeStudy g4 = gauge_invariance_study(s4(), x4, Ns, 42, default_testfns());
  EXPECT_GE(g4.rows.back().max_bracket, 10 * g2.rows.back().max_bracket);
  EXPECT_GT(g4.rows.back().max_bracket, 0.1);
}

TEST(Closure, GenericPairConverges) {
  DiracFrame f = s2();
  auto [a, b] = generic_pair(f.data().chart_ptr());
  auto x_loop = loop({"cos(sigma)", "sin(sigma)", "0.3*sin(2*sigma)"});
  const ScalarField phi1 = parse_testfn("cos(sigma)"), phi2 = parse_testfn("sin(sigma)");
  std::vector<double> res;
  std::vector<int> Ns{64, 128, 256};
  for (int N : Ns) {
    LoopState L = constraint_state(f, x_loop, N, 42);
    ClosureEntry e = closure_entry(a, b, phi1, phi2, L, f.data());
    EXPECT_NE(e.anomaly, 0.0);
    res.push_back(e.residual());
  }
  EXPECT_GT(res[0], 0.0);
  EXPECT_GE(observed_order(res[0], res[1], 64, 128), 1.0);
  EXPECT_GE(observed_order(res[1], res[2], 128, 256), 1.0);
}

TEST(Closure, ControlPairApproachesPi) {
  std::vector<int> Ns{64, 128, 256};
  ClosureStudy cs = closure_study(s1(), loop({"cos(sigma)", "sin(sigma)", "0"}), Ns, 42);
  for (const auto& row : cs.rows) {
    double ds = 2 * kPi / row.N;
    EXPECT_NEAR(row.control.expected, kPi, 1e-12);
    EXPECT_NEAR(row.control.bracket, kPi * std::sin(ds) / ds, 1e-12);
    EXPECT_GT(row.control.residual(), 0.0);
    EXPECT_LE(row.max_residual(), 1e-10);
    EXPECT_LE(row.max_anomaly(), 1e-10);
  }
  for (double o : cs.control_orders) EXPECT_NEAR(o, 2.0, 0.01);
}

TEST(Studies, ObservedOrder) {
  EXPECT_NEAR(observed_order(4.0, 1.0, 64, 128), 2.0, 1e-15);
  EXPECT_TRUE(std::isinf(observed_order(0.0, 0.0, 64, 128)));
}
