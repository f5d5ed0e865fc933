#include <gtest/gtest.h>

#include <random>

#include "common.hpp"

using namespace tgm;
using namespace tgm::testing;

namespace {

const std::vector<std::string> kXYZ{"x", "y", "z"};

double eval_at(const ScalarField& f, std::initializer_list<double> p) {
  std::vector<double> v(p);
  return f.eval(v);
}

std::vector<Point> random_points(int count, int dim, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Point> out;
  for (int i = 0; i < count; ++i) {
    Point p(dim);
    for (int j = 0; j < dim; ++j) p[j] = u(rng);
    out.push_back(p);
  }
  return out;
}

double max_component(const TensorField& t, std::span<const Point> pts) {
  double m = 0.0;
  for (const auto& p : pts)
    for (const auto& c : t.components()) m = std::max(m, std::abs(c.eval(as_span(p))));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parsing and evaluation

TEST(Parse, EvaluatesArithmeticAndFunctions) {
  Chart c(kXYZ);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("x^2 + sin(y)"), {2, 0, 5}), 4.0);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("exp(x)"), {0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("x^2+y^2"), {3, 4, 0}), 25.0);
  EXPECT_TRUE(c.parse("0").is_zero());
  EXPECT_EQ(eval_at(c.parse("0"), {1.5, -2, 7}), 0.0);
}

TEST(Parse, PrecedenceAndAssociativity) {
  Chart c(kXYZ);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("2^3^2"), {0, 0, 0}), 512.0);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("-x^2"), {3, 0, 0}), -9.0);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("x^-2"), {2, 0, 0}), 0.25);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("8/4/2"), {0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("1 - 2 - 3"), {0, 0, 0}), -4.0);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("2*(x + 1)*y"), {1, 3, 0}), 12.0);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("1.5e2 + 2E-1"), {0, 0, 0}), 150.2);
  EXPECT_NEAR(eval_at(c.parse("cos(pi)"), {0, 0, 0}), -1.0, 1e-15);
  EXPECT_NEAR(eval_at(c.parse("tanh(x) + sqrt(y) + log(z)"), {0, 4, 1}), 2.0, 1e-15);
}

TEST(Parse, UnknownSymbolIsReported) {
  Chart c({"x", "y"});
  try {
    c.parse("x*q");
    FAIL() << "expected UnknownSymbolError";
  } catch (const UnknownSymbolError& e) {
    EXPECT_EQ(e.symbol(), "q");
  }
  EXPECT_THROW(c.parse("frob(x)"), UnknownSymbolError);
}

TEST(Parse, SyntaxErrorsCarryOffsets) {
  Chart c(kXYZ);
  try {
    c.parse("x + * y");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(c.parse("sin(x"), ParseError);
  EXPECT_THROW(c.parse(""), ParseError);
  EXPECT_THROW(c.parse("x y"), ParseError);
  EXPECT_THROW(c.parse("2 +"), ParseError);
}

TEST(Eval, DomainErrors) {
  Chart c(kXYZ);
  EXPECT_THROW(eval_at(c.parse("1/x"), {0, 0, 0}), DomainError);
  EXPECT_THROW(eval_at(c.parse("log(x)"), {-1, 0, 0}), DomainError);
  EXPECT_THROW(eval_at(c.parse("sqrt(x)"), {-1, 0, 0}), DomainError);
  EXPECT_THROW(eval_at(c.parse("x^0.5"), {-1, 0, 0}), DomainError);
  EXPECT_THROW(eval_at(c.parse("exp(x)"), {1000, 0, 0}), DomainError);
  EXPECT_DOUBLE_EQ(eval_at(c.parse("x^3"), {-2, 0, 0}), -8.0);
}

TEST(Print, RoundTripsThroughTheParser) {
  Chart c(kXYZ);
  const std::vector<std::string> exprs{"x^2 + sin(y)",  "-(x - y)*z",       "x - (y - z)",  "x/(y*z)",
                                       "(x^2)^3",       "-x^2",             "2^-x",        "exp(-x*y)/(1 + z^2)",
                                       "x - -y",        "sqrt(1 + x^2)*-3", "(-2)^x",      "x^(y + 1)"};
  auto pts = random_points(20, 3, 0.2, 1.3, 7);
  for (const auto& s : exprs) {
    ScalarField f = c.parse(s);
    std::string printed = c.print(f);
    ScalarField g = c.parse(printed);
    EXPECT_EQ(c.print(g), printed) << s;
    for (const auto& p : pts) {
      double a = 0, b = 0;
      bool fa = false, fb = false;
      try { a = f.eval(as_span(p)); } catch (const DomainError&) { fa = true; }
      try { b = g.eval(as_span(p)); } catch (const DomainError&) { fb = true; }
      EXPECT_EQ(fa, fb) << s;
      if (!fa && !fb) EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a))) << s << " printed " << printed;
    }
  }
}

TEST(Print, MinimalParentheses) {
  Chart c(kXYZ);
  EXPECT_EQ(c.print(c.parse("(x*y)*z")), "x*y*z");
  EXPECT_EQ(c.print(c.parse("x*(y*z)")), "x*(y*z)");
  EXPECT_EQ(c.print(c.parse("(x + y)^2")), "(x + y)^2");
  EXPECT_EQ(c.print(c.parse("x^(y^z)")), "x^y^z");
}

// ---------------------------------------------------------------------------
// Symbolic differentiation

TEST(Differentiate, SimpleRules) {
  Chart c(kXYZ);
  ScalarField d = differentiate(c.parse("x^2*y"), 0);
  EXPECT_EQ(c.print(simplify(d)), "2*x*y");
  EXPECT_TRUE(differentiate(c.parse("sin(x)"), 2).is_zero());
}

TEST(Differentiate, MatchesFiniteDifferences) {
  Chart c(kXYZ);
  const std::vector<std::string> exprs{"exp(x)*sin(y)", "x^y",          "log(1 + x^2 + y^2)", "tanh(x*z)/(2 + cos(y))",
                                       "sqrt(2 + x*y*z)", "(x + z)^-3", "2^(x*y)",           "sin(x)^2 + cos(x)^2"};
  auto pts = random_points(100, 3, 0.3, 1.2, 11);
  const double h = 1e-5;
  for (const auto& s : exprs) {
    ScalarField f = c.parse(s);
    for (int var = 0; var < 3; ++var) {
      ScalarField df = differentiate(f, var);
      for (const auto& p : pts) {
        Point up = p, down = p;
        up[var] += h;
        down[var] -= h;
        double fd = (f.eval(as_span(up)) - f.eval(as_span(down))) / (2 * h);
        double sym = df.eval(as_span(p));
        EXPECT_LE(std::abs(sym - fd), 1e-6 * std::max(1.0, std::abs(fd))) << s << " d/d" << kXYZ[static_cast<std::size_t>(var)];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Normal form

TEST(Simplify, CancelsPolynomialTerms) {
  Chart c(kXYZ);
  EXPECT_EQ(c.print(simplify(c.parse("1 + x^2 - -x*-x"))), "1");
  EXPECT_EQ(c.print(simplify(c.parse("(x + 1)^2 - x^2 - 2*x"))), "1");
  EXPECT_EQ(c.print(simplify(c.parse("x*y/x"))), "y");
  EXPECT_EQ(c.print(simplify(c.parse("sin(x)*2 - 2*sin(x)"))), "0");
  EXPECT_EQ(c.print(simplify(c.parse("(1 + x^2) - x*x"))), "1");
}

TEST(Simplify, PreservesValues) {
  Chart c(kXYZ);
  const std::vector<std::string> exprs{"(x + y)^3/(1 + z^2)", "exp(x - x)*y", "(x*y + 1)/(x*y + 1)^2 - z",
                                       "sqrt(x^2 + 1)*(x - y)^2", "x^1.5 - 2*x^-1", "(x - y)*(x + y) + y^2"};
  auto pts = random_points(30, 3, 0.2, 1.5, 3);
  for (const auto& s : exprs) {
    ScalarField f = c.parse(s), g = simplify(f);
    for (const auto& p : pts)
      EXPECT_NEAR(f.eval(as_span(p)), g.eval(as_span(p)), 1e-12 * std::max(1.0, std::abs(f.eval(as_span(p))))) << s;
  }
}

// ---------------------------------------------------------------------------
// Tensors and Cartan calculus

TEST(Tensor, ComponentCountIsChecked) {
  auto c = chart3();
  EXPECT_THROW(field(c, Valence::twoform, {"1", "2"}), ValenceError);
  EXPECT_THROW(field(c, Valence::symbilinear, {"1", "0", "0"}), ValenceError);
  EXPECT_NO_THROW(field(c, Valence::twoform, {"1", "2", "3"}));
}

TEST(Tensor, ChartsMustMatch) {
  auto a = chart3(), b = std::make_shared<const Chart>(std::vector<std::string>{"u", "v", "w"});
  EXPECT_THROW(vec(a, {"1", "0", "0"}) + vec(b, {"1", "0", "0"}), ChartMismatchError);
}

TEST(Tensor, FormsAreAntisymmetric) {
  auto c = chart3();
  TensorField w = field(c, Valence::twoform, {"x", "y", "z"});  // xy, xz, yz
  Point p(3);
  p << 0.5, 0.25, 2.0;
  EXPECT_DOUBLE_EQ(w.at(1, 0).eval(as_span(p)), -0.5);
  EXPECT_TRUE(w.at(2, 2).is_zero());
}

TEST(ExteriorDerivative, Examples) {
  auto c = chart3();
  TensorField da = exterior_derivative(form1(c, {"0", "2*x", "0"}));
  EXPECT_DOUBLE_EQ(da.at(0, 1).eval(std::vector<double>{0.3, 0.1, 0.2}), 2.0);
  EXPECT_DOUBLE_EQ(da.at(1, 2).eval(std::vector<double>{0.3, 0.1, 0.2}), 0.0);
  TensorField vol = field(c, Valence::threeform, {"1"});
  TensorField dvol = exterior_derivative(vol);
  for (const auto& comp : dvol.components()) EXPECT_TRUE(comp.is_zero());
  TensorField f = field(c, Valence::scalar, {"x*y*z"});
  TensorField ddf = exterior_derivative(exterior_derivative(f));
  for (const auto& comp : ddf.components()) EXPECT_TRUE(simplify(comp).is_zero());
}

TEST(ExteriorDerivative, MatchesFiniteDifferences) {
  auto c = chart3();
  TensorField a = form1(c, {"sin(x*y)", "z*exp(x)", "x^2*y"});
  TensorField da = exterior_derivative(a);
  auto pts = random_points(50, 3, -1, 1, 5);
  const double h = 1e-5;
  for (const auto& p : pts)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        auto d = [&](int var, int comp) {
          Point up = p, down = p;
          up[var] += h;
          down[var] -= h;
          return (a.at(comp).eval(as_span(up)) - a.at(comp).eval(as_span(down))) / (2 * h);
        };
        EXPECT_NEAR(da.at(i, j).eval(as_span(p)), d(i, j) - d(j, i), 1e-8);
      }
}

TEST(ExteriorDerivative, SquaresToZero) {
  auto c3 = chart3();
  auto c4 = std::make_shared<const Chart>(std::vector<std::string>{"x", "y", "z", "w"});
  auto pts3 = random_points(100, 3, -1, 1, 2);
  auto pts4 = random_points(100, 4, -1, 1, 2);
  std::vector<TensorField> forms{
      field(c3, Valence::scalar, {"exp(x*y)*cos(z)"}),
      form1(c3, {"y*z^2", "sin(x + z)", "x/(2 + y^2)"}),
      field(c3, Valence::twoform, {"x*y", "z^3", "exp(y)"}),
      field(c4, Valence::oneform, {"w*x", "y^2*z", "sin(w)", "x*y*z"}),
      field(c4, Valence::twoform, {"x*w", "y", "z*x", "w^2", "sin(x)", "y*z"}),
      field(c4, Valence::scalar, {"x*y*exp(z*w)"}),
  };
  for (const auto& w : forms) {
    TensorField dd = exterior_derivative(exterior_derivative(w));
    EXPECT_LE(max_component(dd, w.dim() == 3 ? std::span<const Point>(pts3) : std::span<const Point>(pts4)), 1e-12)
        << valence_name(w.valence());
  }
}

TEST(InteriorProduct, Examples) {
  auto c = chart3();
  TensorField H = field(c, Valence::threeform, {"2"});
  TensorField r = interior_product(vec(c, {"0", "0", "1"}), H);
  std::vector<double> p{0.1, 0.2, 0.3};
  EXPECT_DOUBLE_EQ(r.at(0, 1).eval(p), 2.0);
  EXPECT_DOUBLE_EQ(r.at(0, 2).eval(p), 0.0);
  EXPECT_TRUE(interior_product(vec(c, {"1", "0", "0"}), form1(c, {"0", "1", "0"})).at().is_zero());

  auto pts = random_points(50, 3, -1, 1, 9);
  TensorField X = vec(c, {"y", "x*z", "1 + x^2"});
  TensorField w2 = field(c, Valence::twoform, {"x", "y*z", "exp(x)"});
  EXPECT_LE(max_component(interior_product(X, interior_product(X, w2)), pts), 1e-12);
  EXPECT_LE(max_component(interior_product(X, interior_product(X, H)), pts), 1e-12);
}

TEST(LieDerivative, KillingFields) {
  auto c = chart3();
  auto pts = random_points(100, 3, -1, 1, 4);
  EXPECT_LE(max_component(lie_derivative(vec(c, {"0", "0", "1"}), metric(c, {"1", "0", "0", "1 + x^2", "-x", "1"})), pts), 0.0);
  EXPECT_LE(max_component(lie_derivative(vec(c, {"-y", "x", "0"}), metric(c, {"1", "0", "0", "1", "0", "1"})), pts), 1e-15);
  EXPECT_LE(max_component(lie_derivative(vec(c, {"-y", "x", "0"}), metric(c, {"1", "0", "0", "1", "0", "1 + x^2 + y^2"})),
                          pts),
            1e-14);
}

TEST(LieDerivative, MetricMatchesCoordinateFormula) {
  auto c = chart3();
  TensorField X = vec(c, {"y*z", "sin(x)", "x^2 - y"});
  TensorField g = metric(c, {"2 + x^2", "x*y", "0.1*z", "1 + exp(y)", "0", "3 + sin(x*z)"});
  TensorField L = lie_derivative(X, g);
  auto pts = random_points(30, 3, -1, 1, 8);
  const double h = 1e-5;
  for (const auto& p : pts) {
    auto deriv = [&](const TensorField& t, int var) {
      Point up = p, down = p;
      up[var] += h;
      down[var] -= h;
      return Eigen::MatrixXd((t.eval_matrix(up) - t.eval_matrix(down)) / (2 * h));
    };
    Eigen::MatrixXd G = g.eval_matrix(p);
    Eigen::VectorXd Xv = X.eval_vector(p);
    Eigen::MatrixXd dX(3, 3);  // dX(i, k) = ∂_i X^k
    for (int i = 0; i < 3; ++i) {
      Point up = p, down = p;
      up[i] += h;
      down[i] -= h;
      dX.row(i) = ((X.eval_vector(up) - X.eval_vector(down)) / (2 * h)).transpose();
    }
    Eigen::MatrixXd expected = dX * G + (dX * G).transpose();
    for (int k = 0; k < 3; ++k) expected += Xv[k] * deriv(g, k);
    EXPECT_LE(max_abs_diff(L.eval_matrix(p), expected), 1e-8);
  }
}

TEST(LieDerivative, CartanFormula) {
  auto c = chart3();
  auto pts = random_points(100, 3, -1, 1, 6);
  TensorField X = vec(c, {"x*y", "exp(z)", "sin(x) + y"});
  std::vector<TensorField> forms{field(c, Valence::scalar, {"x*y*z^2"}), form1(c, {"y^2", "x*z", "cos(y)"}),
                                 field(c, Valence::twoform, {"z", "x*y", "exp(x)"}),
                                 field(c, Valence::threeform, {"x^2 + y"})};
  for (const auto& w : forms) {
    TensorField lhs = lie_derivative(X, w);
    TensorField dw = exterior_derivative(w);
    TensorField rhs = interior_product(X, dw);
    if (form_degree(w.valence()) > 0) rhs = rhs + exterior_derivative(interior_product(X, w));
    EXPECT_LE(max_component(lhs - rhs, pts), 1e-10) << valence_name(w.valence());
  }
}

TEST(LieBracket, AntisymmetryAndJacobi) {
  auto c = chart3();
  auto pts = random_points(50, 3, -1, 1, 10);
  TensorField X = vec(c, {"y", "x*z", "1"}), Y = vec(c, {"sin(z)", "x^2", "y*x"}), Z = vec(c, {"exp(x)", "0", "z*y"});
  EXPECT_LE(max_component(lie_bracket(X, Y) + lie_bracket(Y, X), pts), 1e-14);
  TensorField jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) + lie_bracket(Z, lie_bracket(X, Y));
  EXPECT_LE(max_component(jac, pts), 1e-12);
}

// ---------------------------------------------------------------------------
// Levi-Civita connection

TEST(Christoffel, FlatIsZero) {
  auto c = chart3();
  Christoffel G = christoffel(metric(c, {"1", "0", "0", "1", "0", "1"}));
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_TRUE(G.at(k, i, j).is_zero());
}

TEST(Christoffel, PolarCoordinates) {
  auto c = std::make_shared<const Chart>(std::vector<std::string>{"r", "t"}, std::vector<Interval>{{0.5, 2}, {0, 1}});
  Christoffel G = christoffel(field(c, Valence::symbilinear, {"1", "0", "r^2"}));
  std::vector<double> p{1.5, 0.3};
  EXPECT_NEAR(G.at(0, 1, 1).eval(p), -1.5, 1e-15);
  EXPECT_NEAR(G.at(1, 0, 1).eval(p), 1 / 1.5, 1e-15);
  EXPECT_NEAR(G.at(1, 1, 0).eval(p), 1 / 1.5, 1e-15);
  EXPECT_NEAR(G.at(0, 0, 0).eval(p), 0.0, 1e-15);
}

TEST(Christoffel, HeisenbergMetricity) {
  auto c = chart3();
  Christoffel G = christoffel(metric(c, {"1", "0", "0", "1 + x^2", "-x", "1"}));
  auto pts = sample_points(*c, 100, 42);
  double nonzero = 0.0;
  for (const auto& p : pts) {
    EXPECT_LE(metricity_defect(G, p), 1e-9);
    DenseTensor t = G.eval(p);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          EXPECT_DOUBLE_EQ(t(k, i, j), t(k, j, i));
          nonzero = std::max(nonzero, std::abs(t(k, i, j)));
        }
  }
  EXPECT_GT(nonzero, 0.1);
}

TEST(Christoffel, MetricityInFourDimensions) {
  auto c = std::make_shared<const Chart>(std::vector<std::string>{"a", "b", "c", "d"});
  TensorField g = field(c, Valence::symbilinear,
                        {"2 + a^2", "0.1*b", "0", "0.2*sin(c)", "1 + exp(a*d)", "0", "0.1", "3 + c*b", "0", "1 + d^2"});
  Christoffel G = christoffel(g);
  for (const auto& p : sample_points(*c, 40, 1)) EXPECT_LE(metricity_defect(G, p), 1e-9);
}

// ---------------------------------------------------------------------------
// Sampling

TEST(Sampling, DeterministicInBoxAndRespectsExclusion) {
  auto c = std::make_shared<Chart>(std::vector<std::string>{"x", "y"}, std::vector<Interval>{{-1, 1}, {-1, 1}});
  c->set_excluded(c->parse("x^2 + y^2 - 0.25"));
  auto a = sample_points(*c, 200, 5), b = sample_points(*c, 200, 5), other = sample_points(*c, 200, 6);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_TRUE(c->in_box(a[i]));
    EXPECT_GT(a[i][0] * a[i][0] + a[i][1] * a[i][1], 0.25);
  }
  EXPECT_NE(a[0], other[0]);
}

TEST(Chart, RejectsBadCoordinates) {
  EXPECT_THROW(Chart({"x", "x"}), Error);
  EXPECT_THROW(Chart({"sin"}), Error);
  EXPECT_THROW(Chart({"1x"}), Error);
  EXPECT_THROW(Chart({"x"}, {{1, 1}}), Error);
}
