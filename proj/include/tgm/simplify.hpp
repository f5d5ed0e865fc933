#pragma once

// Polynomial normal form: expands an expression into a sum of monomials over
// opaque atoms (coordinates, function applications, non-polynomial powers and
// quotients by sums) so that cancellations such as 1 + x^2 - x*x → 1 happen.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tgm/tensor.hpp"

namespace tgm {

namespace detail {

class Normalizer {
public:
  // atom key → integer power, ordered by key
  using Monomial = std::vector<std::pair<std::string, int>>;
  using Poly = std::map<Monomial, double>;

  ScalarField run(const ScalarField& f) { return build(to_poly(f)); }

private:
  static constexpr int kMaxExpandPower = 8;
  static constexpr std::size_t kMaxTerms = 512;

  std::map<std::string, ScalarField> atoms_;

  static std::string var_key(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "\x01%06d", i);
    return buf;
  }

  std::string atom_key(const ScalarField& a) {
    std::vector<std::string> names;
    for (int i = 0; i <= a.max_variable(); ++i) names.push_back("v" + std::to_string(i));
    std::string key = "\x02" + to_string(a, names);
    atoms_.emplace(key, a);
    return key;
  }

  static Poly constant(double c) { return c == 0.0 ? Poly{} : Poly{{Monomial{}, c}}; }

  Poly atom(const ScalarField& a, int power = 1) {
    if (a.is_constant()) {
      auto r = expr::try_fold(expr::Op::pow, a.constant_value(), power);
      if (r) return constant(*r);
    }
    return Poly{{Monomial{{atom_key(a), power}}, 1.0}};
  }

  static void add_into(Poly& acc, const Poly& p, double scale) {
    for (const auto& [m, c] : p) {
      double& slot = acc[m];
      slot += scale * c;
      if (slot == 0.0) acc.erase(m);
    }
  }

  static Monomial mul_monomial(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
        out.push_back(a[i++]);
      } else if (i == a.size() || b[j].first < a[i].first) {
        out.push_back(b[j++]);
      } else {
        int p = a[i].second + b[j].second;
        if (p != 0) out.emplace_back(a[i].first, p);
        ++i;
        ++j;
      }
    }
    return out;
  }

  static Poly multiply(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a)
      for (const auto& [mb, cb] : b) add_into(out, Poly{{mul_monomial(ma, mb), ca * cb}}, 1.0);
    return out;
  }

  static std::optional<Poly> invert_monomial(const Poly& p) {
    if (p.size() != 1) return std::nullopt;
    const auto& [m, c] = *p.begin();
    if (c == 0.0) return std::nullopt;
    Monomial inv = m;
    for (auto& [key, power] : inv) power = -power;
    return Poly{{inv, 1.0 / c}};
  }

  Poly to_poly(const ScalarField& f) {
    using expr::Op;
    const expr::Node& n = f.node();
    auto child = [](const expr::NodePtr& p) { return ScalarField(p); };
    switch (n.op) {
      case Op::constant: return constant(n.value);
      case Op::variable: {
        atoms_.emplace(var_key(n.var), f);
        return Poly{{Monomial{{var_key(n.var), 1}}, 1.0}};
      }
      case Op::neg: {
        Poly out;
        add_into(out, to_poly(child(n.lhs)), -1.0);
        return out;
      }
      case Op::add:
      case Op::sub: {
        Poly out = to_poly(child(n.lhs));
        add_into(out, to_poly(child(n.rhs)), n.op == Op::add ? 1.0 : -1.0);
        return out;
      }
      case Op::mul: {
        Poly a = to_poly(child(n.lhs)), b = to_poly(child(n.rhs));
        if (a.size() * b.size() > kMaxTerms) return atom(build(a) * build(b));
        return multiply(a, b);
      }
      case Op::div: {
        Poly num = to_poly(child(n.lhs)), den = to_poly(child(n.rhs));
        if (den.empty()) return atom(build(num) / ScalarField::constant(0.0));
        if (auto inv = invert_monomial(den)) return multiply(num, *inv);
        return multiply(num, atom(build(den), -1));
      }
      case Op::pow: {
        Poly base = to_poly(child(n.lhs));
        ScalarField exponent = run(child(n.rhs));
        if (exponent.is_constant()) {
          double e = exponent.constant_value();
          if (e == std::floor(e) && std::abs(e) <= kMaxExpandPower) {
            const int k = static_cast<int>(e);
            if (k >= 0) {
              Poly out = constant(1.0);
              for (int i = 0; i < k; ++i) out = multiply(out, base);
              if (out.size() <= kMaxTerms) return out;
            } else if (auto inv = invert_monomial(base)) {
              Poly out = constant(1.0);
              for (int i = 0; i < -k; ++i) out = multiply(out, *inv);
              return out;
            } else {
              return atom(build(base), k);
            }
          }
        }
        return atom(pow(build(base), exponent));
      }
      default: return atom(apply(n.op, run(child(n.lhs))));
    }
  }

  ScalarField factor(const std::string& key, int power) const {
    const ScalarField& a = atoms_.at(key);
    return power == 1 ? a : pow(a, ScalarField::constant(power));
  }

  ScalarField build(const Poly& p) const {
    // lower total degree first, then by atom order
    std::vector<std::pair<const Monomial*, double>> terms;
    for (const auto& [m, c] : p) terms.emplace_back(&m, c);
    auto degree = [](const Monomial& m) {
      int d = 0;
      for (const auto& [k, e] : m) d += std::abs(e);
      return d;
    };
    std::stable_sort(terms.begin(), terms.end(),
                     [&](const auto& a, const auto& b) { return degree(*a.first) < degree(*b.first); });
    ScalarField out;
    bool first = true;
    for (const auto& [m, c] : terms) {
      ScalarField term = ScalarField::constant(std::abs(c)), denominator = ScalarField::constant(1.0);
      for (const auto& [key, power] : *m) {
        if (power > 0) term = term * factor(key, power);
        else denominator = denominator * factor(key, -power);
      }
      if (!denominator.node().is_constant(1.0)) term = term / denominator;
      if (first) out = c < 0.0 ? -term : term;
      else out = c < 0.0 ? out - term : out + term;
      first = false;
    }
    return out;
  }
};

}  // namespace detail

/// Expanded, cancelled form of f (equal to f wherever f is defined).
inline ScalarField simplify(const ScalarField& f) { return detail::Normalizer{}.run(f); }

inline TensorField simplify(const TensorField& t) {
  std::vector<ScalarField> comps;
  for (const auto& c : t.components()) comps.push_back(simplify(c));
  return TensorField(t.chart_ptr(), t.valence(), std::move(comps));
}

}  // namespace tgm
