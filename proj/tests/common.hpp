#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tgm/loopspace.hpp"

namespace tgm::testing {

using ChartPtr = std::shared_ptr<const Chart>;

inline ChartPtr chart3(Interval x = {-1, 1}, Interval y = {-1, 1}, Interval z = {-1, 1}) {
  return std::make_shared<const Chart>(std::vector<std::string>{"x", "y", "z"}, std::vector<Interval>{x, y, z});
}

inline TensorField field(const ChartPtr& c, Valence v, std::vector<std::string> comps) {
  std::vector<ScalarField> out;
  for (const auto& s : comps) out.push_back(c->parse(s));
  return TensorField(c, v, out);
}

inline TensorField vec(const ChartPtr& c, std::vector<std::string> comps) { return field(c, Valence::vector, comps); }
inline TensorField form1(const ChartPtr& c, std::vector<std::string> comps) { return field(c, Valence::oneform, comps); }
/// Upper triangle xx, xy, xz, yy, yz, zz.
inline TensorField metric(const ChartPtr& c, std::vector<std::string> comps) { return field(c, Valence::symbilinear, comps); }
inline TensorField H3(const ChartPtr& c, const std::string& hxyz) { return field(c, Valence::threeform, {hxyz}); }

inline GeneralizedSection section(const ChartPtr& c, std::vector<std::string> X, std::vector<std::string> a) {
  return {vec(c, X), form1(c, a)};
}

inline CourantData flat3(const ChartPtr& c, const std::string& h = "0") {
  return {metric(c, {"1", "0", "0", "1", "0", "1"}), H3(c, h)};
}

inline DiracFrame s1() {
  auto c = chart3({-1.5, 1.5}, {-1.5, 1.5});
  return DiracFrame(flat3(c), {section(c, {"0", "0", "1"}, {"0", "0", "0"})});
}

inline DiracFrame s2() {
  auto c = chart3({-1.5, 1.5}, {-1.5, 1.5});
  return DiracFrame(flat3(c, "2"), {section(c, {"0", "0", "1"}, {"0", "2*x", "0"})});
}

inline DiracFrame s3() {
  auto c = chart3();
  CourantData d(metric(c, {"1", "0", "0", "1 + x^2", "-x", "1"}), H3(c, "0"));
  return DiracFrame(d, {section(c, {"0", "0", "1"}, {"0", "0", "0"})});
}

inline DiracFrame s4() {
  auto c = chart3({0, 1});
  CourantData d(metric(c, {"1", "0", "0", "1 + exp(x)", "0", "1"}), H3(c, "0"));
  return DiracFrame(d, {section(c, {"1", "0", "0"}, {"0", "0", "0"})});
}

inline DiracFrame s5() {
  auto c = std::make_shared<Chart>(std::vector<std::string>{"x", "y", "z"},
                                   std::vector<Interval>{{-1.5, 1.5}, {-1.5, 1.5}, {-1, 1}});
  c->set_excluded(c->parse("x^2 + y^2 - 0.25"));
  ChartPtr cc = c;
  CourantData d(metric(cc, {"1", "0", "0", "1", "0", "1 + x^2 + y^2"}), H3(cc, "0"));
  return DiracFrame(d, {section(cc, {"-y", "x", "0"}, {"0", "0", "0"})});
}

inline std::vector<ScalarField> loop(std::vector<std::string> xs) {
  std::vector<ScalarField> out;
  for (const auto& s : xs) out.push_back(parse_testfn(s));
  return out;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace tgm::testing
