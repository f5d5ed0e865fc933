#pragma once

// Declarative scenario files (YAML). See README.md for the schema.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "tgm/loopspace.hpp"

namespace tgm {

class SchemaError : public Error {
public:
  SchemaError(const std::string& path, const std::string& msg)
      : Error(path.empty() ? msg : path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

struct LoopSpec {
  std::vector<ScalarField> x;     // one expression in sigma per coordinate
  std::vector<std::string> text;  // as written
  double momentum_amplitude = 0.5;
  std::vector<int> N{64, 128, 256};
};

struct SampleSpec {
  int count = 100;
  std::uint64_t seed = 42;
};

struct Scenario {
  std::string name;
  std::shared_ptr<const Chart> chart;
  CourantData data;
  std::vector<GeneralizedSection> frame;
  std::optional<QuotientSpec> quotient;
  std::optional<LoopSpec> loop;
  Tolerances tolerances;
  SampleSpec sample;

  DiracFrame dirac_frame() const { return DiracFrame(data, frame); }
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline void require_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) throw SchemaError(path, "expected a table");
}

inline void reject_unknown(const YAML::Node& node, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw SchemaError(join_path(path, key), "unknown key");
  }
}

inline YAML::Node require_key(const YAML::Node& node, const std::string& path, const std::string& key) {
  YAML::Node v = node[key];
  if (!v) throw SchemaError(join_path(path, key), "missing required key");
  return v;
}

inline std::string scalar_text(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw SchemaError(path, "expected a scalar");
  return node.Scalar();
}

template <class T>
T scalar_as(const YAML::Node& node, const std::string& path, std::string_view what) {
  if (!node.IsScalar()) throw SchemaError(path, "expected " + std::string(what));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw SchemaError(path, "expected " + std::string(what) + ", got '" + node.Scalar() + "'");
  }
}

inline ScalarField compile(const Chart& chart, const YAML::Node& node, const std::string& path) {
  const std::string text = scalar_text(node, path);
  try {
    return chart.parse(text);
  } catch (const ParseError& e) {
    throw SchemaError(path, std::string(e.what()) + " (offset " + std::to_string(e.offset()) + " in '" + text + "')");
  } catch (const UnknownSymbolError& e) {
    throw SchemaError(path, std::string(e.what()) + " in '" + text + "'");
  }
}

/// Space-separated coordinate names, e.g. "x y z".
inline std::vector<int> parse_index_key(const Chart& chart, const std::string& key, const std::string& path,
                                        std::size_t arity) {
  std::istringstream in(key);
  std::vector<int> idx;
  std::string name;
  while (in >> name) {
    auto i = chart.index_of(name);
    if (!i) throw SchemaError(path, "'" + name + "' is not a chart coordinate");
    idx.push_back(*i);
  }
  if (idx.size() != arity)
    throw SchemaError(path, "expected " + std::to_string(arity) + " coordinate name(s), got '" + key + "'");
  return idx;
}

/// Tensor from a table keyed by coordinate tuples; missing keys are zero.
/// Symmetric tensors take i ≤ j, forms strictly increasing indices.
inline TensorField compile_tensor(const TensorField::ChartPtr& chart, Valence valence, const YAML::Node& node,
                                  const std::string& path) {
  const int n = chart->dim();
  const auto rank = static_cast<std::size_t>(tensor_rank(valence));
  std::vector<ScalarField> comps(static_cast<std::size_t>(component_count(valence, n)));
  if (!node || node.IsNull()) return TensorField(chart, valence, comps);
  require_map(node, path);
  std::set<std::size_t> seen;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const auto kpath = join_path(path, "\"" + key + "\"");
    auto idx = parse_index_key(*chart, key, kpath, rank);
    std::size_t slot = 0;
    if (valence == Valence::symbilinear) {
      if (idx[0] > idx[1])
        throw SchemaError(kpath, "only the upper triangle is accepted; write '" + chart->coords()[static_cast<std::size_t>(idx[1])] +
                                     " " + chart->coords()[static_cast<std::size_t>(idx[0])] + "'");
      slot = static_cast<std::size_t>(idx[0] * n - idx[0] * (idx[0] - 1) / 2 + (idx[1] - idx[0]));
    } else if (valence == Valence::vector || valence == Valence::oneform) {
      slot = static_cast<std::size_t>(idx[0]);
    } else {
      for (std::size_t a = 1; a < idx.size(); ++a)
        if (idx[a - 1] >= idx[a]) throw SchemaError(kpath, "form indices must be strictly increasing in chart order");
      slot = forms::rank_of(n, idx);
    }
    if (!seen.insert(slot).second) throw SchemaError(kpath, "duplicate component");
    comps[slot] = compile(*chart, kv.second, kpath);
  }
  return TensorField(chart, valence, comps);
}

inline std::shared_ptr<const Chart> compile_chart(const YAML::Node& node) {
  const std::string path = "chart";
  require_map(node, path);
  reject_unknown(node, path, {"coords", "box", "excluded"});
  YAML::Node coords = require_key(node, path, "coords");
  if (!coords.IsSequence() || coords.size() == 0) throw SchemaError("chart.coords", "expected a non-empty list");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < coords.size(); ++i) names.push_back(scalar_text(coords[i], index_path("chart.coords", i)));

  std::vector<Interval> box(names.size(), Interval{0.0, 1.0});
  if (YAML::Node b = node["box"]) {
    require_map(b, "chart.box");
    for (const auto& kv : b) {
      const auto key = kv.first.as<std::string>();
      const auto kpath = "chart.box." + key;
      auto it = std::find(names.begin(), names.end(), key);
      if (it == names.end()) throw SchemaError(kpath, "'" + key + "' is not a chart coordinate");
      if (!kv.second.IsSequence() || kv.second.size() != 2) throw SchemaError(kpath, "expected [lo, hi]");
      box[static_cast<std::size_t>(it - names.begin())] = {scalar_as<double>(kv.second[0], kpath + "[0]", "a number"),
                                                           scalar_as<double>(kv.second[1], kpath + "[1]", "a number")};
    }
  }
  std::shared_ptr<Chart> chart;
  try {
    chart = std::make_shared<Chart>(names, box);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  if (YAML::Node ex = node["excluded"]) chart->set_excluded(compile(*chart, ex, "chart.excluded"));
  return chart;
}

inline GeneralizedSection compile_section(const TensorField::ChartPtr& chart, const YAML::Node& node,
                                          const std::string& path) {
  require_map(node, path);
  reject_unknown(node, path, {"vector", "form"});
  if (!node["vector"] && !node["form"]) throw SchemaError(path, "a section needs 'vector' and/or 'form'");
  return {compile_tensor(chart, Valence::vector, node["vector"], join_path(path, "vector")),
          compile_tensor(chart, Valence::oneform, node["form"], join_path(path, "form"))};
}

inline LoopSpec compile_loop(const Chart& chart, const YAML::Node& node) {
  const std::string path = "loop";
  require_map(node, path);
  LoopSpec spec;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (key == "momentum_amplitude" || key == "N") continue;
    if (!chart.index_of(key)) throw SchemaError(join_path(path, key), "unknown key (not a chart coordinate)");
  }
  for (const auto& name : chart.coords()) {
    const auto kpath = join_path(path, name);
    YAML::Node v = require_key(node, path, name);
    std::string text = scalar_text(v, kpath);
    try {
      spec.x.push_back(parse_testfn(text));
    } catch (const ParseError& e) {
      throw SchemaError(kpath, std::string(e.what()) + " (offset " + std::to_string(e.offset()) + " in '" + text + "')");
    } catch (const UnknownSymbolError& e) {
      throw SchemaError(kpath, std::string(e.what()) + " in '" + text + "' (loops depend on sigma only)");
    }
    spec.text.push_back(text);
  }
  if (YAML::Node a = node["momentum_amplitude"]) spec.momentum_amplitude = scalar_as<double>(a, "loop.momentum_amplitude", "a number");
  if (YAML::Node ns = node["N"]) {
    if (!ns.IsSequence() || ns.size() == 0) throw SchemaError("loop.N", "expected a non-empty list");
    spec.N.clear();
    for (std::size_t i = 0; i < ns.size(); ++i) {
      int v = scalar_as<int>(ns[i], index_path("loop.N", i), "an integer");
      if (v < 4) throw SchemaError(index_path("loop.N", i), "need at least 4 sites");
      spec.N.push_back(v);
    }
  }
  return spec;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::string& fallback_name = "scenario") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SchemaError("", std::string("malformed file: ") + e.what());
  }
  if (!root || root.IsNull()) throw SchemaError("", "empty scenario");
  detail::require_map(root, "");
  if (root["charts"]) throw SchemaError("charts", "multi-chart scenarios are not supported; give a single 'chart' table");
  detail::reject_unknown(root, "",
                         {"name", "chart", "metric", "H", "dirac_frame", "quotient", "loop", "tolerances", "sample"});

  const std::string name = root["name"] ? detail::scalar_text(root["name"], "name") : fallback_name;
  auto chart = detail::compile_chart(detail::require_key(root, "", "chart"));

  TensorField g = detail::compile_tensor(chart, Valence::symbilinear, detail::require_key(root, "", "metric"), "metric");
  TensorField H = detail::compile_tensor(chart, Valence::threeform, root["H"], "H");

  YAML::Node frame_node = detail::require_key(root, "", "dirac_frame");
  if (!frame_node.IsSequence() || frame_node.size() == 0) throw SchemaError("dirac_frame", "expected a non-empty list of sections");
  if (static_cast<int>(frame_node.size()) > chart->dim())
    throw SchemaError("dirac_frame", "at most " + std::to_string(chart->dim()) + " sections");
  std::vector<GeneralizedSection> frame;
  for (std::size_t i = 0; i < frame_node.size(); ++i)
    frame.push_back(detail::compile_section(chart, frame_node[i], detail::index_path("dirac_frame", i)));

  Scenario s{name, chart, CourantData(g, H), std::move(frame), std::nullopt, std::nullopt, {}, {}};

  if (YAML::Node q = root["quotient"]) {
    detail::require_map(q, "quotient");
    detail::reject_unknown(q, "quotient", {"leaf_coords", "flattening_B"});
    QuotientSpec spec;
    YAML::Node leaf = detail::require_key(q, "quotient", "leaf_coords");
    if (!leaf.IsSequence()) throw SchemaError("quotient.leaf_coords", "expected a list of coordinate names");
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      auto p = detail::index_path("quotient.leaf_coords", i);
      auto nm = detail::scalar_text(leaf[i], p);
      if (!chart->index_of(nm)) throw SchemaError(p, "'" + nm + "' is not a chart coordinate");
      spec.leaf_coords.push_back(nm);
    }
    if (YAML::Node b = q["flattening_B"])
      spec.flattening_B = detail::compile_tensor(chart, Valence::twoform, b, "quotient.flattening_B");
    s.quotient = std::move(spec);
  }
  if (YAML::Node l = root["loop"]) s.loop = detail::compile_loop(*chart, l);
  if (YAML::Node t = root["tolerances"]) {
    detail::require_map(t, "tolerances");
    detail::reject_unknown(t, "tolerances", {"pass", "fail"});
    if (t["pass"]) s.tolerances.pass = detail::scalar_as<double>(t["pass"], "tolerances.pass", "a number");
    if (t["fail"]) s.tolerances.fail = detail::scalar_as<double>(t["fail"], "tolerances.fail", "a number");
    if (!(s.tolerances.pass > 0.0 && s.tolerances.pass <= s.tolerances.fail))
      throw SchemaError("tolerances", "need 0 < pass <= fail");
  }
  if (YAML::Node sm = root["sample"]) {
    detail::require_map(sm, "sample");
    detail::reject_unknown(sm, "sample", {"count", "seed"});
    if (sm["count"]) s.sample.count = detail::scalar_as<int>(sm["count"], "sample.count", "an integer");
    if (sm["seed"]) s.sample.seed = detail::scalar_as<std::uint64_t>(sm["seed"], "sample.seed", "a non-negative integer");
    if (s.sample.count < 1) throw SchemaError("sample.count", "must be positive");
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.stem().string());
}

}  // namespace tgm
