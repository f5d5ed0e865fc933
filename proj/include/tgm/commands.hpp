#pragma once

// The check / quotient / loops pipelines behind the command-line tool. Each
// returns an exit code, a JSON report and a short human-readable summary.

#include <chrono>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tgm/scenario.hpp"

namespace tgm {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;
inline constexpr double kCompatibilityTol = 1e-8;
inline constexpr double kGaugeExactTol = 1e-8;
inline constexpr double kExtensionTol = 1e-8;
inline constexpr double kAnomalyTol = 1e-10;
inline constexpr double kClosureExactTol = 1e-10;
inline constexpr double kMinOrder = 1.0;

enum class Status { pass, fail, inconclusive, skipped };

inline std::string_view status_name(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
    case Status::skipped: return "skipped";
  }
  return "?";
}

enum ExitCode { kExitPass = 0, kExitFail = 1, kExitInconclusive = 2, kExitInput = 3 };

struct RunOptions {
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_pass;
  std::optional<double> tol_fail;
  std::optional<std::vector<int>> N;
};

struct CommandResult {
  int exit_code = kExitPass;
  Json report;
  std::string summary;
};

namespace detail {

/// JSON numbers must be finite; ±inf and NaN become null.
inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Independent components keyed by coordinate names, e.g. {"x y": "2*x"}.
inline Json tensor_json(const TensorField& t) {
  const Chart& chart = t.chart();
  const int n = t.dim();
  Json out = Json::object();
  auto key = [&](std::span<const int> idx) {
    std::string k;
    for (int i : idx) k += (k.empty() ? "" : " ") + chart.coords()[static_cast<std::size_t>(i)];
    return k;
  };
  auto put = [&](std::span<const int> idx) {
    ScalarField c = t.at(idx);
    if (!c.is_zero()) out[key(idx)] = chart.print(c);
  };
  switch (t.valence()) {
    case Valence::symbilinear:
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) put(std::array<int, 2>{i, j});
      break;
    case Valence::bilinear:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) put(std::array<int, 2>{i, j});
      break;
    case Valence::scalar: put(std::span<const int>{}); break;
    default:
      for (const auto& c : forms::combinations(n, tensor_rank(t.valence()))) put(c);
  }
  return out;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash over the report minus "timings" and the hash field itself.
inline std::string canonical_hash(const Json& report) {
  Json canon = report;
  canon.erase("timings");
  canon.erase("canonical_hash");
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a(canon.dump())));
  return buf;
}

class Stopwatch {
public:
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }
  double total() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
  std::chrono::steady_clock::time_point last_ = start_;
};

inline Status worst(std::initializer_list<Status> all) {
  Status out = Status::pass;
  for (Status s : all) {
    if (s == Status::fail) return Status::fail;
    if (s == Status::inconclusive) out = Status::inconclusive;
  }
  return out;
}

inline int exit_code_for(Status s) {
  switch (s) {
    case Status::fail: return kExitFail;
    case Status::inconclusive: return kExitInconclusive;
    default: return kExitPass;
  }
}

inline Status verdict_status(Verdict v) {
  switch (v) {
    case Verdict::transverse: return Status::pass;
    case Verdict::not_transverse: return Status::fail;
    default: return Status::inconclusive;
  }
}

struct Prepared {
  Scenario scenario;
  Tolerances tol;
  std::uint64_t seed;
  int samples;
  std::vector<Point> points;
};

inline Prepared prepare(Scenario s, const RunOptions& opt) {
  Prepared p{std::move(s), {}, 0, 0, {}};
  p.tol = p.scenario.tolerances;
  if (opt.tol_pass) p.tol.pass = *opt.tol_pass;
  if (opt.tol_fail) p.tol.fail = *opt.tol_fail;
  if (!(p.tol.pass > 0.0 && p.tol.pass <= p.tol.fail)) throw SchemaError("tolerances", "need 0 < pass <= fail");
  p.seed = opt.seed.value_or(p.scenario.sample.seed);
  p.samples = opt.samples.value_or(p.scenario.sample.count);
  if (p.samples < 1) throw SchemaError("sample.count", "must be positive");
  p.points = sample_points(*p.scenario.chart, p.samples, p.seed);
  return p;
}

inline Json header(const std::string& command, const Prepared& p) {
  Json r;
  r["schema"] = kReportSchema;
  r["command"] = command;
  r["scenario"] = p.scenario.name;
  r["seed"] = p.seed;
  r["samples"] = p.samples;
  r["tolerances"] = {{"pass", p.tol.pass}, {"fail", p.tol.fail}};
  return r;
}

inline void finish(CommandResult& out, Status overall, const Stopwatch& sw, Json timings) {
  out.exit_code = exit_code_for(overall);
  out.report["status"] = status_name(overall);
  out.report["exit_code"] = out.exit_code;
  timings["total_s"] = sw.total();
  out.report["timings"] = std::move(timings);
  out.report["canonical_hash"] = canonical_hash(out.report);
}

struct AxiomBlocks {
  Json courant, dirac;
  Status courant_status = Status::pass, dirac_status = Status::pass;
};

inline AxiomBlocks axiom_blocks(const Prepared& p, const DiracFrame& frame) {
  AxiomBlocks b;
  CourantValidation cv = validate(p.scenario.data, p.points);
  b.courant_status = cv.ok() ? Status::pass : Status::fail;
  b.courant = {{"status", status_name(b.courant_status)},
               {"min_metric_eigenvalue", num(cv.min_metric_eigenvalue)},
               {"max_dH", num(cv.max_dH)}};

  IsotropyReport iso = check_isotropy(frame, p.points);
  InvolutivityReport inv = check_involutivity(frame, p.points);
  SingularValueReport reg = check_regularity(frame, p.points);
  SingularValueReport proj = check_projectability(frame, p.points);
  b.dirac_status = iso.pass() && inv.pass() && reg.pass() ? Status::pass : Status::fail;
  b.dirac = {{"status", status_name(b.dirac_status)},
             {"rank", frame.rank()},
             {"isotropy", {{"max_violation", num(iso.max_violation)}, {"tolerance", iso.tolerance}, {"pass", iso.pass()}}},
             {"involutivity",
              {{"max_residual", num(inv.max_residual)},
               {"tolerance", inv.tolerance},
               {"rank_deficient_points", inv.rank_deficient_points},
               {"pass", inv.pass()}}},
             {"regularity", {{"min_singular_value", num(reg.min_singular_value)}, {"pass", reg.pass()}}},
             {"projectability",
              {{"min_singular_value", num(proj.min_singular_value)}, {"projectable", proj.pass()}, {"informational", true}}}};
  return b;
}

inline Json transverse_block(const TransverseReport& r, const DiracFrame& frame) {
  Json omega = Json::array();
  if (!r.table.points.empty()) {
    const auto& first = r.table.points.front();
    for (std::size_t a = 0; a < first.generators.size(); ++a)
      omega.push_back({{"generator", a},
                       {"omega_plus", matrix_json(first.generators[a].omega_plus)},
                       {"omega_minus", matrix_json(first.generators[a].omega_minus)}});
  }
  Json point = Json::array();
  if (!r.table.points.empty())
    for (Eigen::Index i = 0; i < r.table.points.front().point.size(); ++i) point.push_back(r.table.points.front().point[i]);
  (void)frame;
  return {{"status", status_name(verdict_status(r.verdict))},
          {"verdict", verdict_name(r.verdict)},
          {"lemma_max_residual", num(r.lemma_max_residual)},
          {"oracle", {{"bracket_route", num(r.oracle.max_bracket)}, {"contraction_route", num(r.oracle.max_contraction)}}},
          {"design_rank_ok", r.design_rank_ok},
          {"omega_max_norm", num(r.omega_max_norm)},
          {"omega_continuity", num(r.continuity)},
          {"omega_at_first_point", {{"point", point}, {"generators", omega}}},
          {"note", r.note}};
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline CommandResult cmd_check(const Scenario& scenario, const RunOptions& opt = {}) {
  detail::Stopwatch sw;
  Json timings;
  detail::Prepared p = detail::prepare(scenario, opt);
  DiracFrame frame = p.scenario.dirac_frame();
  CommandResult out;
  out.report = detail::header("check", p);

  auto axioms = detail::axiom_blocks(p, frame);
  timings["axioms_s"] = sw.lap();
  Json blocks;
  blocks["courant"] = axioms.courant;
  blocks["dirac"] = axioms.dirac;
  std::ostringstream human;
  human << "scenario " << p.scenario.name << " (" << p.samples << " points, seed " << p.seed << ")\n";
  human << "  courant data     " << status_name(axioms.courant_status) << "\n";
  human << "  dirac axioms     " << status_name(axioms.dirac_status) << "\n";

  Status transverse = Status::skipped, compat = Status::skipped;
  if (axioms.courant_status == Status::pass && axioms.dirac_status == Status::pass) {
    TransverseReport tr = transverse_check(frame, p.points, p.tol);
    timings["transverse_s"] = sw.lap();
    transverse = detail::verdict_status(tr.verdict);
    blocks["transverse"] = detail::transverse_block(tr, frame);
    human << "  transverse       " << verdict_name(tr.verdict) << "  lemma " << tr.lemma_max_residual << "  oracle "
          << tr.oracle.max_bracket << " / " << tr.oracle.max_contraction << "  |omega| " << tr.omega_max_norm << "\n";
    if (tr.compatibility) {
      compat = tr.compatibility->max() <= kCompatibilityTol ? Status::pass : Status::fail;
      blocks["compatibility"] = {{"status", status_name(compat)},
                         {"sym_max", detail::num(tr.compatibility->sym_max)},
                         {"alt_max", detail::num(tr.compatibility->alt_max)},
                         {"tolerance", kCompatibilityTol}};
      human << "  compatibility    " << status_name(compat) << "  sym " << tr.compatibility->sym_max << "  alt " << tr.compatibility->alt_max
            << "\n";
    } else {
      blocks["compatibility"] = {{"status", "skipped"}, {"reason", "requires a transverse verdict"}};
    }
    human << "  " << tr.note << "\n";
  } else {
    blocks["transverse"] = {{"status", "skipped"}, {"reason", "courant data or dirac axioms failed"}};
    blocks["compatibility"] = {{"status", "skipped"}, {"reason", "courant data or dirac axioms failed"}};
  }
  out.report["blocks"] = std::move(blocks);
  Status overall = detail::worst({axioms.courant_status, axioms.dirac_status, transverse, compat});
  detail::finish(out, overall, sw, std::move(timings));
  human << "result: " << status_name(overall) << "\n";
  out.summary = human.str();
  return out;
}

inline CommandResult cmd_quotient(const Scenario& scenario, const RunOptions& opt = {}) {
  if (!scenario.quotient) throw SchemaError("quotient", "the quotient command needs a 'quotient' table");
  detail::Stopwatch sw;
  Json timings;
  detail::Prepared p = detail::prepare(scenario, opt);
  DiracFrame frame = p.scenario.dirac_frame();
  CommandResult out;
  out.report = detail::header("quotient", p);

  QuotientResult q = quotient_extract(frame, *p.scenario.quotient, p.points);
  timings["quotient_s"] = sw.lap();
  Status st = q.ok() ? Status::pass : Status::fail;
  Json block = {{"status", status_name(st)},
                {"outcome", quotient_status_name(q.status)},
                {"leaf_coords", p.scenario.quotient->leaf_coords},
                {"projectability", detail::num(q.projectability)},
                {"flattening_defect", detail::num(q.flattening_defect)},
                {"basic_violation", detail::num(q.basic_violation())},
                {"residuals",
                 {{"leaf_derivative", detail::num(q.leaf_derivative)},
                  {"iota_h", detail::num(q.iota_h)},
                  {"lie_h", detail::num(q.lie_h)},
                  {"iota_H", detail::num(q.iota_H)},
                  {"lie_H", detail::num(q.lie_H)},
                  {"pullback_defect", detail::num(q.pullback_defect)}}}};
  if (q.base_chart) block["base_coords"] = q.base_chart->coords();
  if (q.g_Q) block["g_Q"] = detail::tensor_json(*q.g_Q);
  if (q.H_Q) block["H_Q"] = detail::tensor_json(*q.H_Q);
  out.report["blocks"] = {{"quotient", block}};

  std::ostringstream human;
  human << "scenario " << p.scenario.name << " quotient: " << quotient_status_name(q.status) << "\n";
  human << "  basic-ness violation " << q.basic_violation() << "  flattening defect " << q.flattening_defect << "\n";
  if (q.g_Q) human << "  g_Q " << detail::tensor_json(*q.g_Q).dump() << "\n";
  if (q.H_Q) human << "  H_Q " << detail::tensor_json(*q.H_Q).dump() << "\n";
  if (!q.ok()) {
    switch (q.status) {
      case QuotientStatus::not_projectable: human << "  D is not projectable: the anchor is not injective on D\n"; break;
      case QuotientStatus::not_flattened: human << "  flattening_B does not make the frame purely vectorial\n"; break;
      case QuotientStatus::not_basic: human << "  h or H' is not basic along the leaves\n"; break;
      default: break;
    }
  }
  detail::finish(out, st, sw, std::move(timings));
  human << "result: " << status_name(st) << "\n";
  out.summary = human.str();
  return out;
}

inline CommandResult cmd_loops(const Scenario& scenario, const RunOptions& opt = {}) {
  if (!scenario.loop) throw SchemaError("loop", "the loops command needs a 'loop' table");
  detail::Stopwatch sw;
  Json timings;
  detail::Prepared p = detail::prepare(scenario, opt);
  DiracFrame frame = p.scenario.dirac_frame();
  const LoopSpec& loop = *p.scenario.loop;
  const std::vector<int> Ns = opt.N.value_or(loop.N);
  for (int N : Ns)
    if (N < 4) throw SchemaError("N", "need at least 4 sites");
  CommandResult out;
  out.report = detail::header("loops", p);
  out.report["loop"] = {{"x", loop.text}, {"momentum_amplitude", loop.momentum_amplitude}, {"N", Ns}};

  auto axioms = detail::axiom_blocks(p, frame);
  Json blocks;
  blocks["dirac"] = axioms.dirac;
  std::ostringstream human;
  human << "scenario " << p.scenario.name << " loops (N =";
  for (int N : Ns) human << " " << N;
  human << ")\n";
  if (axioms.courant_status != Status::pass || axioms.dirac_status != Status::pass) {
    blocks["courant"] = axioms.courant;
    out.report["blocks"] = std::move(blocks);
    detail::finish(out, Status::fail, sw, std::move(timings));
    human << "  courant data or dirac axioms failed; loop study skipped\nresult: fail\n";
    out.summary = human.str();
    return out;
  }
  TransverseReport tr = transverse_check(frame, p.points, p.tol);
  timings["transverse_s"] = sw.lap();
  blocks["transverse"] = {{"verdict", verdict_name(tr.verdict)},
                          {"lemma_max_residual", detail::num(tr.lemma_max_residual)},
                          {"oracle_bracket_route", detail::num(tr.oracle.max_bracket)}};

  // gauge invariance of the reduced Hamiltonian
  LoopFunctional HW = hamiltonian_W_functional(frame, Extension::generalized_metric);
  LoopFunctional HWe = hamiltonian_W_functional(frame, Extension::euclidean);
  const auto testfns = default_testfns();
  Json rows = Json::array();
  std::vector<double> maxb;
  double max_ext = 0.0, min_positivity = std::numeric_limits<double>::infinity();
  std::vector<LoopState> states;
  for (int N : Ns) {
    LoopState L = constraint_state(frame, loop.x, N, p.seed, loop.momentum_amplitude);
    for (int m = 0; m < N; ++m)
      min_positivity = std::min(min_positivity, reduced_form(frame, L.position(m), Extension::generalized_metric).min_W_positivity);
    LoopGradient dH = gradient_of(HW, L), dHe = gradient_of(HWe, L);
    double mb = 0.0, me = 0.0;
    Json br = Json::array();
    for (int a = 0; a < frame.rank(); ++a)
      for (std::size_t t = 0; t < testfns.size(); ++t) {
        LoopGradient dmu = gradient_of(current_functional({frame.section(a), testfns[t]}), L);
        double b = poisson_bracket(dmu, dH, L, frame.data());
        double be = poisson_bracket(dmu, dHe, L, frame.data());
        mb = std::max(mb, std::abs(b));
        me = std::max(me, std::abs(b - be));
        br.push_back(detail::num(b));
      }
    maxb.push_back(mb);
    max_ext = std::max(max_ext, me);
    rows.push_back({{"N", N},
                    {"H_V", detail::num(hamiltonian_V(L, frame.data()))},
                    {"H_W", detail::num(HW.value(L))},
                    {"constraint_residual", detail::num(constraint_residual(frame, L))},
                    {"max_bracket", detail::num(mb)},
                    {"extension_disagreement", detail::num(me)},
                    {"brackets", br}});
    states.push_back(std::move(L));
  }
  Json orders = Json::array();
  bool exact = true, converging = Ns.size() >= 2;
  for (double b : maxb) exact = exact && b <= kGaugeExactTol;
  for (std::size_t r = 1; r < maxb.size(); ++r) {
    double o = observed_order(maxb[r - 1], maxb[r], Ns[r - 1], Ns[r]);
    orders.push_back(detail::num(o));
    converging = converging && o >= kMinOrder;
  }
  Status gauge = (exact || converging) && max_ext <= kExtensionTol ? Status::pass : Status::fail;
  timings["gauge_s"] = sw.lap();
  blocks["gauge"] = {{"status", status_name(gauge)},
                     {"test_functions", {"1", "cos(sigma)", "sin(sigma)"}},
                     {"rows", rows},
                     {"orders", orders},
                     {"exact", exact},
                     {"max_extension_disagreement", detail::num(max_ext)},
                     {"min_W_positivity", detail::num(min_positivity)},
                     {"transverse_verified", tr.verdict == Verdict::transverse}};
  human << "  transverse verdict " << verdict_name(tr.verdict) << "\n";
  human << "  gauge invariance   " << status_name(gauge) << "\n";
  human << "      N        H_V          H_W      max|{mu,H_W}|\n";
  for (std::size_t r = 0; r < Ns.size(); ++r) {
    char line[128];
    std::snprintf(line, sizeof line, "  %5d  %11.6g  %11.6g  %12.4e\n", Ns[r], rows[r]["H_V"].get<double>(),
                  rows[r]["H_W"].get<double>(), maxb[r]);
    human << line;
  }
  for (const auto& o : orders) human << "      order " << (o.is_null() ? std::string("inf") : std::to_string(o.get<double>())) << "\n";

  // current algebra
  const ScalarField phi1 = parse_testfn("cos(sigma)"), phi2 = parse_testfn("sin(sigma)");
  const CourantData flat = flat_data(frame.data().chart_ptr());
  std::vector<ScalarField> e1(static_cast<std::size_t>(frame.dim()));
  e1[0] = ScalarField::constant(1.0);
  GeneralizedSection c1 = GeneralizedSection::vector(TensorField(frame.data().chart_ptr(), Valence::vector, e1));
  GeneralizedSection c2 = GeneralizedSection::form(TensorField(frame.data().chart_ptr(), Valence::oneform, e1));
  Json crow = Json::array();
  std::vector<double> cres;
  double max_anomaly = 0.0;
  for (std::size_t r = 0; r < states.size(); ++r) {
    double res = 0.0;
    for (int a = 0; a < frame.rank(); ++a)
      for (int b = 0; b < frame.rank(); ++b) {
        ClosureEntry e = closure_entry(frame.section(a), frame.section(b), phi1, phi2, states[r], frame.data());
        res = std::max(res, e.residual());
        max_anomaly = std::max(max_anomaly, std::abs(e.anomaly));
      }
    ClosureEntry c = closure_entry(c1, c2, phi1, phi2, states[r], flat);
    cres.push_back(res);
    crow.push_back({{"N", Ns[r]},
                    {"dirac_residual", detail::num(res)},
                    {"control_bracket", detail::num(c.bracket)},
                    {"control_anomaly", detail::num(c.anomaly)},
                    {"control_residual", detail::num(c.residual())}});
  }
  bool closure_exact = true, closure_conv = Ns.size() >= 2;
  for (double r : cres) closure_exact = closure_exact && r <= kClosureExactTol;
  Json corders = Json::array();
  for (std::size_t r = 1; r < cres.size(); ++r) {
    double o = observed_order(cres[r - 1], cres[r], Ns[r - 1], Ns[r]);
    corders.push_back(detail::num(o));
    closure_conv = closure_conv && o >= kMinOrder;
  }
  Status closure = (closure_exact || closure_conv) && max_anomaly <= kAnomalyTol ? Status::pass : Status::fail;
  timings["closure_s"] = sw.lap();
  blocks["closure"] = {{"status", status_name(closure)},
                       {"test_functions", {"cos(sigma)", "sin(sigma)"}},
                       {"rows", crow},
                       {"orders", corders},
                       {"max_dirac_anomaly", detail::num(max_anomaly)}};
  human << "  constraint algebra " << status_name(closure) << "  (max residual " << cres.back() << ", anomaly "
        << max_anomaly << ")\n";

  out.report["blocks"] = std::move(blocks);
  Status overall = detail::worst({gauge, closure});
  detail::finish(out, overall, sw, std::move(timings));
  human << "result: " << status_name(overall) << "\n";
  out.summary = human.str();
  return out;
}

}  // namespace tgm
