#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tgm/commands.hpp"

namespace {

std::vector<int> parse_N_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 4) throw tgm::SchemaError("--N", "expected a comma-separated list of integers >= 4");
    out.push_back(v);
  }
  if (out.empty()) throw tgm::SchemaError("--N", "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chart-local checks for transverse generalized metrics and Dirac-Riemannian foliations"};
  app.require_subcommand(1);

  std::string file, json_path, n_list;
  tgm::RunOptions opt;
  int samples = 0;
  std::uint64_t seed = 0;
  double tol_pass = 0.0, tol_fail = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", file, "scenario file")->required();
    sub->add_option("--json", json_path, "write the JSON report to this path ('-' for stdout)");
    sub->add_option("--samples", samples, "number of sample points")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "sampling seed");
    sub->add_option("--tol-pass", tol_pass, "pass tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--tol-fail", tol_fail, "fail tolerance")->check(CLI::PositiveNumber);
  };
  CLI::App* check = app.add_subcommand("check", "Dirac axioms, transverse verdict and compatibility conditions");
  CLI::App* quotient = app.add_subcommand("quotient", "leaf-space metric and 3-form of a projectable foliation");
  CLI::App* loops = app.add_subcommand("loops", "reduced Hamiltonian and current algebra on discretized loops");
  add_common(check);
  add_common(quotient);
  add_common(loops);
  loops->add_option("--N", n_list, "comma-separated lattice sizes, e.g. 64,128,256");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : tgm::kExitInput;
  }
  for (CLI::App* sub : {check, quotient, loops}) {
    if (!sub->parsed()) continue;
    if (sub->count("--samples")) opt.samples = samples;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--tol-pass")) opt.tol_pass = tol_pass;
    if (sub->count("--tol-fail")) opt.tol_fail = tol_fail;
  }

  tgm::CommandResult result;
  try {
    if (loops->parsed() && loops->count("--N")) opt.N = parse_N_list(n_list);
    tgm::Scenario scenario = tgm::load_scenario(file);
    if (check->parsed()) result = tgm::cmd_check(scenario, opt);
    else if (quotient->parsed()) result = tgm::cmd_quotient(scenario, opt);
    else result = tgm::cmd_loops(scenario, opt);
  } catch (const tgm::SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return tgm::kExitInput;
  } catch (const tgm::SingularMetricError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return tgm::kExitInput;
  } catch (const tgm::DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return tgm::kExitInput;
  } catch (const tgm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return tgm::kExitFail;
  } catch (const tgm::Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return tgm::kExitInput;
  }

  std::cout << result.summary;
  if (!json_path.empty()) {
    const std::string text = result.report.dump(2) + "\n";
    if (json_path == "-") {
      std::cout << text;
    } else {
      std::ofstream out(json_path, std::ios::binary);
      if (!out) {
        std::cerr << "cannot write " << json_path << "\n";
        return tgm::kExitInput;
      }
      out << text;
    }
  }
  return result.exit_code;
}
