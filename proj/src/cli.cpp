#include "quhe/cli.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quhe/errors.hpp"
#include "quhe/orchestrator.hpp"
#include "quhe/report.hpp"
#include "quhe/scenario.hpp"

namespace quhe::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

Scenario load_or_default(const std::string& path) {
  return path.empty() ? surfnet_default() : load_scenario(path);
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("short write to " + p.string());
}

// Flags shared by the solver-facing subcommands.  Option handles stick
// around so that explicit flags can override the scenario's own solver
// block while absent ones defer to it.
struct Common {
  std::string scenario_path;
  std::uint64_t seed = 42;
  double epsilon = 1e-4;
  int max_iters = 20;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* eps_opt = nullptr;
  CLI::Option* iters_opt = nullptr;

  void attach(CLI::App* cmd, bool solver_knobs) {
    cmd->add_option("--scenario", scenario_path,
                    "Scenario document (defaults to the bundled network)");
    seed_opt = cmd->add_option("--seed", seed, "Channel realization seed");
    if (!solver_knobs) return;
    eps_opt = cmd->add_option("--epsilon", epsilon,
                              "Convergence threshold on objective change")
                  ->check(CLI::PositiveNumber);
    iters_opt = cmd->add_option("--max-iters", max_iters, "Outer pass cap")
                    ->check(CLI::PositiveNumber);
  }

  orchestrator::SolveSettings resolve(const Scenario& s) const {
    orchestrator::SolveSettings st = orchestrator::settings_from(s);
    if (seed_opt && seed_opt->count()) st.seed = seed;
    if (eps_opt && eps_opt->count()) {
      st.epsilon = epsilon;
      st.radio.epsilon = epsilon;
    }
    if (iters_opt && iters_opt->count()) st.max_outer = max_iters;
    return st;
  }
};

int cmd_solve(const Common& common, const std::string& method,
              const std::string& out_dir) {
  Scenario s = load_or_default(common.scenario_path);
  orchestrator::SolveSettings st = common.resolve(s);
  report::MethodRun run = report::run_method(s, method, st);
  const std::string result = report::result_document(s, run);
  const std::string trace = report::trace_document(run);

  const fs::path dir = out_dir;
  fs::create_directories(dir);
  write_file(dir / "result.json", result);
  write_file(dir / "trace.json", trace);
  std::cout << "method=" << method << " seed=" << st.seed
            << " objective=" << fmt(run.eval.objective) << " converged="
            << (run.trace.converged ? "true" : "false") << "\n"
            << "wrote " << (dir / "result.json").string() << " and "
            << (dir / "trace.json").string() << "\n";
  return 0;
}

int cmd_sweep(const Common& common, const report::SweepSpec& spec,
              const std::string& out_file) {
  Scenario s = load_or_default(common.scenario_path);
  orchestrator::SolveSettings st = common.resolve(s);
  std::vector<report::ResultRow> rows = report::run_sweep(s, spec, st);
  write_file(out_file, report::to_csv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << out_file << "\n";
  return 0;
}

int cmd_verify(const std::string& scenario_path, const std::string& out_file) {
  Scenario s = load_or_default(scenario_path);
  std::vector<report::Check> checks = report::verify_reference_tables(s);
  std::string text;
  bool all_pass = true;
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    text += c.pass ? "PASS " : "FAIL ";
    text += c.name + " (" + c.detail + ")\n";
  }
  text += all_pass ? "all checks passed\n" : "some checks FAILED\n";
  std::cout << text;
  if (!out_file.empty()) write_file(out_file, text);
  return all_pass ? 0 : 1;
}

int cmd_robustness(const Common& common, int runs,
                   const std::string& out_file) {
  Scenario s = load_or_default(common.scenario_path);
  const std::uint64_t seed =
      common.seed_opt && common.seed_opt->count() ? common.seed : s.solver.seed;
  orchestrator::RobustnessSummary sum =
      orchestrator::sample_robustness(s, runs, seed);
  std::cout << "runs=" << runs << " seed=" << seed << " best=" << fmt(sum.best)
            << " worst=" << fmt(sum.worst)
            << " within_20pct=" << fmt(sum.within_20pct)
            << " monotone=" << (sum.traces_monotone ? "true" : "false") << "\n"
            << "band shares: [10,15]=" << fmt(sum.share_10_15)
            << " [5,10]=" << fmt(sum.share_5_10)
            << " [-25,0]=" << fmt(sum.share_neg25_0) << "\n";
  if (!out_file.empty())
    write_file(out_file, report::robustness_document(sum, seed, runs));
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"QKD-keyed homomorphic-encryption edge planner"};
  app.require_subcommand(1);

  const std::vector<std::string> method_names = {"quhe", "aa", "olaa", "occr"};

  CLI::App* solve = app.add_subcommand(
      "solve", "Run one method and write result and trace documents");
  Common solve_common;
  solve_common.attach(solve, true);
  std::string method = "quhe";
  solve->add_option("--method", method, "Solution method")
      ->check(CLI::IsMember(method_names));
  std::string solve_out = ".";
  solve->add_option("--out", solve_out,
                    "Directory for result.json and trace.json");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Re-solve across a resource budget range, emit a CSV table");
  Common sweep_common;
  sweep_common.attach(sweep, true);
  report::SweepSpec spec;
  sweep->add_option("--param", spec.parameter, "Budget to sweep")
      ->required()
      ->check(CLI::IsMember(
          {"b_total", "p_max", "f_max_client", "f_total_server"}));
  sweep->add_option("--values", spec.values, "Budget values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--methods", spec.methods, "Methods to run (default: all)")
      ->delimiter(',')
      ->check(CLI::IsMember(method_names));
  sweep->add_option("--seeds", spec.seeds, "Seeds (default: --seed)")
      ->delimiter(',');
  std::string sweep_out = "sweep.csv";
  sweep->add_option("--out", sweep_out, "CSV output path");

  CLI::App* verify = app.add_subcommand(
      "verify-paper",
      "Check the solver against the published reference tables");
  std::string verify_scenario;
  verify->add_option("--scenario", verify_scenario,
                     "Scenario document (defaults to the bundled network)");
  std::string verify_out;
  verify->add_option("--out", verify_out, "Also write the report here");

  CLI::App* robustness = app.add_subcommand(
      "robustness", "Distribution of outcomes over random warm starts");
  Common rob_common;
  rob_common.attach(robustness, false);
  int runs = 100;
  robustness->add_option("--runs", runs, "Number of restarts")
      ->check(CLI::PositiveNumber);
  std::string rob_out;
  robustness->add_option("--out", rob_out, "Write the distribution here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_common, method, solve_out);
    if (sweep->parsed()) {
      if (spec.methods.empty()) spec.methods = method_names;
      return cmd_sweep(sweep_common, spec, sweep_out);
    }
    if (verify->parsed()) return cmd_verify(verify_scenario, verify_out);
    if (robustness->parsed()) return cmd_robustness(rob_common, runs, rob_out);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace quhe::cli
