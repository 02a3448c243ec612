#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quhe/orchestrator.hpp"
#include "quhe/scenario.hpp"

namespace quhe::report {

// Published optimum for the bundled SURFnet scenario: per-route key rates
// and the capacity-tight Werner parameters they induce, both in id order.
inline constexpr std::array<double, 6> kReferenceRates = {
    2.098, 1.106, 1.103, 1.872, 0.6864, 0.5781};
inline constexpr std::array<double, 18> kReferenceWerner = {
    0.9766, 0.9610, 0.9857, 0.9682, 0.9661, 1.0000, 0.9893, 0.9897, 0.9931,
    0.9891, 0.9840, 0.9744, 0.9759, 0.9851, 0.9611, 0.9866, 0.9646, 0.9600};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Regression suite against the reference solution: the key-rate and Werner
// tables, the closed-form Werner cross-check on a spot sample of links, the
// ring-search-vs-enumeration identity, and tightness of the transmission
// energy surrogate.  The scenario must have the bundled shape (six routes,
// eighteen links); anything else throws std::invalid_argument.
std::vector<Check> verify_reference_tables(const Scenario& s);
std::vector<Check> verify_reference_tables();  // bundled scenario

// One solver invocation, normalized across methods so that reports can
// treat the alternating solver and the one-shot reference strategies alike.
// One-shot methods get a single-record trace holding their final objective.
struct MethodRun {
  std::string method;  // quhe | aa | olaa | occr
  std::uint64_t seed = 0;
  AllocationState state;
  std::vector<double> gains;
  Evaluation eval;
  FeasibilityReport feasibility;
  orchestrator::SolverTrace trace;
  double wall_ms = 0.0;
};

// Runs one method end to end.  Unknown names throw std::invalid_argument.
MethodRun run_method(const Scenario& s, const std::string& method,
                     const orchestrator::SolveSettings& settings);

// One line of a result table.  `param`/`value` identify the swept knob
// ("none"/0 outside sweeps).  converged reflects both solver convergence
// and a feasibility pass of the final state.
struct ResultRow {
  std::string method;
  std::string param;
  double value = 0.0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  double t_total_s = 0.0;
  double e_total_j = 0.0;
  double u_msl = 0.0;
  double u_qkd = 0.0;
  bool converged = false;
  double wall_ms = 0.0;
};

ResultRow make_row(const std::string& param, double value,
                   const MethodRun& run);

struct SweepSpec {
  std::string parameter;  // b_total | p_max | f_max_client | f_total_server
  std::vector<double> values;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;  // empty: the settings seed
};

// Copy of the scenario with the named resource budget replaced.
Scenario with_parameter(const Scenario& s, const std::string& name,
                        double value);

// One row per (value, method, seed), sorted by value, then method, then
// seed.  Rows whose solve throws are kept, zeroed, with converged=false.
// Independent rows run on a small worker pool.
std::vector<ResultRow> run_sweep(const Scenario& base, const SweepSpec& spec,
                                 const orchestrator::SolveSettings& settings);

// Comma-separated table, '.' decimal point, shortest round-trip numbers.
// Header: method,param,value,seed,objective,t_total_s,e_total_j,u_msl,
// u_qkd,converged,wall_ms.
std::string to_csv(std::span<const ResultRow> rows);

// Structured single-run documents.  Deterministic for a fixed scenario,
// seed, and settings: wall-clock fields stay out of these.
std::string result_document(const Scenario& s, const MethodRun& run);
std::string trace_document(const MethodRun& run);

// Distribution summary of a restart-robustness sample.
std::string robustness_document(const orchestrator::RobustnessSummary& sum,
                                std::uint64_t seed, int count);

}  // namespace quhe::report
