#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quhe/convex_engine.hpp"
#include "quhe/objective.hpp"
#include "quhe/scenario.hpp"
#include "quhe/stage3.hpp"

namespace quhe::orchestrator {

// One completed block solve inside a run.  `outer` is 0 for the one-time
// key-rate solve and counts full ring+radio passes afterwards; wall_ms is
// the block's own duration.
struct TraceRecord {
  int outer = 0;
  std::string stage;       // "stage1" | "stage2" | "stage3"
  double objective = 0.0;  // incumbent full objective after the block
  double wall_ms = 0.0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  bool converged = false;
  int stage1_calls = 0;
  int stage2_calls = 0;
  int stage3_calls = 0;
  // Subproblem count: one per barrier stage of the key-rate solve, one per
  // ring search, one per convex pass of the radio alternation.
  long inner_iterations = 0;
};

struct SolveSettings {
  double epsilon = 1e-4;  // stop once a full pass moves the objective less
  int max_outer = 20;
  std::uint64_t seed = 42;
  convex::Settings rates;  // key-rate block
  stage3::Options radio;   // radio/compute block
};

// epsilon, seed, and the outer cap lifted from the scenario's solver block.
SolveSettings settings_from(const Scenario& s);

struct SolveResult {
  AllocationState state;
  std::vector<double> gains;
  double objective = 0.0;
  SolverTrace trace;
};

// Warm start: ring dimension at its floor, half power and client clock,
// equal shares of half of each server budget, rates at their floors with
// capacity-tight Werner parameters, latency budget tight.  Strictly inside
// every radio box and budget, as the radio block requires.
AllocationState default_initial_state(const Scenario& s,
                                      std::span<const double> gains);

// A perturbed warm start for robustness studies: box positions drawn from
// (0.05, 0.95), budget shares random and strictly below the budget.
AllocationState random_initial_state(const Scenario& s,
                                     std::span<const double> gains,
                                     std::uint64_t seed);

// Alternating block maximization.  The key-rate block is solved once up
// front (it shares no variables or constraints with the rest, so revisiting
// it cannot help); ring and radio passes then alternate until a full pass
// improves the objective by less than epsilon.  Blocks never regress: a
// candidate that fails to improve the incumbent is discarded, so the trace
// is non-decreasing by construction.
SolveResult run_quhe(const Scenario& s, const SolveSettings& st);
SolveResult run_quhe(const Scenario& s, std::span<const double> gains,
                     const AllocationState& init, const SolveSettings& st);

// Reference strategies.  All three reuse the optimal key-rate block so that
// comparisons isolate the ring and radio decisions:
//   kAA   - static: ring floor, full power and client clock, equal splits
//           of both server budgets;
//   kOLAA - ring search on top of the kAA allocation;
//   kOCCR - radio/compute optimization with the ring pinned at its floor.
enum class Baseline { kAA, kOLAA, kOCCR };

struct BaselineResult {
  AllocationState state;
  Evaluation eval;
  double objective = 0.0;
};

BaselineResult run_baseline(const Scenario& s, Baseline kind,
                            const SolveSettings& st);
BaselineResult run_baseline(const Scenario& s, std::span<const double> gains,
                            Baseline kind, const SolveSettings& st);

// Derivative-free and first-order stand-ins for the key-rate block:
//   kGradient - projected gradient descent in log-rate coordinates,
//               fixed step 0.01;
//   kAnnealing - geometric-cooling annealer over the rates, infeasible
//                proposals rejected;
//   kRandom - best of 1e4 uniform draws from a feasible box.
enum class RateSearch { kGradient, kAnnealing, kRandom };

struct RateSearchResult {
  std::vector<double> phi;
  std::vector<double> w;
  double utility = 0.0;  // key utility at (phi, w)
  long evaluations = 0;
  double wall_ms = 0.0;
};

RateSearchResult stage1_alternative(const Scenario& s, RateSearch kind,
                                    std::uint64_t seed);

// Final objectives of `count` runs from random_initial_state starts over a
// single channel draw, solved in parallel.  Bands follow the reporting
// convention of the bundled study: very good [10, 15], good [5, 10],
// poor [-25, 0].
struct RobustnessSummary {
  std::vector<double> objectives;  // per run, in run order
  double best = 0.0;
  double worst = 0.0;
  double within_20pct = 0.0;  // share of runs within 20% of best
  bool traces_monotone = true;
  double share_10_15 = 0.0;
  double share_5_10 = 0.0;
  double share_neg25_0 = 0.0;
};

RobustnessSummary sample_robustness(const Scenario& s, int count,
                                    std::uint64_t seed);

}  // namespace quhe::orchestrator
