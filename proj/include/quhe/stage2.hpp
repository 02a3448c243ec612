#pragma once

#include <span>
#include <vector>

#include "quhe/objective.hpp"
#include "quhe/scenario.hpp"

namespace quhe::stage2 {

// Ring-dimension block with everything else frozen.  The tables hold the
// dimension-dependent objective pieces per client and candidate; `constant`
// carries the rest (key utility, encryption and uplink energy), so a full
// assignment's value equals the scalarized objective with the latency
// budget re-tightened to the slowest client.
struct Instance {
  std::vector<long> options;                     // candidate ring dimensions
  std::vector<double> base_delay_s;              // encrypt + uplink, per client
  std::vector<std::vector<double>> cmp_delay_s;  // [client][option]
  std::vector<std::vector<double>> energy_j;     // [client][option]
  std::vector<std::vector<double>> gain;         // [client][option] sigma*bits
  double alpha_msl = 0.0;
  double alpha_t = 0.0;
  double alpha_e = 0.0;
  double constant = 0.0;

  int client_count() const { return static_cast<int>(base_delay_s.size()); }
  int option_count() const { return static_cast<int>(options.size()); }
};

Instance make_instance(const Scenario& s, std::span<const double> gains,
                       const AllocationState& state);

// Value of a complete assignment (option index per client).
double assignment_value(const Instance& inst, std::span<const int> choice);

struct Result {
  std::vector<int> choice;   // option index per client
  std::vector<long> lambda;  // chosen ring dimension per client
  double value = 0.0;
  long nodes = 0;  // expanded nodes (solve) or evaluated leaves (exhaustive)
};

// Exact best-first branch and bound.  Deterministic; among equal-valued
// optima it returns the lexicographically smallest choice vector.
Result solve(const Instance& inst);

// Brute force over every assignment, same tie rule; throws
// std::length_error past `cap` leaves.
Result exhaustive(const Instance& inst, long cap = 1000000);

}  // namespace quhe::stage2
