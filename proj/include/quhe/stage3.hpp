#pragma once

#include <span>
#include <vector>

#include "quhe/convex_engine.hpp"
#include "quhe/objective.hpp"
#include "quhe/scenario.hpp"

namespace quhe::stage3 {

// Radio and CPU block: with key rates and ring dimensions frozen, pick
// transmit powers, bandwidth shares, client clocks, server shares and the
// latency budget T.  The uplink energy p*d/r(p,b) is the one non-convex
// piece; for a fixed weight z it is replaced by the convex majorant
//   (p*d)^2 * z + 1 / (4 * z * r^2)  >=  p*d/r,
// tight at z = 1/(2*p*d*r).  Alternating exact-weight updates with convex
// solves descends the true cost, so the recorded objectives are monotone.
struct Options {
  convex::Settings inner;     // barrier settings for each convex solve
  double epsilon = 1e-4;      // stop when the true objective moves less
  double z_rel_tol = 1e-3;    // ... and the weights have settled
  int max_iterations = 100;
};

// One alternation step.  `surrogate` is the objective implied by the convex
// model (never above `objective`, which uses the true uplink energy).
struct Record {
  double surrogate = 0.0;
  double objective = 0.0;
  convex::Certificate certificate;
};

struct Result {
  AllocationState state;      // p, b, f_c, f_s and t_bound_s updated
  std::vector<double> z;      // final transform weights
  std::vector<Record> steps;
  double objective = 0.0;     // true objective at the final state
  bool converged = false;
  long inner_iterations = 0;  // barrier steps summed over alternations
};

// Exact transform weights for the state's current radio settings.
std::vector<double> update_z(const Scenario& s, std::span<const double> gains,
                             const AllocationState& state);

// The convex stand-in for the uplink energy, exposed for property tests.
double surrogate_tr_energy(double p, double d_bits, double r, double z);

// Starts from `start`, which must sit strictly inside the power/clock boxes
// and the bandwidth/CPU budgets (throws InfeasibleError otherwise); its
// latency budget is ignored and re-derived.  Key rates, Werner parameters
// and ring dimensions pass through unchanged.
Result solve(const Scenario& s, std::span<const double> gains,
             const AllocationState& start, const Options& opt = {});

}  // namespace quhe::stage3
