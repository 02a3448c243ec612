#pragma once

#include <span>
#include <string>
#include <vector>

#include "quhe/mec_cost.hpp"
#include "quhe/scenario.hpp"

namespace quhe {

// One full decision point: key rates and Werner parameters on the QKD side,
// ring dimensions plus radio/CPU allocations on the MEC side, and the
// latency budget T that the delay constraints are measured against.
struct AllocationState {
  std::vector<double> phi;     // per route
  std::vector<double> w;       // per link
  std::vector<long> lambda;    // per client
  std::vector<double> p;       // transmit power, W
  std::vector<double> b;       // bandwidth share, Hz
  std::vector<double> f_c;     // client CPU clock, Hz
  std::vector<double> f_s;     // server CPU share, Hz
  double t_bound_s = 0.0;      // latency budget T
};

struct Utilities {
  double u_qkd = 0.0;
  double u_msl = 0.0;
};

struct Evaluation {
  double objective = 0.0;
  Utilities util;
  mec::CostBreakdown costs;
};

struct ConstraintCheck {
  std::string name;
  bool ok = false;
  double violation = 0.0;  // how far past the limit, in natural units
};

struct FeasibilityReport {
  std::vector<ConstraintCheck> checks;
  bool feasible = false;
};

// Weighted security utility: sum of sigma_n * security_bits(lambda_n).
double weighted_security_utility(const Scenario& s, std::span<const long> lambda);

// Phase costs of the state under the given channel gains.
mec::CostBreakdown compute_costs(const Scenario& s, std::span<const double> gains,
                                 const AllocationState& state);

// Scalarized objective
//   alpha_qkd*U_qkd + alpha_msl*U_msl - alpha_t*T - alpha_e*E_total
// with T taken from state.t_bound_s.  Throws on dimension mismatches.
Evaluation evaluate(const Scenario& s, std::span<const double> gains,
                    const AllocationState& state);
double scalar_objective(const Scenario& s, std::span<const double> gains,
                        const AllocationState& state);

// Smallest latency budget the state can honour (slowest client's delay).
double tight_delay_bound(const Scenario& s, std::span<const double> gains,
                         const AllocationState& state);

// Objective as a function of ring dimensions alone, everything else fixed
// from `state` and T set to the tight bound for the candidate dimensions.
double ring_choice_objective(const Scenario& s, std::span<const double> gains,
                             const AllocationState& state,
                             std::span<const long> lambda);

// Checks every constraint and reports per-constraint outcomes instead of
// throwing.  tol is relative to a nonzero constraint bound, absolute
// otherwise.  States with nonsensical entries (zero power, negative clocks)
// show up as failed checks with infinite violation where costs are undefined.
FeasibilityReport check_feasibility(const Scenario& s,
                                    std::span<const double> gains,
                                    const AllocationState& state,
                                    double tol = 1e-6);

}  // namespace quhe
