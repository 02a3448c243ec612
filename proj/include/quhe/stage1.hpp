#pragma once

#include <utility>
#include <vector>

#include "quhe/convex_engine.hpp"
#include "quhe/scenario.hpp"

namespace quhe::stage1 {

// Key-rate block: choose per-route rates phi (and implicitly the
// capacity-tight Werner parameters) to maximize the key utility.  In log
// coordinates x = ln(phi) the problem
//   min  -sum x_n - sum ln F(pi_n(x))
//   s.t. ln(phi_min) <= x,  link loads <= beta,  pi_n >= clamp threshold
// is convex, with pi_n the end-to-end Werner parameter of route n under
// capacity-tight link operation.  The solution does not depend on the key
// utility's weight in the scalarized objective (a positive weight only
// shifts the value by a constant).
struct Result {
  std::vector<double> phi;
  std::vector<double> w;
  convex::Certificate certificate;
};

// Engine defaults; the optimum can sit on the rate floors, where tighter
// gaps than ~1e-6 drown in floating-point cancellation.
inline convex::Settings default_settings() { return convex::Settings{}; }

// The transformed problem in log-rate coordinates, exposed for gradient
// checks and convexity sampling.
convex::Problem build_problem(const Scenario& s);

// A strictly feasible start just above the rate floors; throws
// InfeasibleError when the floors themselves are not jointly satisfiable.
convex::Vector feasible_start(const Scenario& s);

// An axis-aligned box of log rates that lies strictly inside the feasible
// region (both corners verified), for property tests.
std::pair<convex::Vector, convex::Vector> sampling_box(const Scenario& s);

Result solve(const Scenario& s, const convex::Settings& st = default_settings());

}  // namespace quhe::stage1
