#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace quhe::convex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Smooth scalar function with analytic gradient.  The Hessian callback is
// optional: problems without one are solved quasi-Newton (BFGS); constraints
// without one are treated as affine (zero curvature).
struct Smooth {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

// Inequality-constrained minimization
//   min f(x)  s.t.  g_i(x) <= 0,
// f convex, g_i convex, handled by a log-barrier interior-point method.
class Problem {
 public:
  Problem(int dimension, Smooth objective);
  void add_constraint(Smooth g);

  int dimension() const { return dimension_; }
  int constraint_count() const { return static_cast<int>(constraints_.size()); }
  const Smooth& objective() const { return objective_; }
  const std::vector<Smooth>& constraints() const { return constraints_; }

 private:
  int dimension_;
  Smooth objective_;
  std::vector<Smooth> constraints_;
};

struct Settings {
  double tolerance = 1e-6;        // duality gap bound and KKT residual target
  double barrier_increase = 10.0; // multiplier on t between stages
  double t0 = 1.0;
  int max_barrier_stages = 64;
  int max_inner_iterations = 250; // Newton/BFGS steps per stage
  double armijo_slope = 0.25;
  double backtrack = 0.5;
  double min_step = 1e-16;
};

struct Certificate {
  bool converged = false;
  double objective = 0.0;
  double stationarity = 0.0;       // |grad f + sum lambda_i grad g_i|
  double max_violation = 0.0;      // max(0, g_i); zero for interior iterates
  double duality_gap_bound = 0.0;  // m/t at the final barrier stage
  int barrier_stages = 0;
  int inner_iterations = 0;        // accepted steps across all stages
  std::vector<double> stage_objectives;  // f(x) after each stage
  std::vector<double> multipliers;       // barrier estimates 1/(t*(-g_i))
};

struct Solution {
  Vector x;
  Certificate cert;
};

// Minimize from a strictly feasible start (all g_i(x0) < 0); throws
// InfeasibleError otherwise.  Iterates stay strictly feasible throughout.
Solution minimize(const Problem& p, const Vector& x0, const Settings& st = {});

// Phase-one search: minimize the worst constraint slack from x0 (which may
// be infeasible, but every g_i must be finite there).  Returns a strictly
// feasible point, or nullopt if none was found.
std::optional<Vector> find_strictly_feasible(const Problem& p, const Vector& x0,
                                             const Settings& st = {});

// Relative disagreement between the analytic gradient and central
// differences at x; ~1e-8 for a correct gradient, order 1 for a wrong one.
double check_gradient(const Smooth& f, const Vector& x, double step = 1e-6);

// Largest midpoint convexity gap f((x+y)/2) - (f(x)+f(y))/2 over random
// pairs from the box [lo, hi]; positive values beyond noise indicate a
// non-convex function.  Non-finite samples yield +infinity.
double sample_convexity_gap(const std::function<double(const Vector&)>& f,
                            const Vector& lo, const Vector& hi, int trials,
                            std::uint64_t seed);

}  // namespace quhe::convex
