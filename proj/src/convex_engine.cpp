#include "quhe/convex_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "quhe/errors.hpp"
#include "quhe/rng.hpp"

namespace quhe::convex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Barrier-stage evaluation at one point: objective, constraint values and
// the composite  t*f(x) - sum ln(-g_i(x)),  infinite outside the interior.
struct PointEval {
  double f = kInf;
  double phi = kInf;          // composite barrier value
  Vector g;                   // constraint values
  bool interior = false;
};

class BarrierSolver {
 public:
  BarrierSolver(const Problem& p, const Settings& st) : p_(p), st_(st) {}

  Solution run(const Vector& x0) {
    const int m = p_.constraint_count();
    Vector x = x0;
    PointEval e = evaluate(x, 1.0);
    if (!e.interior)
      throw InfeasibleError("minimize: start point is not strictly feasible");

    Certificate cert;
    double t = st_.t0;
    for (int stage = 0; stage < st_.max_barrier_stages; ++stage) {
      e = evaluate(x, t);
      inner_loop(x, e, t, cert);
      ++cert.barrier_stages;
      cert.stage_objectives.push_back(e.f);
      if (m == 0 || static_cast<double>(m) / t <= st_.tolerance) break;
      t *= st_.barrier_increase;
    }

    cert.objective = e.f;
    cert.duality_gap_bound = m == 0 ? 0.0 : static_cast<double>(m) / t;
    Vector residual = grad_phi(x, e, t) / t;
    cert.stationarity = residual.norm();
    cert.max_violation = 0.0;
    for (int i = 0; i < m; ++i) {
      cert.multipliers.push_back(1.0 / (t * (-e.g[i])));
      cert.max_violation = std::max(cert.max_violation, e.g[i]);
    }
    cert.max_violation = std::max(cert.max_violation, 0.0);
    cert.converged = cert.stationarity <= 10.0 * st_.tolerance &&
                     cert.duality_gap_bound <= st_.tolerance;
    return {x, cert};
  }

 private:
  PointEval evaluate(const Vector& x, double t) const {
    PointEval e;
    const int m = p_.constraint_count();
    e.g.resize(m);
    double barrier = 0.0;
    for (int i = 0; i < m; ++i) {
      e.g[i] = p_.constraints()[i].value(x);
      if (!(e.g[i] < 0.0)) return e;  // outside (or NaN)
      barrier -= std::log(-e.g[i]);
    }
    double f = p_.objective().value(x);
    if (!std::isfinite(f)) return e;
    e.f = f;
    e.phi = t * f + barrier;
    e.interior = true;
    return e;
  }

  Vector grad_phi(const Vector& x, const PointEval& e, double t) const {
    Vector g = t * p_.objective().gradient(x);
    for (int i = 0; i < p_.constraint_count(); ++i)
      g += p_.constraints()[i].gradient(x) / (-e.g[i]);
    return g;
  }

  // Composite Hessian when every piece with curvature provides one.
  std::optional<Matrix> hess_phi(const Vector& x, const PointEval& e,
                                 double t) const {
    if (!p_.objective().hessian) return std::nullopt;
    Matrix h = t * p_.objective().hessian(x);
    for (int i = 0; i < p_.constraint_count(); ++i) {
      const Smooth& c = p_.constraints()[i];
      Vector gi = c.gradient(x);
      double s = -e.g[i];
      h += gi * gi.transpose() / (s * s);
      if (c.hessian) h += c.hessian(x) / s;
    }
    if (!h.allFinite()) return std::nullopt;
    return h;
  }

  void inner_loop(Vector& x, PointEval& e, double t, Certificate& cert) {
    const int n = p_.dimension();
    const double grad_tol = 0.25 * st_.tolerance * t;
    Matrix h_inv = Matrix::Identity(n, n);
    bool h_inv_fresh = true;
    Vector grad = grad_phi(x, e, t);

    for (int it = 0; it < st_.max_inner_iterations; ++it) {
      if (grad.norm() <= grad_tol) break;

      Vector dir;
      bool have_dir = false;
      if (auto h = hess_phi(x, e, t)) {
        Eigen::LDLT<Matrix> ldlt(*h);
        if (ldlt.info() == Eigen::Success) {
          Vector cand = ldlt.solve(-grad);
          if (cand.allFinite() &&
              cand.dot(grad) < -1e-14 * cand.norm() * grad.norm()) {
            dir = cand;
            have_dir = true;
          }
        }
      }
      if (!have_dir) {
        Vector cand = -h_inv * grad;
        if (cand.allFinite() &&
            cand.dot(grad) < -1e-14 * cand.norm() * grad.norm()) {
          dir = cand;
        } else {
          h_inv = Matrix::Identity(n, n) / std::max(1.0, grad.norm());
          h_inv_fresh = true;
          dir = -h_inv * grad;
        }
      }

      // Backtrack into the strict interior, then require Armijo decrease.
      // Near the stage optimum the requested decrease can fall below the
      // representable resolution of the composite value; there the test
      // switches to a verifiable gradient-norm reduction instead.
      double slope = st_.armijo_slope * grad.dot(dir);
      double phi_noise = 1e-14 * (1.0 + std::fabs(e.phi));
      double grad_norm = grad.norm();
      double alpha = 1.0;
      PointEval next;
      Vector grad_new;
      bool accepted = false;
      bool by_gradient = false;
      while (alpha >= st_.min_step) {
        next = evaluate(x + alpha * dir, t);
        if (next.interior) {
          if (alpha * (-slope) >= phi_noise) {
            if (next.phi <= e.phi + alpha * slope) {
              accepted = true;
              break;
            }
          } else if (next.phi <= e.phi + phi_noise) {
            grad_new = grad_phi(x + alpha * dir, next, t);
            if (grad_new.norm() <= grad_norm * (1.0 - 0.05 * alpha)) {
              accepted = true;
              by_gradient = true;
              break;
            }
            break;  // no measurable progress in any metric
          }
        }
        alpha *= st_.backtrack;
      }
      if (!accepted) break;

      Vector x_new = x + alpha * dir;
      if (!by_gradient) grad_new = grad_phi(x_new, next, t);

      // BFGS inverse update, skipped on loss of curvature.
      Vector s = x_new - x;
      Vector y = grad_new - grad;
      double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (h_inv_fresh) {
          h_inv = Matrix::Identity(n, n) * (sy / y.squaredNorm());
          h_inv_fresh = false;
        }
        Vector hy = h_inv * y;
        double yhy = y.dot(hy);
        h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                 (hy * s.transpose() + s * hy.transpose()) / sy;
      }

      x = x_new;
      e = next;
      grad = grad_new;
      ++cert.inner_iterations;
    }
  }

  const Problem& p_;
  const Settings& st_;
};

}  // namespace

Problem::Problem(int dimension, Smooth objective)
    : dimension_(dimension), objective_(std::move(objective)) {
  if (dimension_ <= 0) throw std::invalid_argument("problem dimension must be positive");
  if (!objective_.value || !objective_.gradient)
    throw std::invalid_argument("objective needs value and gradient callbacks");
}

void Problem::add_constraint(Smooth g) {
  if (!g.value || !g.gradient)
    throw std::invalid_argument("constraint needs value and gradient callbacks");
  constraints_.push_back(std::move(g));
}

Solution minimize(const Problem& p, const Vector& x0, const Settings& st) {
  if (x0.size() != p.dimension())
    throw std::invalid_argument("start point dimension mismatch");
  return BarrierSolver(p, st).run(x0);
}

std::optional<Vector> find_strictly_feasible(const Problem& p, const Vector& x0,
                                             const Settings& st) {
  const int n = p.dimension();

  // Feasibility already holds?
  bool interior = true;
  double worst = -kInf;
  for (const auto& c : p.constraints()) {
    double gi = c.value(x0);
    if (!std::isfinite(gi)) throw std::invalid_argument(
        "find_strictly_feasible: constraints must be finite at the start point");
    worst = std::max(worst, gi);
    interior = interior && gi < 0.0;
  }
  if (interior) return x0;

  // Auxiliary problem over (x, s): minimize s with g_i(x) <= s, s >= -1,
  // plus a large trust ball that keeps the slack descent bounded.
  auto lift = [n](const Smooth& c) {
    Smooth out;
    out.value = [=](const Vector& y) { return c.value(y.head(n)) - y[n]; };
    out.gradient = [=](const Vector& y) {
      Vector g(n + 1);
      g.head(n) = c.gradient(y.head(n));
      g[n] = -1.0;
      return g;
    };
    if (c.hessian)
      out.hessian = [=](const Vector& y) {
        Matrix h = Matrix::Zero(n + 1, n + 1);
        h.topLeftCorner(n, n) = c.hessian(y.head(n));
        return h;
      };
    return out;
  };

  Smooth slack;
  slack.value = [n](const Vector& y) { return y[n]; };
  slack.gradient = [n](const Vector&) {
    Vector g = Vector::Zero(n + 1);
    g[n] = 1.0;
    return g;
  };
  slack.hessian = [n](const Vector&) { return Matrix::Zero(n + 1, n + 1); };

  Problem aux(n + 1, slack);
  for (const auto& c : p.constraints()) aux.add_constraint(lift(c));

  Smooth floor;
  floor.value = [n](const Vector& y) { return -1.0 - y[n]; };
  floor.gradient = [n](const Vector&) {
    Vector g = Vector::Zero(n + 1);
    g[n] = -1.0;
    return g;
  };
  aux.add_constraint(floor);

  double radius = 1e3 * (1.0 + x0.norm());
  Smooth ball;
  ball.value = [=](const Vector& y) {
    return (y.head(n) - x0).squaredNorm() - radius * radius;
  };
  ball.gradient = [=](const Vector& y) {
    Vector g(n + 1);
    g.head(n) = 2.0 * (y.head(n) - x0);
    g[n] = 0.0;
    return g;
  };
  ball.hessian = [=](const Vector&) {
    Matrix h = Matrix::Identity(n + 1, n + 1) * 2.0;
    h(n, n) = 0.0;
    return h;
  };
  aux.add_constraint(ball);

  Vector y0(n + 1);
  y0.head(n) = x0;
  y0[n] = std::max(0.0, worst) * 1.1 + 1.0;

  Settings aux_st = st;
  aux_st.tolerance = std::max(st.tolerance, 1e-6);
  Solution sol = minimize(aux, y0, aux_st);
  if (sol.x[n] < 0.0) {
    Vector x = sol.x.head(n);
    for (const auto& c : p.constraints())
      if (!(c.value(x) < 0.0)) return std::nullopt;
    return x;
  }
  return std::nullopt;
}

double check_gradient(const Smooth& f, const Vector& x, double step) {
  if (!f.value || !f.gradient)
    throw std::invalid_argument("check_gradient: needs value and gradient");
  Vector analytic = f.gradient(x);
  Vector numeric(x.size());
  for (int i = 0; i < x.size(); ++i) {
    double h = step * std::max(1.0, std::fabs(x[i]));
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    numeric[i] = (f.value(xp) - f.value(xm)) / (2.0 * h);
  }
  double denom = std::max(numeric.norm(), 1e-10);
  return (analytic - numeric).norm() / denom;
}

double sample_convexity_gap(const std::function<double(const Vector&)>& f,
                            const Vector& lo, const Vector& hi, int trials,
                            std::uint64_t seed) {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw std::invalid_argument("sample_convexity_gap: bad box");
  SplitMix64 gen(seed);
  auto draw = [&] {
    Vector x(lo.size());
    for (int i = 0; i < lo.size(); ++i) x[i] = gen.uniform(lo[i], hi[i]);
    return x;
  };
  double worst = -kInf;
  for (int k = 0; k < trials; ++k) {
    Vector x = draw(), y = draw();
    double fx = f(x), fy = f(y), fm = f(0.5 * (x + y));
    if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(fm))
      return kInf;
    worst = std::max(worst, fm - 0.5 * (fx + fy));
  }
  return worst;
}

}  // namespace quhe::convex
