#include "quhe/stage1.hpp"

#include <cmath>
#include <memory>

#include "quhe/errors.hpp"
#include "quhe/qkd_model.hpp"

namespace quhe::stage1 {

namespace {

using convex::Matrix;
using convex::Smooth;
using convex::Vector;

struct Shared {
  qkd::Topology topo;
  std::vector<double> ln_phi_min;
  double ln_thr = 0.0;
};

using SharedPtr = std::shared_ptr<const Shared>;

SharedPtr make_shared_data(const Scenario& s) {
  auto sh = std::make_shared<Shared>(Shared{s.topology, {}, 0.0});
  for (const auto& c : s.clients) sh->ln_phi_min.push_back(std::log(c.phi_min));
  sh->ln_thr = std::log(qkd::kWernerThreshold);
  return sh;
}

// Per-point quantities shared by the objective callbacks.
struct Work {
  Vector phi;             // rates, e^x
  std::vector<double> w;  // capacity-tight link parameter, 1 when unused
  Vector pi;              // per-route product of w along the route
  Matrix p;               // p(n,j) = sum_{l in route n} phi_j / (beta_l w_l)
};

Work compute(const Shared& sh, const Vector& x, bool need_p) {
  const auto& topo = sh.topo;
  const int n_routes = topo.route_count();
  const int n_links = topo.link_count();
  Work wk;
  wk.phi = x.array().exp();
  wk.w.assign(n_links, 1.0);
  for (int l = 0; l < n_links; ++l) {
    if (!topo.link_used(l)) continue;
    double load = 0.0;
    for (int r : topo.link_routes(l)) load += wk.phi[r];
    wk.w[l] = 1.0 - load / topo.links()[l].beta;
  }
  wk.pi = Vector::Ones(n_routes);
  for (int r = 0; r < n_routes; ++r)
    for (int l : topo.route_links(r)) wk.pi[r] *= wk.w[l];
  if (need_p) {
    wk.p = Matrix::Zero(n_routes, n_routes);
    for (int r = 0; r < n_routes; ++r)
      for (int l : topo.route_links(r)) {
        double denom = topo.links()[l].beta * wk.w[l];
        for (int j : topo.link_routes(l)) wk.p(r, j) += wk.phi[j] / denom;
      }
  }
  return wk;
}

// d/dw and d^2/dw^2 of ln F at a Werner parameter above the clamp.
void log_fraction_derivatives(double w, double& a1, double& a2) {
  double f = qkd::secret_key_fraction_raw(w);
  double f1 = std::log2((1.0 + w) / (1.0 - w));
  double f2 = 2.0 / ((1.0 - w * w) * std::log(2.0));
  a1 = f1 / f;
  a2 = (f2 * f - f1 * f1) / (f * f);
}

Smooth make_objective(SharedPtr sh) {
  Smooth f;
  f.value = [sh](const Vector& x) {
    Work wk = compute(*sh, x, false);
    double v = -x.sum();
    for (int r = 0; r < sh->topo.route_count(); ++r)
      v -= std::log(qkd::secret_key_fraction_raw(wk.pi[r]));
    return v;
  };
  f.gradient = [sh](const Vector& x) {
    Work wk = compute(*sh, x, true);
    const int n = sh->topo.route_count();
    Vector g = Vector::Constant(n, -1.0);
    for (int r = 0; r < n; ++r) {
      double a1, a2;
      log_fraction_derivatives(wk.pi[r], a1, a2);
      g += a1 * wk.pi[r] * wk.p.row(r).transpose();
    }
    return g;
  };
  f.hessian = [sh](const Vector& x) {
    Work wk = compute(*sh, x, true);
    const auto& topo = sh->topo;
    const int n = topo.route_count();
    Matrix h = Matrix::Zero(n, n);
    for (int r = 0; r < n; ++r) {
      double a1, a2;
      log_fraction_derivatives(wk.pi[r], a1, a2);
      Vector pr = wk.p.row(r).transpose();
      double pi = wk.pi[r];
      h -= (pi * pi * a2 + pi * a1) * (pr * pr.transpose());
      h += (pi * a1) * pr.asDiagonal().toDenseMatrix();
      // Q term: per link of the route, outer product of phi_j/(beta*w).
      for (int l : topo.route_links(r)) {
        double denom = topo.links()[l].beta * wk.w[l];
        const auto& crossing = topo.link_routes(l);
        for (int j : crossing)
          for (int k : crossing)
            h(j, k) += pi * a1 * (wk.phi[j] / denom) * (wk.phi[k] / denom);
      }
    }
    return h;
  };
  return f;
}

}  // namespace

convex::Problem build_problem(const Scenario& s) {
  SharedPtr sh = make_shared_data(s);
  const int n = sh->topo.route_count();
  convex::Problem prob(n, make_objective(sh));

  // Rate floors, linear in log coordinates.
  for (int r = 0; r < n; ++r) {
    Smooth g;
    g.value = [sh, r](const Vector& x) { return sh->ln_phi_min[r] - x[r]; };
    g.gradient = [n, r](const Vector&) {
      Vector v = Vector::Zero(n);
      v[r] = -1.0;
      return v;
    };
    prob.add_constraint(std::move(g));
  }

  // Link capacities: sum of crossing rates below beta.
  for (int l = 0; l < sh->topo.link_count(); ++l) {
    if (!sh->topo.link_used(l)) continue;
    Smooth g;
    g.value = [sh, l](const Vector& x) {
      double load = 0.0;
      for (int r : sh->topo.link_routes(l)) load += std::exp(x[r]);
      return load - sh->topo.links()[l].beta;
    };
    g.gradient = [sh, l, n](const Vector& x) {
      Vector v = Vector::Zero(n);
      for (int r : sh->topo.link_routes(l)) v[r] = std::exp(x[r]);
      return v;
    };
    g.hessian = [sh, l, n](const Vector& x) {
      Matrix h = Matrix::Zero(n, n);
      for (int r : sh->topo.link_routes(l)) h(r, r) = std::exp(x[r]);
      return h;
    };
    prob.add_constraint(std::move(g));
  }

  // End-to-end Werner parameter above the key-fraction clamp, expressed
  // through logs to stay convex.
  for (int r = 0; r < n; ++r) {
    Smooth g;
    g.value = [sh, r](const Vector& x) {
      Work wk = compute(*sh, x, false);
      double v = sh->ln_thr;
      for (int l : sh->topo.route_links(r)) v -= std::log(wk.w[l]);
      return v;
    };
    g.gradient = [sh, r](const Vector& x) {
      Work wk = compute(*sh, x, true);
      return Vector(wk.p.row(r).transpose());
    };
    g.hessian = [sh, r, n](const Vector& x) {
      Work wk = compute(*sh, x, true);
      Matrix h = wk.p.row(r).transpose().asDiagonal().toDenseMatrix();
      for (int l : sh->topo.route_links(r)) {
        double denom = sh->topo.links()[l].beta * wk.w[l];
        const auto& crossing = sh->topo.link_routes(l);
        for (int j : crossing)
          for (int k : crossing)
            h(j, k) += (wk.phi[j] / denom) * (wk.phi[k] / denom);
      }
      return h;
    };
    prob.add_constraint(std::move(g));
  }

  return prob;
}

namespace {

bool strictly_feasible(const convex::Problem& p, const Vector& x) {
  for (const auto& c : p.constraints())
    if (!(c.value(x) < 0.0)) return false;
  return true;
}

}  // namespace

convex::Vector feasible_start(const Scenario& s) {
  convex::Problem prob = build_problem(s);
  const int n = s.topology.route_count();
  // Slightly above the floors; back further toward them if even that
  // overshoots a capacity or fidelity limit.
  for (double margin = 0.05; margin >= 1e-10; margin *= 0.5) {
    Vector x(n);
    for (int r = 0; r < n; ++r)
      x[r] = std::log(s.clients[r].phi_min * (1.0 + margin));
    if (strictly_feasible(prob, x)) return x;
  }
  throw InfeasibleError(
      "rate floors leave no feasible key-rate allocation");
}

std::pair<convex::Vector, convex::Vector> sampling_box(const Scenario& s) {
  convex::Problem prob = build_problem(s);
  const int n = s.topology.route_count();
  Vector lo(n);
  for (int r = 0; r < n; ++r) lo[r] = std::log(s.clients[r].phi_min * 1.02);
  if (!strictly_feasible(prob, lo))
    throw InfeasibleError("no interior box above the rate floors");

  // The box is safe if its all-high corner is: every constraint grows with
  // each rate except the floors, which bind at the low corner.
  double scale_lo = 1.0, scale_hi = 64.0;
  auto corner = [&](double c) {
    Vector x = lo;
    for (int r = 0; r < n; ++r) x[r] += std::log(c);
    return x;
  };
  while (strictly_feasible(prob, corner(scale_hi))) scale_hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (scale_lo + scale_hi);
    (strictly_feasible(prob, corner(mid)) ? scale_lo : scale_hi) = mid;
  }
  return {lo, corner(std::max(1.0, scale_lo * 0.98))};
}

Result solve(const Scenario& s, const convex::Settings& st) {
  convex::Problem prob = build_problem(s);
  Vector x0 = feasible_start(s);
  convex::Solution sol = convex::minimize(prob, x0, st);
  Result out;
  out.phi.resize(sol.x.size());
  for (int r = 0; r < sol.x.size(); ++r) out.phi[r] = std::exp(sol.x[r]);
  out.w = qkd::optimal_werner_from_rates(s.topology, out.phi);
  out.certificate = sol.cert;
  return out;
}

}  // namespace quhe::stage1
