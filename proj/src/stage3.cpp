#include "quhe/stage3.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "quhe/errors.hpp"
#include "quhe/mec_cost.hpp"
#include "quhe/qkd_model.hpp"

namespace quhe::stage3 {

namespace {

using convex::Matrix;
using convex::Smooth;
using convex::Vector;

constexpr double kVarFloor = 1e-9;  // scaled lower bound keeping logs finite

// Shannon rate with first and second derivatives in (p, b).
struct Rate {
  double r, rp, rb, rpp, rpb, rbb;
};

Rate rate_derivatives(double p, double b, double g, double n0) {
  const double s = p * g / (n0 * b);
  const double c1 = g / (n0 * std::log(2.0));
  const double q = (1.0 + s) * (1.0 + s);
  Rate out;
  out.r = b * std::log2(1.0 + s);
  out.rp = c1 / (1.0 + s);
  out.rb = (std::log1p(s) - s / (1.0 + s)) / std::log(2.0);
  out.rpp = -c1 * s / (p * q);
  out.rpb = c1 * s / (b * q);
  out.rbb = -s * s / (std::log(2.0) * b * q);
  return out;
}

// Scaled formulation: per client the slots are (p, b, f_c, f_s) divided by
// (p_max, B_total, f_max, F_total); the last coordinate is T / t_ref.
struct Model {
  struct Client {
    double g, d, fse, cyc, kappa_c, p_max, f_max;
  };
  std::vector<Client> cl;
  double n0, kappa_s, b_total, f_total;
  double alpha_t, alpha_e;
  double t_ref;
  std::vector<double> z;

  int count() const { return static_cast<int>(cl.size()); }
  int dim() const { return 4 * count() + 1; }
  double scale(int slot, int i) const {
    switch (slot) {
      case 0: return cl[i].p_max;
      case 1: return b_total;
      case 2: return cl[i].f_max;
      default: return f_total;
    }
  }
};

using ModelPtr = std::shared_ptr<const Model>;

Smooth make_objective(ModelPtr m) {
  Smooth f;
  f.value = [m](const Vector& u) {
    double cost = m->alpha_t * u[4 * m->count()] * m->t_ref;
    for (int i = 0; i < m->count(); ++i) {
      const auto& c = m->cl[i];
      double p = u[4 * i] * c.p_max;
      double b = u[4 * i + 1] * m->b_total;
      double fc = u[4 * i + 2] * c.f_max;
      double fs = u[4 * i + 3] * m->f_total;
      Rate rr = rate_derivatives(p, b, c.g, m->n0);
      cost += m->alpha_e *
              (c.kappa_c * c.fse * fc * fc +
               surrogate_tr_energy(p, c.d, rr.r, m->z[i]) +
               m->kappa_s * c.cyc * fs * fs);
    }
    return cost;
  };
  f.gradient = [m](const Vector& u) {
    Vector grad = Vector::Zero(m->dim());
    grad[4 * m->count()] = m->alpha_t * m->t_ref;
    for (int i = 0; i < m->count(); ++i) {
      const auto& c = m->cl[i];
      double p = u[4 * i] * c.p_max;
      double b = u[4 * i + 1] * m->b_total;
      double fc = u[4 * i + 2] * c.f_max;
      double fs = u[4 * i + 3] * m->f_total;
      Rate rr = rate_derivatives(p, b, c.g, m->n0);
      double qp = -m->alpha_e / (2.0 * m->z[i] * rr.r * rr.r * rr.r);
      grad[4 * i] = (m->alpha_e * 2.0 * p * c.d * c.d * m->z[i] + qp * rr.rp) *
                    c.p_max;
      grad[4 * i + 1] = qp * rr.rb * m->b_total;
      grad[4 * i + 2] = m->alpha_e * 2.0 * c.kappa_c * c.fse * fc * c.f_max;
      grad[4 * i + 3] = m->alpha_e * 2.0 * m->kappa_s * c.cyc * fs * m->f_total;
    }
    return grad;
  };
  f.hessian = [m](const Vector& u) {
    Matrix h = Matrix::Zero(m->dim(), m->dim());
    for (int i = 0; i < m->count(); ++i) {
      const auto& c = m->cl[i];
      double p = u[4 * i] * c.p_max;
      double b = u[4 * i + 1] * m->b_total;
      Rate rr = rate_derivatives(p, b, c.g, m->n0);
      double r3 = rr.r * rr.r * rr.r;
      double qp = -m->alpha_e / (2.0 * m->z[i] * r3);
      double qpp = 3.0 * m->alpha_e / (2.0 * m->z[i] * r3 * rr.r);
      double hpp = m->alpha_e * 2.0 * c.d * c.d * m->z[i] +
                   qpp * rr.rp * rr.rp + qp * rr.rpp;
      double hpb = qpp * rr.rp * rr.rb + qp * rr.rpb;
      double hbb = qpp * rr.rb * rr.rb + qp * rr.rbb;
      h(4 * i, 4 * i) = hpp * c.p_max * c.p_max;
      h(4 * i, 4 * i + 1) = h(4 * i + 1, 4 * i) = hpb * c.p_max * m->b_total;
      h(4 * i + 1, 4 * i + 1) = hbb * m->b_total * m->b_total;
      h(4 * i + 2, 4 * i + 2) =
          m->alpha_e * 2.0 * c.kappa_c * c.fse * c.f_max * c.f_max;
      h(4 * i + 3, 4 * i + 3) =
          m->alpha_e * 2.0 * m->kappa_s * c.cyc * m->f_total * m->f_total;
    }
    return h;
  };
  return f;
}

Smooth affine_constraint(const Vector& a, double rhs) {
  Smooth g;
  g.value = [a, rhs](const Vector& u) { return a.dot(u) - rhs; };
  g.gradient = [a](const Vector&) { return a; };
  return g;
}

Smooth delay_constraint(ModelPtr m, int i) {
  Smooth g;
  g.value = [m, i](const Vector& u) {
    const auto& c = m->cl[i];
    double p = u[4 * i] * c.p_max;
    double b = u[4 * i + 1] * m->b_total;
    double fc = u[4 * i + 2] * c.f_max;
    double fs = u[4 * i + 3] * m->f_total;
    double r = rate_derivatives(p, b, c.g, m->n0).r;
    return c.fse / fc + c.d / r + c.cyc / fs - u[4 * m->count()] * m->t_ref;
  };
  g.gradient = [m, i](const Vector& u) {
    const auto& c = m->cl[i];
    double p = u[4 * i] * c.p_max;
    double b = u[4 * i + 1] * m->b_total;
    double fc = u[4 * i + 2] * c.f_max;
    double fs = u[4 * i + 3] * m->f_total;
    Rate rr = rate_derivatives(p, b, c.g, m->n0);
    double dr = -c.d / (rr.r * rr.r);
    Vector grad = Vector::Zero(m->dim());
    grad[4 * i] = dr * rr.rp * c.p_max;
    grad[4 * i + 1] = dr * rr.rb * m->b_total;
    grad[4 * i + 2] = -c.fse / (fc * fc) * c.f_max;
    grad[4 * i + 3] = -c.cyc / (fs * fs) * m->f_total;
    grad[4 * m->count()] = -m->t_ref;
    return grad;
  };
  g.hessian = [m, i](const Vector& u) {
    const auto& c = m->cl[i];
    double p = u[4 * i] * c.p_max;
    double b = u[4 * i + 1] * m->b_total;
    double fc = u[4 * i + 2] * c.f_max;
    double fs = u[4 * i + 3] * m->f_total;
    Rate rr = rate_derivatives(p, b, c.g, m->n0);
    double r2 = rr.r * rr.r;
    double hr1 = -c.d / r2;                    // weight on H_r
    double hr2 = 2.0 * c.d / (r2 * rr.r);      // weight on grad_r outer product
    Matrix h = Matrix::Zero(m->dim(), m->dim());
    double hpp = hr2 * rr.rp * rr.rp + hr1 * rr.rpp;
    double hpb = hr2 * rr.rp * rr.rb + hr1 * rr.rpb;
    double hbb = hr2 * rr.rb * rr.rb + hr1 * rr.rbb;
    h(4 * i, 4 * i) = hpp * c.p_max * c.p_max;
    h(4 * i, 4 * i + 1) = h(4 * i + 1, 4 * i) = hpb * c.p_max * m->b_total;
    h(4 * i + 1, 4 * i + 1) = hbb * m->b_total * m->b_total;
    h(4 * i + 2, 4 * i + 2) = 2.0 * c.fse / (fc * fc * fc) * c.f_max * c.f_max;
    h(4 * i + 3, 4 * i + 3) =
        2.0 * c.cyc / (fs * fs * fs) * m->f_total * m->f_total;
    return h;
  };
  return g;
}

convex::Problem build_problem(ModelPtr m) {
  const int n = m->count();
  const int dim = m->dim();
  convex::Problem prob(dim, make_objective(m));
  auto unit = [dim](int k, double sign) {
    Vector a = Vector::Zero(dim);
    a[k] = sign;
    return a;
  };
  for (int i = 0; i < n; ++i) {
    prob.add_constraint(affine_constraint(unit(4 * i, 1.0), 1.0));      // p cap
    prob.add_constraint(affine_constraint(unit(4 * i + 2, 1.0), 1.0));  // f_c cap
    for (int s = 0; s < 4; ++s)
      prob.add_constraint(affine_constraint(unit(4 * i + s, -1.0), -kVarFloor));
  }
  Vector bw = Vector::Zero(dim), cpu = Vector::Zero(dim);
  for (int i = 0; i < n; ++i) {
    bw[4 * i + 1] = 1.0;
    cpu[4 * i + 3] = 1.0;
  }
  prob.add_constraint(affine_constraint(bw, 1.0));   // bandwidth budget
  prob.add_constraint(affine_constraint(cpu, 1.0));  // server CPU budget
  prob.add_constraint(affine_constraint(unit(4 * n, -1.0), -kVarFloor));
  for (int i = 0; i < n; ++i) prob.add_constraint(delay_constraint(m, i));
  return prob;
}

std::shared_ptr<Model> make_model(const Scenario& s,
                                  std::span<const double> gains,
                                  const AllocationState& state) {
  auto m = std::make_shared<Model>();
  for (std::size_t i = 0; i < s.clients.size(); ++i) {
    const auto& c = s.clients[i];
    m->cl.push_back({gains[i], c.tr_bits, c.se_cycles,
                     mec::job_cycles(static_cast<double>(state.lambda[i]),
                                     c.cmp_tokens, c.tokens_per_sample),
                     c.kappa_c, c.p_max_w, c.f_max_hz});
  }
  m->n0 = s.server.noise_psd_w_hz;
  m->kappa_s = s.server.kappa_s;
  m->b_total = s.server.b_total_hz;
  m->f_total = s.server.f_total_hz;
  m->alpha_t = s.weights.alpha_t;
  m->alpha_e = s.weights.alpha_e;
  m->t_ref = 1.0;
  return m;
}

Vector pack(const Model& m, const AllocationState& st, double t_scaled) {
  Vector u(m.dim());
  for (int i = 0; i < m.count(); ++i) {
    u[4 * i] = st.p[i] / m.cl[i].p_max;
    u[4 * i + 1] = st.b[i] / m.b_total;
    u[4 * i + 2] = st.f_c[i] / m.cl[i].f_max;
    u[4 * i + 3] = st.f_s[i] / m.f_total;
  }
  u[4 * m.count()] = t_scaled;
  return u;
}

void unpack(const Model& m, const Vector& u, AllocationState& st) {
  for (int i = 0; i < m.count(); ++i) {
    st.p[i] = u[4 * i] * m.cl[i].p_max;
    st.b[i] = u[4 * i + 1] * m.b_total;
    st.f_c[i] = u[4 * i + 2] * m.cl[i].f_max;
    st.f_s[i] = u[4 * i + 3] * m.f_total;
  }
  st.t_bound_s = u[4 * m.count()] * m.t_ref;
}

}  // namespace

std::vector<double> update_z(const Scenario& s, std::span<const double> gains,
                             const AllocationState& state) {
  const std::size_t n = s.clients.size();
  if (gains.size() != n || state.p.size() != n || state.b.size() != n)
    throw std::invalid_argument("per-client vector size mismatch");
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = mec::uplink_rate(state.p[i], state.b[i], gains[i],
                                s.server.noise_psd_w_hz);
    z[i] = 1.0 / (2.0 * state.p[i] * s.clients[i].tr_bits * r);
  }
  return z;
}

double surrogate_tr_energy(double p, double d_bits, double r, double z) {
  double a = p * d_bits;
  return a * a * z + 1.0 / (4.0 * z * r * r);
}

Result solve(const Scenario& s, std::span<const double> gains,
             const AllocationState& start, const Options& opt) {
  const std::size_t n = s.clients.size();
  if (gains.size() != n) throw std::invalid_argument("gains size mismatch");
  for (double g : gains)
    if (!(g > 0.0)) throw std::invalid_argument("channel gains must be positive");

  Result out;
  out.state = start;

  auto model = make_model(s, gains, start);
  // Reference the latency scale to the start point so T is O(1).
  model->t_ref = tight_delay_bound(s, gains, start);
  model->z = update_z(s, gains, start);

  // Strict interior start: boxes and budgets with room to spare, T a hair
  // above the slowest client.
  Vector u = pack(*model, start, 1.0 + 1e-3);
  {
    const Model& m = *model;
    double bw = 0.0, cpu = 0.0;
    for (int i = 0; i < m.count(); ++i) {
      if (!(u[4 * i] > kVarFloor && u[4 * i] < 1.0) ||
          !(u[4 * i + 2] > kVarFloor && u[4 * i + 2] < 1.0) ||
          !(u[4 * i + 1] > kVarFloor) || !(u[4 * i + 3] > kVarFloor))
        throw InfeasibleError("start point sits on a power or clock limit");
      bw += u[4 * i + 1];
      cpu += u[4 * i + 3];
    }
    if (!(bw < 1.0) || !(cpu < 1.0))
      throw InfeasibleError("start point exhausts a shared budget");
  }

  const double const_part =
      s.weights.alpha_qkd * qkd::key_utility(s.topology, start.phi, start.w) +
      s.weights.alpha_msl * weighted_security_utility(s, start.lambda);
  auto true_cost = [&](const AllocationState& st) {
    return s.weights.alpha_t * st.t_bound_s +
           s.weights.alpha_e * compute_costs(s, gains, st).e_total_j;
  };

  AllocationState current = start;
  current.t_bound_s = u[4 * model->count()] * model->t_ref;
  double cost = true_cost(current);

  for (int it = 0; it < opt.max_iterations; ++it) {
    convex::Problem prob = build_problem(model);
    convex::Solution sol = convex::minimize(prob, u, opt.inner);
    out.inner_iterations += sol.cert.inner_iterations;

    AllocationState cand = current;
    unpack(*model, sol.x, cand);
    double cand_cost = true_cost(cand);
    if (cand_cost > cost) {  // no measurable progress: keep the better point
      out.converged = true;
      break;
    }

    u = sol.x;
    current = cand;
    out.steps.push_back(
        {const_part - sol.cert.objective, const_part - cand_cost, sol.cert});

    std::vector<double> z_next = update_z(s, gains, current);
    double dz = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      dz = std::max(dz, std::fabs(z_next[i] - model->z[i]) / model->z[i]);
    model->z = std::move(z_next);

    bool settled = std::fabs(cost - cand_cost) <= opt.epsilon && dz <= opt.z_rel_tol;
    cost = cand_cost;
    if (settled) {
      out.converged = true;
      break;
    }
  }

  // Given everything else, the optimal latency budget is exactly the
  // slowest client's delay; snap it there instead of leaving central-path
  // slack on T.
  current.t_bound_s = tight_delay_bound(s, gains, current);
  out.state = current;
  out.z = model->z;
  out.objective = const_part - true_cost(current);
  return out;
}

}  // namespace quhe::stage3
