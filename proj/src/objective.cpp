#include "quhe/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "quhe/qkd_model.hpp"

namespace quhe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dimensions(const Scenario& s, std::span<const double> gains,
                      const AllocationState& st) {
  std::size_t n = s.clients.size();
  if (gains.size() != n) throw std::invalid_argument("gains size mismatch");
  if (st.phi.size() != n) throw std::invalid_argument("phi size mismatch");
  if (st.w.size() != static_cast<std::size_t>(s.topology.link_count()))
    throw std::invalid_argument("werner vector size mismatch");
  if (st.lambda.size() != n) throw std::invalid_argument("lambda size mismatch");
  if (st.p.size() != n || st.b.size() != n || st.f_c.size() != n ||
      st.f_s.size() != n)
    throw std::invalid_argument("radio/CPU vector size mismatch");
}

}  // namespace

double weighted_security_utility(const Scenario& s, std::span<const long> lambda) {
  if (lambda.size() != s.clients.size())
    throw std::invalid_argument("lambda size mismatch");
  double u = 0.0;
  for (std::size_t n = 0; n < lambda.size(); ++n)
    u += s.clients[n].sigma * mec::security_bits(static_cast<double>(lambda[n]));
  return u;
}

mec::CostBreakdown compute_costs(const Scenario& s, std::span<const double> gains,
                                 const AllocationState& st) {
  check_dimensions(s, gains, st);
  std::size_t n_clients = s.clients.size();
  std::vector<mec::PhaseCost> enc(n_clients), tr(n_clients), cmp(n_clients);
  for (std::size_t n = 0; n < n_clients; ++n) {
    const auto& c = s.clients[n];
    enc[n] = mec::encryption_cost(c.se_cycles, st.f_c[n], c.kappa_c);
    double rate = mec::uplink_rate(st.p[n], st.b[n], gains[n],
                                   s.server.noise_psd_w_hz);
    tr[n] = mec::transmission_cost(c.tr_bits, rate, st.p[n]);
    cmp[n] = mec::compute_cost(static_cast<double>(st.lambda[n]), c.cmp_tokens,
                               c.tokens_per_sample, st.f_s[n], s.server.kappa_s);
  }
  return mec::aggregate(enc, tr, cmp);
}

Evaluation evaluate(const Scenario& s, std::span<const double> gains,
                    const AllocationState& st) {
  check_dimensions(s, gains, st);
  Evaluation out;
  out.util.u_qkd = qkd::key_utility(s.topology, st.phi, st.w);
  out.util.u_msl = weighted_security_utility(s, st.lambda);
  out.costs = compute_costs(s, gains, st);
  out.objective = s.weights.alpha_qkd * out.util.u_qkd +
                  s.weights.alpha_msl * out.util.u_msl -
                  s.weights.alpha_t * st.t_bound_s -
                  s.weights.alpha_e * out.costs.e_total_j;
  return out;
}

double scalar_objective(const Scenario& s, std::span<const double> gains,
                        const AllocationState& st) {
  return evaluate(s, gains, st).objective;
}

double tight_delay_bound(const Scenario& s, std::span<const double> gains,
                         const AllocationState& st) {
  return compute_costs(s, gains, st).t_total_s;
}

double ring_choice_objective(const Scenario& s, std::span<const double> gains,
                             const AllocationState& state,
                             std::span<const long> lambda) {
  if (lambda.size() != s.clients.size())
    throw std::invalid_argument("lambda size mismatch");
  AllocationState cand = state;
  cand.lambda.assign(lambda.begin(), lambda.end());
  cand.t_bound_s = tight_delay_bound(s, gains, cand);
  return evaluate(s, gains, cand).objective;
}

FeasibilityReport check_feasibility(const Scenario& s,
                                    std::span<const double> gains,
                                    const AllocationState& st, double tol) {
  check_dimensions(s, gains, st);
  FeasibilityReport rep;
  auto add = [&](const std::string& name, double violation, double rhs) {
    double budget = tol * (rhs != 0.0 ? std::fabs(rhs) : 1.0);
    rep.checks.push_back({name, violation <= budget, violation});
  };
  auto tag = [](const char* base, int id) {
    return std::string(base) + "[" + std::to_string(id) + "]";
  };

  const auto& topo = s.topology;
  std::size_t n_clients = s.clients.size();

  for (std::size_t n = 0; n < n_clients; ++n)
    add(tag("rate_min", s.clients[n].id),
        std::max(0.0, s.clients[n].phi_min - st.phi[n]), s.clients[n].phi_min);

  for (int l = 0; l < topo.link_count(); ++l) {
    const auto& lk = topo.links()[l];
    double w = st.w[l];
    double v = w > 0.0 ? std::max(0.0, w - 1.0) : kInf;
    add(tag("werner_range", lk.id), v, 1.0);
    if (!topo.link_used(l)) continue;
    double load = 0.0;
    for (int r : topo.link_routes(l)) load += st.phi[r];
    double cap = (w > 0.0 && w <= 1.0) ? lk.beta * (1.0 - w) : 0.0;
    add(tag("link_capacity", lk.id), std::max(0.0, load - cap), cap);
  }

  for (std::size_t n = 0; n < n_clients; ++n) {
    long lam = st.lambda[n];
    double v = s.lambda_set.contains(lam)
                   ? 0.0
                   : static_cast<double>(
                         std::min(std::labs(lam - s.lambda_set.min_value()),
                                  std::labs(lam - s.lambda_set.max_value())));
    add(tag("ring_choice", s.clients[n].id), v, static_cast<double>(lam));
  }

  double b_sum = 0.0, fs_sum = 0.0;
  for (std::size_t n = 0; n < n_clients; ++n) {
    const auto& c = s.clients[n];
    add(tag("power_range", c.id),
        st.p[n] > 0.0 ? std::max(0.0, st.p[n] - c.p_max_w) : kInf, c.p_max_w);
    add(tag("bandwidth_positive", c.id), st.b[n] > 0.0 ? 0.0 : kInf, 0.0);
    add(tag("client_cpu_range", c.id),
        st.f_c[n] > 0.0 ? std::max(0.0, st.f_c[n] - c.f_max_hz) : kInf,
        c.f_max_hz);
    add(tag("server_cpu_positive", c.id), st.f_s[n] > 0.0 ? 0.0 : kInf, 0.0);
    b_sum += st.b[n];
    fs_sum += st.f_s[n];
  }
  add("bandwidth_total", std::max(0.0, b_sum - s.server.b_total_hz),
      s.server.b_total_hz);
  add("server_cpu_total", std::max(0.0, fs_sum - s.server.f_total_hz),
      s.server.f_total_hz);

  for (std::size_t n = 0; n < n_clients; ++n) {
    const auto& c = s.clients[n];
    bool defined = st.p[n] > 0.0 && st.b[n] > 0.0 && st.f_c[n] > 0.0 &&
                   st.f_s[n] > 0.0 && gains[n] > 0.0 &&
                   st.lambda[n] >= mec::kLambdaFitLo &&
                   st.lambda[n] <= mec::kLambdaFitHi;
    double v = kInf;
    if (defined) {
      double rate = mec::uplink_rate(st.p[n], st.b[n], gains[n],
                                     s.server.noise_psd_w_hz);
      double delay = c.se_cycles / st.f_c[n] + c.tr_bits / rate +
                     mec::job_cycles(static_cast<double>(st.lambda[n]),
                                     c.cmp_tokens, c.tokens_per_sample) /
                         st.f_s[n];
      v = std::max(0.0, delay - st.t_bound_s);
    }
    add(tag("delay_bound", c.id), v, st.t_bound_s);
  }

  rep.feasible = true;
  for (const auto& c : rep.checks) rep.feasible = rep.feasible && c.ok;
  return rep;
}

}  // namespace quhe
