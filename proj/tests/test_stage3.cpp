#include <doctest.h>

#include <cmath>
#include <vector>

#include "quhe/errors.hpp"
#include "quhe/mec_cost.hpp"
#include "quhe/objective.hpp"
#include "quhe/qkd_model.hpp"
#include "quhe/rng.hpp"
#include "quhe/scenario.hpp"
#include "quhe/stage3.hpp"

using namespace quhe;

namespace {

mec::ClientProfile radio_client(int id, double se, double tr) {
  mec::ClientProfile c;
  c.id = id;
  c.se_cycles = se;
  c.tr_bits = tr;
  c.cmp_tokens = 160.0;
  c.tokens_per_sample = 10.0;
  c.kappa_c = 1e-28;
  c.p_max_w = 0.2;
  c.f_max_hz = 3e9;
  c.phi_min = 0.5;
  c.sigma = 0.3;
  return c;
}

Scenario radio_toy(int n_clients) {
  std::vector<qkd::Link> links;
  std::vector<qkd::Route> routes;
  std::vector<mec::ClientProfile> clients;
  for (int i = 1; i <= n_clients; ++i) {
    links.push_back({i, 50.0, 5.0});
    routes.push_back({i, "a", "b", {i}});
    clients.push_back(radio_client(i, i == 2 ? 2e9 : 1e9, i == 2 ? 5e8 : 3e8));
  }
  mec::ServerProfile server;
  server.kappa_s = 1e-28;
  server.f_total_hz = n_clients == 1 ? 2e10 : 1e10;
  server.b_total_hz = 2e6;
  server.noise_psd_dbm_hz = -170.0;
  server.noise_psd_w_hz = 1e-20;
  Scenario s{qkd::Topology(std::move(links), std::move(routes)),
             std::move(clients),
             server,
             mec::FheParamSet({32768, 65536, 131072}),
             ObjectiveWeights{},
             ChannelModel{},
             SolverDefaults{}};
  validate_scenario(s);
  return s;
}

AllocationState interior_start(const Scenario& s) {
  const std::size_t n = s.clients.size();
  AllocationState st;
  for (const auto& c : s.clients) st.phi.push_back(c.phi_min);
  st.w = qkd::optimal_werner_from_rates(s.topology, st.phi);
  st.lambda.assign(n, s.lambda_set.min_value());
  for (const auto& c : s.clients) {
    st.p.push_back(c.p_max_w / 2.0);
    st.f_c.push_back(c.f_max_hz / 2.0);
  }
  st.b.assign(n, s.server.b_total_hz / (2.0 * n));
  st.f_s.assign(n, s.server.f_total_hz / (2.0 * n));
  return st;
}

double per_client_delay(const Scenario& s, std::span<const double> gains,
                        const AllocationState& st, int i) {
  mec::CostBreakdown costs = compute_costs(s, gains, st);
  return costs.encryption[i].time_s + costs.transmission[i].time_s +
         costs.compute[i].time_s;
}

double fixed_utility(const Scenario& s, const AllocationState& st) {
  return s.weights.alpha_qkd * qkd::key_utility(s.topology, st.phi, st.w) +
         s.weights.alpha_msl * weighted_security_utility(s, st.lambda);
}

}  // namespace

TEST_SUITE_BEGIN("stage3");

TEST_CASE("transform weights follow the closed form") {
  Scenario s = radio_toy(1);
  std::vector<double> gains = {3e-13};
  AllocationState st = interior_start(s);
  st.p = {0.1};
  st.b = {1e6};  // rate is exactly 2e6 bit/s at these settings

  std::vector<double> z = stage3::update_z(s, gains, st);
  REQUIRE(z.size() == 1);
  CHECK(z[0] == 1.0 / (2.0 * 0.1 * 3e8 * 2e6));

  // Doubling the rate (via gain scaling that doubles capacity) halves z.
  Scenario s2 = s;
  s2.clients[0].tr_bits = 3e9;
  std::vector<double> g2 = {5e-14};  // unit SNR: rate is exactly b
  st.p = {0.2};
  std::vector<double> z2 = stage3::update_z(s2, g2, st);
  CHECK(z2[0] == doctest::Approx(8.333333333333333e-16).epsilon(1e-14));
}

TEST_CASE("surrogate majorizes the ratio and is exact at the closed form") {
  CHECK(stage3::surrogate_tr_energy(0.2, 3e9, 1e6,
                                    1.0 / (2.0 * 0.2 * 3e9 * 1e6)) ==
        doctest::Approx(600.0).epsilon(1e-14));

  SplitMix64 gen(99);
  for (int trial = 0; trial < 10000; ++trial) {
    double p = std::exp(gen.uniform(std::log(1e-3), std::log(0.3)));
    double d = std::exp(gen.uniform(std::log(1e5), std::log(1e10)));
    double r = std::exp(gen.uniform(std::log(1e3), std::log(1e8)));
    double zs = 1.0 / (2.0 * p * d * r);
    double truth = p * d / r;
    CHECK(stage3::surrogate_tr_energy(p, d, r, zs) ==
          doctest::Approx(truth).epsilon(1e-12));
    double z = zs * std::exp(gen.uniform(-2.0, 2.0));
    CHECK(stage3::surrogate_tr_energy(p, d, r, z) >= truth * (1.0 - 1e-12));
    CHECK(stage3::surrogate_tr_energy(p, d, r, 2.0 * zs) > truth);
  }
}

TEST_CASE("single client: caps bind and clocks settle at the energy balance") {
  Scenario s = radio_toy(1);
  std::vector<double> gains = {3e-13};
  AllocationState start = interior_start(s);

  stage3::Options opt;
  opt.epsilon = 1e-7;
  opt.z_rel_tol = 1e-5;
  stage3::Result res = stage3::solve(s, gains, start, opt);

  CHECK(res.converged);
  REQUIRE(!res.steps.empty());
  CHECK(res.inner_iterations > 0);

  // Cost at the optimum, against an independently solved closed form:
  // p and b hit their caps, and both clocks settle at (alpha_t/(2 alpha_e
  // kappa))^(1/3).
  double cost = fixed_utility(s, res.state) - res.objective;
  CHECK(cost == doctest::Approx(0.34740095145713606).epsilon(1e-5));
  CHECK(res.state.p[0] > 0.99 * 0.2);
  CHECK(res.state.p[0] < 0.2);
  CHECK(res.state.b[0] > 0.99 * 2e6);
  CHECK(res.state.b[0] < 2e6);
  double clock_star = std::cbrt(1e-4 / (2.0 * 1e-4 * 1e-28));
  CHECK(res.state.f_c[0] == doctest::Approx(clock_star).epsilon(5e-3));
  CHECK(res.state.f_s[0] == doctest::Approx(clock_star).epsilon(1e-4));
  CHECK(res.state.t_bound_s ==
        doctest::Approx(2331.0063430475736).epsilon(1e-4));

  // The returned latency budget is exactly the slowest client's delay.
  CHECK(res.state.t_bound_s == tight_delay_bound(s, gains, res.state));
  CHECK(check_feasibility(s, gains, res.state).feasible);
}

TEST_CASE("two clients share the uplink and equalize their delays") {
  Scenario s = radio_toy(2);
  std::vector<double> gains = {3e-13, 1.2e-13};
  AllocationState start = interior_start(s);
  start.lambda = {32768, 65536};  // second client carries the heavier ring

  stage3::Options opt;
  opt.epsilon = 1e-7;
  opt.z_rel_tol = 1e-5;
  stage3::Result res = stage3::solve(s, gains, start, opt);

  CHECK(res.converged);
  double cost = fixed_utility(s, res.state) - res.objective;
  CHECK(cost == doctest::Approx(0.8018792592346742).epsilon(1e-4));

  // Shared bandwidth exhausted; server CPU budget slack.
  CHECK(res.state.b[0] + res.state.b[1] > 0.999 * 2e6);
  CHECK(res.state.b[0] + res.state.b[1] < 2e6);
  CHECK(res.state.f_s[0] + res.state.f_s[1] < 0.3 * 1e10);

  // The weaker channel runs at full power; the stronger one backs off.
  CHECK(res.state.p[1] > 0.99 * 0.2);
  CHECK(res.state.p[0] == doctest::Approx(0.0726347395728).epsilon(0.01));

  // Both clients finish together at the shared latency budget.
  double t = res.state.t_bound_s;
  CHECK(t == doctest::Approx(5381.04232686).epsilon(1e-3));
  for (int i = 0; i < 2; ++i)
    CHECK(per_client_delay(s, gains, res.state, i) ==
          doctest::Approx(t).epsilon(1e-3));
}

TEST_CASE("identical clients get identical allocations") {
  Scenario s = radio_toy(2);
  s.clients[1] = s.clients[0];
  s.clients[1].id = 2;
  std::vector<double> gains = {2e-13, 2e-13};
  stage3::Result res = stage3::solve(s, gains, interior_start(s));
  CHECK(res.converged);
  CHECK(res.state.p[0] == doctest::Approx(res.state.p[1]).epsilon(1e-9));
  CHECK(res.state.b[0] == doctest::Approx(res.state.b[1]).epsilon(1e-9));
  CHECK(res.state.f_c[0] == doctest::Approx(res.state.f_c[1]).epsilon(1e-9));
  CHECK(res.state.f_s[0] == doctest::Approx(res.state.f_s[1]).epsilon(1e-9));
}

TEST_CASE("full network alternation is monotone and feasible") {
  Scenario s = surfnet_default();
  std::vector<double> gains = realize_channels(s, s.solver.seed);
  AllocationState start = interior_start(s);

  stage3::Result res = stage3::solve(s, gains, start);
  CHECK(res.converged);
  REQUIRE(!res.steps.empty());

  double prev = -1e300;
  for (const auto& step : res.steps) {
    CHECK(step.surrogate <= step.objective + 1e-9);
    CHECK(step.objective >= prev - 1e-9);
    prev = step.objective;
  }
  CHECK(res.objective >= prev - 1e-9);

  AllocationState at_start = start;
  at_start.t_bound_s = tight_delay_bound(s, gains, start);
  CHECK(res.objective >= scalar_objective(s, gains, at_start));

  CHECK(check_feasibility(s, gains, res.state).feasible);
  CHECK(res.state.t_bound_s == tight_delay_bound(s, gains, res.state));

  // Bandwidth pays off in both delay and energy, so the budget is spent.
  double bw = 0.0;
  for (double b : res.state.b) bw += b;
  CHECK(bw > (1.0 - 1e-4) * s.server.b_total_hz);
  CHECK(bw < s.server.b_total_hz);

  // Weights settled at their closed form.
  std::vector<double> z_star = stage3::update_z(s, gains, res.state);
  for (std::size_t i = 0; i < z_star.size(); ++i)
    CHECK(res.z[i] == doctest::Approx(z_star[i]).epsilon(1e-2));
}

TEST_CASE("boundary starts are rejected") {
  Scenario s = radio_toy(2);
  std::vector<double> gains = {3e-13, 1.2e-13};
  AllocationState st = interior_start(s);
  st.p[0] = s.clients[0].p_max_w;
  CHECK_THROWS_AS(stage3::solve(s, gains, st), InfeasibleError);

  st = interior_start(s);
  st.b = {1e6, 1e6};  // exactly exhausts the shared bandwidth
  CHECK_THROWS_AS(stage3::solve(s, gains, st), InfeasibleError);
}

TEST_CASE("iteration cap is reported, not hidden") {
  Scenario s = radio_toy(2);
  std::vector<double> gains = {3e-13, 1.2e-13};
  stage3::Options opt;
  opt.max_iterations = 1;
  stage3::Result res = stage3::solve(s, gains, interior_start(s), opt);
  CHECK(!res.converged);
  CHECK(res.steps.size() == 1);
}

TEST_SUITE_END();
