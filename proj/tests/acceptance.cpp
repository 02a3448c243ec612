// End-to-end acceptance gate: one PASS/FAIL line per numbered criterion,
// nonzero exit if any fail.  Tolerances are pinned next to each check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "quhe/convex_engine.hpp"
#include "quhe/mec_cost.hpp"
#include "quhe/objective.hpp"
#include "quhe/orchestrator.hpp"
#include "quhe/qkd_model.hpp"
#include "quhe/report.hpp"
#include "quhe/rng.hpp"
#include "quhe/scenario.hpp"
#include "quhe/stage1.hpp"
#include "quhe/stage2.hpp"
#include "quhe/stage3.hpp"

using namespace quhe;

namespace {

int failures = 0;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void line(int idx, const char* title, bool pass, const std::string& detail) {
  std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", idx,
              title, detail.c_str());
  if (!pass) ++failures;
}

// 1. Per-route key rates against the reference table, 1% relative, < 5 s.
void criterion1(const Scenario& s) {
  constexpr double kRelTol = 0.01;
  constexpr double kBudgetMs = 5000.0;
  Timer t;
  stage1::Result res = stage1::solve(s);
  const double ms = t.ms();
  double worst = 0.0;
  for (std::size_t r = 0; r < report::kReferenceRates.size(); ++r)
    worst = std::max(worst, std::fabs(res.phi[r] - report::kReferenceRates[r]) /
                                report::kReferenceRates[r]);
  line(1, "key rates reproduce the reference table within 1%",
       worst <= kRelTol && ms < kBudgetMs,
       "max relative deviation " + num(worst) + ", " + num(ms) + " ms");
}

// 2. Werner parameters against the reference table, 2e-3 absolute with the
//    idle link pinned at exactly 1, plus the closed-form cross-check
//    w_l = 1 - sum(a_ln phi_n)/beta_l at the reference rates, 5e-5 on a
//    spot sample of links.
void criterion2(const Scenario& s) {
  constexpr double kAbsTol = 2e-3;
  constexpr double kClosedFormTol = 5e-5;
  stage1::Result res = stage1::solve(s);
  double worst = 0.0;
  for (std::size_t l = 0; l < report::kReferenceWerner.size(); ++l)
    worst = std::max(worst, std::fabs(res.w[l] - report::kReferenceWerner[l]));
  const bool idle_exact = res.w[s.topology.link_index(6)] == 1.0;

  std::vector<double> phi(report::kReferenceRates.begin(),
                          report::kReferenceRates.end());
  std::vector<double> tight = qkd::optimal_werner_from_rates(s.topology, phi);
  double worst_cf = 0.0;
  for (int id : {1, 15, 16, 17})
    worst_cf = std::max(worst_cf,
                        std::fabs(tight[s.topology.link_index(id)] -
                                  report::kReferenceWerner[id - 1]));
  line(2,
       "werner parameters reproduce the reference table and its closed form",
       worst <= kAbsTol && idle_exact && worst_cf <= kClosedFormTol,
       "max absolute deviation " + num(worst) + ", idle link exact " +
           (idle_exact ? "yes" : "no") + ", cross-check deviation " +
           num(worst_cf));
}

// 3. The transmission-energy surrogate equals p*d/r at the closed-form
//    weight within 1e-12 relative on 1e4 random positive inputs and on the
//    solver's own weights for the bundled network; it never dips below the
//    true ratio; < 1 s.
void criterion3(const Scenario& s) {
  constexpr double kRelTol = 1e-12;
  constexpr double kBudgetMs = 1000.0;
  Timer t;
  SplitMix64 rng(0xacce55ULL);
  double worst = 0.0;
  bool majorizes = true;
  for (int i = 0; i < 10000; ++i) {
    const double p = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    const double d = std::exp(rng.uniform(std::log(1.0), std::log(1e10)));
    const double r = std::exp(rng.uniform(std::log(1.0), std::log(1e9)));
    const double z_star = 1.0 / (2.0 * p * d * r);
    const double truth = p * d / r;
    worst = std::max(worst, std::fabs(stage3::surrogate_tr_energy(
                                          p, d, r, z_star) -
                                      truth) /
                                truth);
    const double z = z_star * std::exp(rng.uniform(-3.0, 3.0));
    majorizes = majorizes &&
                stage3::surrogate_tr_energy(p, d, r, z) >= truth * (1.0 - kRelTol);
  }

  std::vector<double> gains = realize_channels(s, 42);
  AllocationState st = orchestrator::default_initial_state(s, gains);
  std::vector<double> z = stage3::update_z(s, gains, st);
  for (std::size_t i = 0; i < s.clients.size(); ++i) {
    const double rate = mec::uplink_rate(st.p[i], st.b[i], gains[i],
                                         s.server.noise_psd_w_hz);
    const double truth = st.p[i] * s.clients[i].tr_bits / rate;
    worst = std::max(
        worst, std::fabs(stage3::surrogate_tr_energy(st.p[i],
                                                     s.clients[i].tr_bits,
                                                     rate, z[i]) -
                         truth) /
                   truth);
  }
  const double ms = t.ms();
  line(3, "energy surrogate is exact at its weights and never optimistic",
       worst <= kRelTol && majorizes && ms < kBudgetMs,
       "max relative gap " + num(worst) + ", majorizes " +
           (majorizes ? "yes" : "no") + ", " + num(ms) + " ms");
}

stage2::Instance random_instance(SplitMix64& gen, bool quantized) {
  const int n = 1 + static_cast<int>(gen.next() % 4);
  const int k = 1 + static_cast<int>(gen.next() % 3);
  auto draw = [&](double lo, double hi) {
    const double v = gen.uniform(lo, hi);
    if (!quantized) return v;
    return std::floor(v * 4.0) / 4.0;  // coarse grid so exact ties happen
  };
  stage2::Instance inst;
  for (int kk = 0; kk < k; ++kk) inst.options.push_back(32768 * (kk + 1));
  for (int i = 0; i < n; ++i) {
    inst.base_delay_s.push_back(draw(0.0, 1.0));
    std::vector<double> ct, en, ga;
    for (int kk = 0; kk < k; ++kk) {
      ct.push_back(draw(0.0, 3.0));
      en.push_back(draw(0.0, 5.0));
      ga.push_back(draw(0.0, 2.0));
    }
    inst.cmp_delay_s.push_back(ct);
    inst.energy_j.push_back(en);
    inst.gain.push_back(ga);
  }
  inst.alpha_msl = draw(0.0, 1.0);
  inst.alpha_t = draw(0.0, 1.0);
  inst.alpha_e = draw(0.0, 1.0);
  inst.constant = draw(-1.0, 1.0);
  return inst;
}

// 4. Ring search equals exhaustive enumeration - value exactly, argmax under
//    the lexicographic tie rule - on the bundled instance and on 100 random
//    tables with up to 4 clients; < 30 s total.
void criterion4(const Scenario& s) {
  constexpr double kBudgetMs = 30000.0;
  Timer t;
  std::vector<double> gains = realize_channels(s, s.solver.seed);
  AllocationState st = orchestrator::default_initial_state(s, gains);
  stage2::Instance inst = stage2::make_instance(s, gains, st);
  stage2::Result bb = stage2::solve(inst);
  stage2::Result ex = stage2::exhaustive(inst);
  bool ok = bb.value == ex.value && bb.choice == ex.choice;

  SplitMix64 gen(20250825ULL);
  int agreed = 0;
  for (int trial = 0; trial < 100; ++trial) {
    stage2::Instance toy = random_instance(gen, trial % 2 == 1);
    stage2::Result a = stage2::solve(toy);
    stage2::Result b = stage2::exhaustive(toy);
    const bool same = a.value == b.value && a.choice == b.choice;
    ok = ok && same;
    agreed += same ? 1 : 0;
  }
  const double ms = t.ms();
  line(4, "ring search matches exhaustive enumeration exactly",
       ok && ms < kBudgetMs,
       "bundled " + std::string(bb.value == ex.value ? "yes" : "no") + ", " +
           std::to_string(agreed) + "/100 random tables, " + num(ms) + " ms");
}

// 5. The transformed key-rate objective has a correct analytic gradient
//    (finite differences, 1e-4 relative, 100 feasible points) and samples
//    as midpoint-convex (gap <= 1e-6 over 1e3 trials).
void criterion5(const Scenario& s) {
  constexpr double kGradTol = 1e-4;
  constexpr double kGapTol = 1e-6;
  convex::Problem prob = stage1::build_problem(s);
  auto [lo, hi] = stage1::sampling_box(s);
  SplitMix64 rng(0x5eedULL);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    convex::Vector x(prob.dimension());
    for (int i = 0; i < prob.dimension(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
    worst = std::max(worst, convex::check_gradient(prob.objective(), x));
  }
  const double gap =
      convex::sample_convexity_gap(prob.objective().value, lo, hi, 1000, 99);
  line(5, "transformed key-rate objective: gradient and convexity hold",
       worst < kGradTol && gap <= kGapTol,
       "max gradient disagreement " + num(worst) + ", max midpoint gap " +
           num(gap));
}

// 6. Seeded full solves: objective non-decreasing across every stage
//    boundary within 1e-6, convergence within 3 outer passes and 60
//    counted subproblem iterations; < 60 s.
void criterion6(const Scenario& s) {
  constexpr double kSlack = 1e-6;
  constexpr int kMaxOuter = 3;
  constexpr long kMaxInner = 60;
  constexpr double kBudgetMs = 60000.0;
  Timer t;
  bool monotone = true, converged = true;
  int worst_outer = 0;
  long worst_inner = 0;
  double worst_drop = 0.0;
  for (std::uint64_t seed : {42ULL, 7ULL, 2024ULL}) {
    orchestrator::SolveSettings st = orchestrator::settings_from(s);
    st.seed = seed;
    orchestrator::SolveResult res = orchestrator::run_quhe(s, st);
    converged = converged && res.trace.converged;
    const auto& rec = res.trace.records;
    for (std::size_t k = 1; k < rec.size(); ++k) {
      worst_drop = std::max(worst_drop, rec[k - 1].objective - rec[k].objective);
      monotone = monotone && rec[k].objective >= rec[k - 1].objective - kSlack;
    }
    for (const auto& r : rec) worst_outer = std::max(worst_outer, r.outer);
    worst_inner = std::max(worst_inner, res.trace.inner_iterations);
  }
  const double ms = t.ms();
  line(6, "alternation is monotone and converges in a few passes",
       monotone && converged && worst_outer <= kMaxOuter &&
           worst_inner <= kMaxInner && ms < kBudgetMs,
       "worst drop " + num(worst_drop) + ", outer <= " +
           std::to_string(worst_outer) + ", inner <= " +
           std::to_string(worst_inner) + ", " + num(ms) + " ms");
}

// 7. Across 20 seeded runs the alternating solver dominates all three
//    reference strategies, and the ring search never lowers the security
//    utility below the static choice.
void criterion7(const Scenario& s) {
  constexpr int kRuns = 20;
  bool dominates = true, security = true;
  double worst_margin = 1e300;
  for (int r = 0; r < kRuns; ++r) {
    orchestrator::SolveSettings st = orchestrator::settings_from(s);
    st.seed = substream_seed(1234, r);
    const double q = orchestrator::run_quhe(s, st).objective;
    orchestrator::BaselineResult aa =
        orchestrator::run_baseline(s, orchestrator::Baseline::kAA, st);
    orchestrator::BaselineResult olaa =
        orchestrator::run_baseline(s, orchestrator::Baseline::kOLAA, st);
    orchestrator::BaselineResult occr =
        orchestrator::run_baseline(s, orchestrator::Baseline::kOCCR, st);
    const double best_ref =
        std::max({aa.objective, olaa.objective, occr.objective});
    dominates = dominates && q >= best_ref;
    worst_margin = std::min(worst_margin, q - best_ref);
    security = security && olaa.eval.util.u_msl >= aa.eval.util.u_msl;
  }
  line(7, "the alternating solver dominates all reference strategies",
       dominates && security,
       std::to_string(kRuns) + " seed-matched runs, smallest margin " +
           num(worst_margin) + ", ring search never below static security " +
           (security ? "yes" : "no"));
}

// 8. Restart robustness: over 100 random warm starts at least 70% of runs
//    finish within 20% of the best observed objective and every trace is
//    monotone; the band shares are reported alongside.
void criterion8(const Scenario& s) {
  constexpr int kRuns = 100;
  constexpr double kShare = 0.70;
  orchestrator::RobustnessSummary sum =
      orchestrator::sample_robustness(s, kRuns, 42);
  line(8, "random restarts land near the best objective with monotone traces",
       sum.within_20pct >= kShare && sum.traces_monotone,
       "within-20% share " + num(sum.within_20pct) + ", bands [10,15]=" +
           num(sum.share_10_15) + " [5,10]=" + num(sum.share_5_10) +
           " [-25,0]=" + num(sum.share_neg25_0) + ", best " + num(sum.best) +
           ", worst " + num(sum.worst));
}

// 9. Projected gradient descent reaches the key-rate optimum within 1%,
//    random selection over 1e4 draws never exceeds it, and the interior-
//    point solve is faster than gradient descent.
void criterion9(const Scenario& s) {
  constexpr double kRelTol = 0.01;
  stage1::Result exact = stage1::solve(s);
  const double u_exact = qkd::key_utility(s.topology, exact.phi, exact.w);

  double solve_ms = 1e300;
  for (int rep = 0; rep < 3; ++rep) {
    Timer t;
    (void)stage1::solve(s);
    solve_ms = std::min(solve_ms, t.ms());
  }
  double gd_ms = 1e300;
  orchestrator::RateSearchResult gd;
  for (int rep = 0; rep < 3; ++rep) {
    gd = orchestrator::stage1_alternative(s, orchestrator::RateSearch::kGradient,
                                          42);
    gd_ms = std::min(gd_ms, gd.wall_ms);
  }
  double worst = 0.0;
  for (std::size_t r = 0; r < exact.phi.size(); ++r)
    worst = std::max(worst,
                     std::fabs(gd.phi[r] - exact.phi[r]) / exact.phi[r]);
  const bool gd_match = worst <= kRelTol &&
                        std::fabs(gd.utility - u_exact) <= kRelTol * u_exact;

  orchestrator::RateSearchResult rs = orchestrator::stage1_alternative(
      s, orchestrator::RateSearch::kRandom, 42);
  const bool rs_below = rs.utility <= u_exact * (1.0 + 1e-12);

  line(9, "gradient descent agrees, random search trails, and we are faster",
       gd_match && rs_below && solve_ms < gd_ms,
       "gd deviation " + num(worst) + ", random best " + num(rs.utility) +
           " vs " + num(u_exact) + ", " + num(solve_ms) + " ms vs " +
           num(gd_ms) + " ms");
}

// 10. Bisection on the unclamped key fraction locates its sign change at
//     0.779944 within 1e-5.
void criterion10() {
  constexpr double kRoot = 0.779944;
  constexpr double kAbsTol = 1e-5;
  const double root = qkd::find_key_fraction_root(0.7, 0.8, 1e-12);
  line(10, "the key-fraction threshold sits where the utility clamp starts",
       std::fabs(root - kRoot) <= kAbsTol,
       "root " + num(root) + ", offset " + num(std::fabs(root - kRoot)));
}

}  // namespace

int main() {
  const Scenario s = load_scenario(QUHE_DATA_DIR "/surfnet.json");
  criterion1(s);
  criterion2(s);
  criterion3(s);
  criterion4(s);
  criterion5(s);
  criterion6(s);
  criterion7(s);
  criterion8(s);
  criterion9(s);
  criterion10();
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
