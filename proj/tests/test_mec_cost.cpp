#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "quhe/mec_cost.hpp"
#include "quhe/rng.hpp"

using namespace quhe;

TEST_SUITE_BEGIN("mec");

TEST_CASE("security bits are affine in the ring dimension") {
  CHECK(mec::security_bits(32768) == doctest::Approx(67.0149).epsilon(1e-12));
  CHECK(mec::security_bits(65536) == doctest::Approx(132.5509).epsilon(1e-12));
  CHECK(mec::security_bits(131072) == doctest::Approx(263.6229).epsilon(1e-12));
  CHECK_THROWS_AS(mec::security_bits(0.0), std::domain_error);
}

TEST_CASE("cycle fits reproduce their closed forms on the admissible range") {
  CHECK(mec::eval_cycles(32768) == doctest::Approx(113532765.888).epsilon(1e-12));
  CHECK(mec::decomp_cycles(32768) ==
        doctest::Approx(240931253619.2).epsilon(1e-12));
  CHECK(mec::decomp_cycles(65536) ==
        doctest::Approx(533154947238.4).epsilon(1e-12));
  CHECK(mec::decomp_cycles(131072) ==
        doctest::Approx(1117602334476.8).epsilon(1e-12));

  // Fits are only trusted between 2^15 and 2^17.
  CHECK_THROWS_AS(mec::eval_cycles(1e4), std::domain_error);
  CHECK_THROWS_AS(mec::decomp_cycles(2e5), std::domain_error);

  double prev = mec::job_cycles(32768, 160.0, 10.0);
  CHECK(prev == doctest::Approx(16.0 * 241044786385.088).epsilon(1e-12));
  for (int k = 1; k <= 32; ++k) {
    double lam = 32768.0 + (131072.0 - 32768.0) * k / 32.0;
    double cur = mec::job_cycles(lam, 160.0, 10.0);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("uplink rate closed form and asymptotics") {
  // SNR chosen so the log term is exactly 2 bits.
  CHECK(mec::uplink_rate(0.1, 1e6, 3e-13, 1e-20) == 2e6);

  // Wide-band limit approaches p*g/(n0*ln2).
  double p = 0.1, g = 1e-13, n0 = 3.981071705534985e-21;
  double limit = p * g / (n0 * std::log(2.0));
  CHECK(mec::uplink_rate(p, 1e12, g, n0) == doctest::Approx(limit).epsilon(1e-3));

  // Monotone in power and bandwidth, concave in power.
  double r1 = mec::uplink_rate(0.05, 1e6, g, n0);
  double r2 = mec::uplink_rate(0.10, 1e6, g, n0);
  double r4 = mec::uplink_rate(0.20, 1e6, g, n0);
  CHECK(r2 > r1);
  CHECK(r4 < 2.0 * r2);
  CHECK(mec::uplink_rate(0.1, 2e6, g, n0) > r2);

  CHECK_THROWS_AS(mec::uplink_rate(0.0, 1e6, g, n0), std::domain_error);
  CHECK_THROWS_AS(mec::uplink_rate(0.1, 1e6, 0.0, n0), std::domain_error);
}

TEST_CASE("phase costs follow time and energy identities") {
  mec::PhaseCost enc = mec::encryption_cost(1e6, 1e9, 1e-28);
  CHECK(enc.time_s == 1e-3);
  CHECK(enc.energy_j == doctest::Approx(1e-4).epsilon(1e-15));

  mec::PhaseCost tr = mec::transmission_cost(3e9, 1e6, 0.2);
  CHECK(tr.time_s == 3000.0);
  CHECK(tr.energy_j == doctest::Approx(600.0).epsilon(1e-15));

  mec::PhaseCost cmp = mec::compute_cost(32768, 160.0, 10.0, 3.333e9, 1e-28);
  CHECK(cmp.time_s == doctest::Approx(1157.130687717194).epsilon(1e-12));
  CHECK(cmp.energy_j == doctest::Approx(4284.383641569046).epsilon(1e-12));

  // e = kappa * t * f^3 for the compute phase, e = p * t for transmission.
  SplitMix64 gen(11);
  for (int k = 0; k < 100; ++k) {
    double f_s = gen.uniform(1e8, 2e10);
    double lam = gen.uniform(32768.0, 131072.0);
    mec::PhaseCost c = mec::compute_cost(lam, 160.0, 10.0, f_s, 1e-28);
    CHECK(c.energy_j ==
          doctest::Approx(1e-28 * c.time_s * f_s * f_s * f_s).epsilon(1e-12));
    double rate = gen.uniform(1e4, 1e8);
    double pw = gen.uniform(0.01, 0.2);
    mec::PhaseCost t = mec::transmission_cost(3e9, rate, pw);
    CHECK(t.energy_j == doctest::Approx(pw * t.time_s).epsilon(1e-14));
  }
}

TEST_CASE("aggregate takes the slowest client and sums energy") {
  std::vector<mec::PhaseCost> enc = {{1.0, 2.0}, {0.5, 1.0}};
  std::vector<mec::PhaseCost> tr = {{2.0, 3.0}, {4.0, 1.5}};
  std::vector<mec::PhaseCost> cmp = {{3.0, 0.5}, {1.0, 2.5}};
  mec::CostBreakdown agg = mec::aggregate(enc, tr, cmp);
  CHECK(agg.t_total_s == 6.0);
  CHECK(agg.e_total_j == doctest::Approx(10.5).epsilon(1e-15));

  // Client order must not matter.
  std::vector<mec::PhaseCost> enc_r = {enc[1], enc[0]};
  std::vector<mec::PhaseCost> tr_r = {tr[1], tr[0]};
  std::vector<mec::PhaseCost> cmp_r = {cmp[1], cmp[0]};
  mec::CostBreakdown rev = mec::aggregate(enc_r, tr_r, cmp_r);
  CHECK(rev.t_total_s == agg.t_total_s);
  CHECK(rev.e_total_j == doctest::Approx(agg.e_total_j).epsilon(1e-15));

  CHECK_THROWS_AS(mec::aggregate({}, {}, {}), std::invalid_argument);
  std::vector<mec::PhaseCost> lone = {{1.0, 1.0}};
  CHECK_THROWS_AS(mec::aggregate(lone, tr, cmp), std::invalid_argument);
}

TEST_CASE("ring dimension sets are validated") {
  mec::FheParamSet set({32768, 65536, 131072});
  CHECK(set.size() == 3);
  CHECK(set.min_value() == 32768);
  CHECK(set.max_value() == 131072);
  CHECK(set.contains(65536));
  CHECK(!set.contains(50000));
  CHECK_THROWS_AS(mec::FheParamSet({}), std::invalid_argument);
  CHECK_THROWS_AS((mec::FheParamSet({65536, 32768})), std::invalid_argument);
  CHECK_THROWS_AS(mec::FheParamSet({1024}), std::invalid_argument);
  CHECK_THROWS_AS((mec::FheParamSet({32768, 32768})), std::invalid_argument);
}

TEST_SUITE_END();
