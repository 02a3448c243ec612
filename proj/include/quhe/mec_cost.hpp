#pragma once

#include <span>
#include <vector>

namespace quhe::mec {

// Edge client running homomorphic encryption locally and offloading
// ciphertext evaluation to the server.
struct ClientProfile {
  int id = 0;                     // positive; pairs with the QKD route of the same id
  double se_cycles = 0.0;         // CPU cycles for one symmetric encryption batch
  double tr_bits = 0.0;           // uplink payload per batch, bits
  double cmp_tokens = 0.0;        // evaluation workload, tokens per batch
  double tokens_per_sample = 0.0; // tokens served per evaluated sample
  double kappa_c = 0.0;           // client CPU energy coefficient, J/(cycle*Hz^2)
  double p_max_w = 0.0;           // transmit power cap, W
  double f_max_hz = 0.0;          // client CPU frequency cap, Hz
  double phi_min = 0.0;           // minimum acceptable key rate on its route
  double sigma = 0.0;             // relative priority weight in the security utility
};

struct ServerProfile {
  double kappa_s = 0.0;       // server CPU energy coefficient
  double f_total_hz = 0.0;    // schedulable CPU budget across clients, Hz
  double b_total_hz = 0.0;    // uplink bandwidth budget, Hz
  double noise_psd_dbm_hz = 0.0;  // thermal noise density as configured
  double noise_psd_w_hz = 0.0;    // same, in W/Hz (derived at load time)
};

// Admissible ring dimensions for the homomorphic scheme.  The cycle-count
// fits below are only trusted on [2^15, 2^17], so members must stay there.
class FheParamSet {
 public:
  explicit FheParamSet(std::vector<long> values);
  const std::vector<long>& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  long min_value() const { return values_.front(); }
  long max_value() const { return values_.back(); }
  bool contains(long v) const;

 private:
  std::vector<long> values_;
};

inline constexpr long kLambdaFitLo = 32768;   // 2^15
inline constexpr long kLambdaFitHi = 131072;  // 2^17

// Security level (bits) delivered by ring dimension lambda.
double security_bits(double lambda);

// Server cycles to evaluate one ciphertext at ring dimension lambda.
double eval_cycles(double lambda);

// Server cycles to transform one transciphered batch back to the
// homomorphic domain at ring dimension lambda.
double decomp_cycles(double lambda);

// Total server cycles for one client batch: (decomp + eval) scaled by the
// token workload, divided by tokens served per sample.
double job_cycles(double lambda, double cmp_tokens, double tokens_per_sample);

// Shannon uplink rate, bits/s, for transmit power p over bandwidth b with
// channel gain g and noise density n0.
double uplink_rate(double p, double b, double g, double n0);

struct PhaseCost {
  double time_s = 0.0;
  double energy_j = 0.0;
};

// Local encryption of se_cycles at clock f_c.
PhaseCost encryption_cost(double se_cycles, double f_c, double kappa_c);

// Uplink transfer of tr_bits at `rate` with transmit power p.
PhaseCost transmission_cost(double tr_bits, double rate, double p);

// Server-side evaluation of one batch at clock f_s.
PhaseCost compute_cost(double lambda, double cmp_tokens,
                       double tokens_per_sample, double f_s, double kappa_s);

struct CostBreakdown {
  std::vector<PhaseCost> encryption;
  std::vector<PhaseCost> transmission;
  std::vector<PhaseCost> compute;
  double t_total_s = 0.0;  // slowest client's end-to-end latency
  double e_total_j = 0.0;  // energy summed over clients and phases
};

// Combine per-client phase costs; spans must share a positive length.
CostBreakdown aggregate(std::span<const PhaseCost> encryption,
                        std::span<const PhaseCost> transmission,
                        std::span<const PhaseCost> compute);

}  // namespace quhe::mec
