#include "quhe/mec_cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace quhe::mec {

namespace {

void check_lambda_domain(double lambda) {
  if (lambda < static_cast<double>(kLambdaFitLo) ||
      lambda > static_cast<double>(kLambdaFitHi))
    throw std::domain_error("ring dimension " + std::to_string(lambda) +
                            " outside the fitted range [2^15, 2^17]");
}

}  // namespace

FheParamSet::FheParamSet(std::vector<long> values) : values_(std::move(values)) {
  if (values_.empty())
    throw std::invalid_argument("ring dimension set must not be empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] < kLambdaFitLo || values_[i] > kLambdaFitHi)
      throw std::invalid_argument("ring dimension " + std::to_string(values_[i]) +
                                  " outside [2^15, 2^17]");
    if (i > 0 && values_[i] <= values_[i - 1])
      throw std::invalid_argument("ring dimension set must be strictly increasing");
  }
}

bool FheParamSet::contains(long v) const {
  return std::binary_search(values_.begin(), values_.end(), v);
}

double security_bits(double lambda) {
  if (!(lambda > 0.0))
    throw std::domain_error("security_bits: lambda must be positive");
  return 0.002 * lambda + 1.4789;
}

double eval_cycles(double lambda) {
  check_lambda_domain(lambda);
  double s = lambda + 64500.0;
  return 0.012 * s * s;
}

double decomp_cycles(double lambda) {
  check_lambda_domain(lambda);
  return 8917959.4 * lambda - 51292440000.0;
}

double job_cycles(double lambda, double cmp_tokens, double tokens_per_sample) {
  if (!(cmp_tokens > 0.0) || !(tokens_per_sample > 0.0))
    throw std::domain_error("job_cycles: workload terms must be positive");
  return (decomp_cycles(lambda) + eval_cycles(lambda)) * cmp_tokens /
         tokens_per_sample;
}

double uplink_rate(double p, double b, double g, double n0) {
  if (!(p > 0.0) || !(b > 0.0) || !(g > 0.0) || !(n0 > 0.0))
    throw std::domain_error("uplink_rate: all arguments must be positive");
  return b * std::log2(1.0 + p * g / (n0 * b));
}

PhaseCost encryption_cost(double se_cycles, double f_c, double kappa_c) {
  if (!(se_cycles > 0.0) || !(f_c > 0.0) || !(kappa_c > 0.0))
    throw std::domain_error("encryption_cost: all arguments must be positive");
  return {se_cycles / f_c, kappa_c * se_cycles * f_c * f_c};
}

PhaseCost transmission_cost(double tr_bits, double rate, double p) {
  if (!(tr_bits > 0.0) || !(rate > 0.0) || !(p > 0.0))
    throw std::domain_error("transmission_cost: all arguments must be positive");
  double t = tr_bits / rate;
  return {t, p * t};
}

PhaseCost compute_cost(double lambda, double cmp_tokens,
                       double tokens_per_sample, double f_s, double kappa_s) {
  if (!(f_s > 0.0) || !(kappa_s > 0.0))
    throw std::domain_error("compute_cost: f_s and kappa_s must be positive");
  double cycles = job_cycles(lambda, cmp_tokens, tokens_per_sample);
  return {cycles / f_s, kappa_s * cycles * f_s * f_s};
}

CostBreakdown aggregate(std::span<const PhaseCost> encryption,
                        std::span<const PhaseCost> transmission,
                        std::span<const PhaseCost> compute) {
  if (encryption.empty() || encryption.size() != transmission.size() ||
      encryption.size() != compute.size())
    throw std::invalid_argument("aggregate: phase spans must share a positive length");
  CostBreakdown out;
  out.encryption.assign(encryption.begin(), encryption.end());
  out.transmission.assign(transmission.begin(), transmission.end());
  out.compute.assign(compute.begin(), compute.end());
  for (std::size_t n = 0; n < encryption.size(); ++n) {
    double t = encryption[n].time_s + transmission[n].time_s + compute[n].time_s;
    out.t_total_s = std::max(out.t_total_s, t);
    out.e_total_j += encryption[n].energy_j + transmission[n].energy_j +
                     compute[n].energy_j;
  }
  return out;
}

}  // namespace quhe::mec
