#include "quhe/stage2.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "quhe/mec_cost.hpp"
#include "quhe/qkd_model.hpp"

namespace quhe::stage2 {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Value of a partial assignment, completed optimistically: open clients get
// their best gain, least energy, and least delay.  All sums and maxes run
// in client-index order, so for the same index set the arithmetic matches
// assignment_value term for term; since rounding is monotone, the result
// can never fall below the value of any completion.
struct Optimistic {
  std::vector<double> gain_max;
  std::vector<double> energy_min;
  std::vector<double> delay_min;
};

Optimistic optimistic_terms(const Instance& inst) {
  const int n = inst.client_count();
  Optimistic opt;
  opt.gain_max.resize(n);
  opt.energy_min.resize(n);
  opt.delay_min.resize(n);
  for (int i = 0; i < n; ++i) {
    opt.gain_max[i] = *std::max_element(inst.gain[i].begin(), inst.gain[i].end());
    opt.energy_min[i] =
        *std::min_element(inst.energy_j[i].begin(), inst.energy_j[i].end());
    opt.delay_min[i] =
        inst.base_delay_s[i] +
        *std::min_element(inst.cmp_delay_s[i].begin(), inst.cmp_delay_s[i].end());
  }
  return opt;
}

// choice[i] < 0 marks an open client.
double partial_value(const Instance& inst, const Optimistic& opt,
                     std::span<const int> choice) {
  double g = 0.0, e = 0.0, d = 0.0;
  for (int i = 0; i < inst.client_count(); ++i) {
    int k = choice[i];
    if (k >= 0) {
      g += inst.gain[i][k];
      e += inst.energy_j[i][k];
      d = std::max(d, inst.base_delay_s[i] + inst.cmp_delay_s[i][k]);
    } else {
      g += opt.gain_max[i];
      e += opt.energy_min[i];
      d = std::max(d, opt.delay_min[i]);
    }
  }
  return inst.constant + inst.alpha_msl * g - inst.alpha_e * e -
         inst.alpha_t * d;
}

bool better(double value, std::span<const int> choice, const Result& best) {
  if (value != best.value) return value > best.value;
  return std::lexicographical_compare(choice.begin(), choice.end(),
                                      best.choice.begin(), best.choice.end());
}

void record(const Instance& inst, double value, std::span<const int> choice,
            Result& best) {
  if (!better(value, choice, best)) return;
  best.value = value;
  best.choice.assign(choice.begin(), choice.end());
  best.lambda.resize(choice.size());
  for (std::size_t i = 0; i < choice.size(); ++i)
    best.lambda[i] = inst.options[choice[i]];
}

void check_instance(const Instance& inst) {
  const std::size_t n = inst.base_delay_s.size();
  if (n == 0 || inst.options.empty())
    throw std::invalid_argument("ring-choice instance is empty");
  const std::size_t k = inst.options.size();
  auto shaped = [&](const std::vector<std::vector<double>>& t) {
    return t.size() == n &&
           std::all_of(t.begin(), t.end(),
                       [&](const auto& row) { return row.size() == k; });
  };
  if (!shaped(inst.cmp_delay_s) || !shaped(inst.energy_j) || !shaped(inst.gain))
    throw std::invalid_argument("ring-choice tables have inconsistent shapes");
}

}  // namespace

Instance make_instance(const Scenario& s, std::span<const double> gains,
                       const AllocationState& state) {
  const std::size_t n = s.clients.size();
  if (gains.size() != n || state.p.size() != n || state.b.size() != n ||
      state.f_c.size() != n || state.f_s.size() != n)
    throw std::invalid_argument("per-client vector size mismatch");

  Instance inst;
  inst.options = s.lambda_set.values();
  inst.alpha_msl = s.weights.alpha_msl;
  inst.alpha_t = s.weights.alpha_t;
  inst.alpha_e = s.weights.alpha_e;

  double fixed_energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = s.clients[i];
    mec::PhaseCost enc = mec::encryption_cost(c.se_cycles, state.f_c[i], c.kappa_c);
    double rate =
        mec::uplink_rate(state.p[i], state.b[i], gains[i], s.server.noise_psd_w_hz);
    mec::PhaseCost tr = mec::transmission_cost(c.tr_bits, rate, state.p[i]);
    inst.base_delay_s.push_back(enc.time_s + tr.time_s);
    fixed_energy += enc.energy_j + tr.energy_j;

    std::vector<double> cmp_t, cmp_e, msl;
    for (long lam : inst.options) {
      mec::PhaseCost cc = mec::compute_cost(static_cast<double>(lam), c.cmp_tokens,
                                            c.tokens_per_sample, state.f_s[i],
                                            s.server.kappa_s);
      cmp_t.push_back(cc.time_s);
      cmp_e.push_back(cc.energy_j);
      msl.push_back(c.sigma * mec::security_bits(static_cast<double>(lam)));
    }
    inst.cmp_delay_s.push_back(std::move(cmp_t));
    inst.energy_j.push_back(std::move(cmp_e));
    inst.gain.push_back(std::move(msl));
  }

  inst.constant = s.weights.alpha_qkd *
                      qkd::key_utility(s.topology, state.phi, state.w) -
                  s.weights.alpha_e * fixed_energy;
  return inst;
}

double assignment_value(const Instance& inst, std::span<const int> choice) {
  check_instance(inst);
  if (choice.size() != inst.base_delay_s.size())
    throw std::invalid_argument("assignment length mismatch");
  for (int k : choice)
    if (k < 0 || k >= inst.option_count())
      throw std::invalid_argument("assignment index out of range");
  return partial_value(inst, optimistic_terms(inst), choice);
}

Result solve(const Instance& inst) {
  check_instance(inst);
  const int n = inst.client_count();
  const int k = inst.option_count();
  const Optimistic opt = optimistic_terms(inst);

  // Branch on the client with the largest objective swing first.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> swing(n);
  for (int i = 0; i < n; ++i) {
    auto spread = [](const std::vector<double>& row) {
      auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      return *hi - *lo;
    };
    swing[i] = inst.alpha_msl * spread(inst.gain[i]) +
               inst.alpha_e * spread(inst.energy_j[i]) +
               inst.alpha_t * spread(inst.cmp_delay_s[i]);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return swing[a] > swing[b]; });

  Result best;
  best.value = kNegInf;

  // Seed the incumbent: every uniform assignment, plus the per-client pick
  // that scores best when each client is charged its own full delay.
  std::vector<int> seed(n);
  for (int kk = 0; kk < k; ++kk) {
    std::fill(seed.begin(), seed.end(), kk);
    record(inst, partial_value(inst, opt, seed), seed, best);
  }
  for (int i = 0; i < n; ++i) {
    int arg = 0;
    double top = kNegInf;
    for (int kk = 0; kk < k; ++kk) {
      double sc = inst.alpha_msl * inst.gain[i][kk] -
                  inst.alpha_e * inst.energy_j[i][kk] -
                  inst.alpha_t * (inst.base_delay_s[i] + inst.cmp_delay_s[i][kk]);
      if (sc > top) {
        top = sc;
        arg = kk;
      }
    }
    seed[i] = arg;
  }
  record(inst, partial_value(inst, opt, seed), seed, best);

  struct Node {
    double bound;
    int depth;
    std::vector<int> choice;  // -1 where open
  };
  auto below = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return std::lexicographical_compare(b.choice.begin(), b.choice.end(),
                                        a.choice.begin(), a.choice.end());
  };
  std::priority_queue<Node, std::vector<Node>, decltype(below)> open(below);
  open.push({partial_value(inst, opt, std::vector<int>(n, -1)), 0,
             std::vector<int>(n, -1)});

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    // Bounds dominate every completion, so once the best open bound falls
    // short of the incumbent nothing left can win or tie.
    if (node.bound < best.value) break;
    ++best.nodes;
    int client = order[node.depth];
    for (int kk = 0; kk < k; ++kk) {
      node.choice[client] = kk;
      double v = partial_value(inst, opt, node.choice);
      if (node.depth + 1 == n) {
        record(inst, v, node.choice, best);
      } else if (v >= best.value) {
        open.push({v, node.depth + 1, node.choice});
      }
    }
    node.choice[client] = -1;
  }
  return best;
}

Result exhaustive(const Instance& inst, long cap) {
  check_instance(inst);
  const int n = inst.client_count();
  const int k = inst.option_count();
  long leaves = 1;
  for (int i = 0; i < n; ++i) {
    if (leaves > cap / k)
      throw std::length_error("assignment space exceeds the enumeration cap");
    leaves *= k;
  }
  const Optimistic opt = optimistic_terms(inst);

  Result best;
  best.value = kNegInf;
  std::vector<int> choice(n, 0);
  for (;;) {
    record(inst, partial_value(inst, opt, choice), choice, best);
    ++best.nodes;
    int i = n - 1;
    while (i >= 0 && choice[i] == k - 1) choice[i--] = 0;
    if (i < 0) break;
    ++choice[i];
  }
  return best;
}

}  // namespace quhe::stage2
