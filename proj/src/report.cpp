#include "quhe/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "quhe/objective.hpp"
#include "quhe/qkd_model.hpp"
#include "quhe/rng.hpp"
#include "quhe/stage1.hpp"
#include "quhe/stage2.hpp"
#include "quhe/stage3.hpp"

namespace quhe::report {
namespace {

using json = nlohmann::ordered_json;

constexpr const char* kMethods[] = {"quhe", "aa", "olaa", "occr"};
constexpr const char* kParameters[] = {"b_total", "p_max", "f_max_client",
                                       "f_total_server"};

bool known(const std::string& name, std::span<const char* const> table) {
  return std::find(table.begin(), table.end(), name) != table.end();
}

// Shortest round-trip decimal form; locale-free.
std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

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

Check rate_check(const stage1::Result& res) {
  double worst = 0.0;
  for (std::size_t r = 0; r < kReferenceRates.size(); ++r)
    worst = std::max(
        worst, std::fabs(res.phi[r] - kReferenceRates[r]) / kReferenceRates[r]);
  return {"key rates match the reference solution (1% relative)",
          worst <= 0.01, "max relative deviation " + fmt(worst)};
}

Check werner_check(const Scenario& s, const stage1::Result& res) {
  double worst = 0.0;
  for (std::size_t l = 0; l < kReferenceWerner.size(); ++l)
    worst = std::max(worst, std::fabs(res.w[l] - kReferenceWerner[l]));
  const bool idle_exact = res.w[s.topology.link_index(6)] == 1.0;
  std::string detail = "max absolute deviation " + fmt(worst);
  if (!idle_exact) detail += "; idle link drifted off 1";
  return {"werner parameters match the reference solution (2e-3 absolute)",
          worst <= 2e-3 && idle_exact, detail};
}

Check closed_form_check(const Scenario& s) {
  std::vector<double> phi(kReferenceRates.begin(), kReferenceRates.end());
  std::vector<double> w = qkd::optimal_werner_from_rates(s.topology, phi);
  double worst = 0.0;
  for (int id : {1, 15, 16, 17})
    worst = std::max(
        worst, std::fabs(w[s.topology.link_index(id)] - kReferenceWerner[id - 1]));
  return {"capacity-tight werner recovered from the reference rates "
          "(links 1, 15, 16, 17)",
          worst <= 5e-5, "max absolute deviation " + fmt(worst)};
}

Check ring_identity_check(const Scenario& s) {
  std::vector<double> gains = realize_channels(s, s.solver.seed);
  AllocationState st = orchestrator::default_initial_state(s, gains);
  stage2::Instance inst = stage2::make_instance(s, gains, st);
  stage2::Result bb = stage2::solve(inst);
  stage2::Result ex = stage2::exhaustive(inst);
  const bool ok = bb.value == ex.value && bb.choice == ex.choice;
  return {"ring search matches exhaustive enumeration",
          ok,
          fmt(static_cast<double>(bb.nodes)) + " nodes against " +
              fmt(static_cast<double>(ex.nodes)) + " assignments"};
}

Check surrogate_check() {
  SplitMix64 rng(0x7ab1e5ULL);
  double worst_eq = 0.0;
  bool majorizes = true;
  for (int i = 0; i < 1000; ++i) {
    const double p = std::exp(rng.uniform(std::log(1e-3), std::log(1.0)));
    const double d = std::exp(rng.uniform(std::log(1e3), std::log(1e10)));
    const double r = std::exp(rng.uniform(std::log(1e3), std::log(1e9)));
    const double z_star = 1.0 / (2.0 * p * d * r);
    const double truth = p * d / r;
    worst_eq = std::max(
        worst_eq,
        std::fabs(stage3::surrogate_tr_energy(p, d, r, z_star) - truth) / truth);
    const double z = z_star * std::exp(rng.uniform(-3.0, 3.0));
    majorizes =
        majorizes && stage3::surrogate_tr_energy(p, d, r, z) >= truth * (1.0 - 1e-12);
  }
  std::string detail = "max relative gap at the closed-form weight " + fmt(worst_eq);
  if (!majorizes) detail += "; surrogate dipped below the true ratio";
  return {"transmission-energy surrogate is tight and never optimistic",
          worst_eq <= 1e-12 && majorizes, detail};
}

orchestrator::Baseline parse_baseline(const std::string& method) {
  if (method == "aa") return orchestrator::Baseline::kAA;
  if (method == "olaa") return orchestrator::Baseline::kOLAA;
  if (method == "occr") return orchestrator::Baseline::kOCCR;
  throw std::invalid_argument("unknown method: " + method);
}

json phase_json(const mec::PhaseCost& c) {
  return {{"time_s", c.time_s}, {"energy_j", c.energy_j}};
}

}  // namespace

std::vector<Check> verify_reference_tables(const Scenario& s) {
  if (s.topology.routes().size() != kReferenceRates.size() ||
      s.topology.links().size() != kReferenceWerner.size())
    throw std::invalid_argument(
        "reference tables expect the bundled six-route, eighteen-link network");

  stage1::Result res = stage1::solve(s);
  std::vector<Check> out;
  out.push_back(rate_check(res));
  out.push_back(werner_check(s, res));
  out.push_back(closed_form_check(s));
  out.push_back(ring_identity_check(s));
  out.push_back(surrogate_check());
  return out;
}

std::vector<Check> verify_reference_tables() {
  return verify_reference_tables(surfnet_default());
}

MethodRun run_method(const Scenario& s, const std::string& method,
                     const orchestrator::SolveSettings& settings) {
  Timer timer;
  MethodRun run;
  run.method = method;
  run.seed = settings.seed;
  if (method == "quhe") {
    orchestrator::SolveResult res = orchestrator::run_quhe(s, settings);
    run.state = std::move(res.state);
    run.gains = std::move(res.gains);
    run.trace = std::move(res.trace);
  } else {
    const orchestrator::Baseline kind = parse_baseline(method);
    run.gains = realize_channels(s, settings.seed);
    orchestrator::BaselineResult res =
        orchestrator::run_baseline(s, run.gains, kind, settings);
    run.state = std::move(res.state);
    run.trace.records.push_back({0, method, res.objective, 0.0});
    run.trace.converged = true;
    run.trace.stage1_calls = 1;
    run.trace.stage2_calls = kind == orchestrator::Baseline::kOLAA ? 1 : 0;
    run.trace.stage3_calls = kind == orchestrator::Baseline::kOCCR ? 1 : 0;
  }
  run.eval = evaluate(s, run.gains, run.state);
  run.feasibility = check_feasibility(s, run.gains, run.state);
  run.wall_ms = timer.ms();
  return run;
}

ResultRow make_row(const std::string& param, double value,
                   const MethodRun& run) {
  ResultRow row;
  row.method = run.method;
  row.param = param;
  row.value = value;
  row.seed = run.seed;
  row.objective = run.eval.objective;
  row.t_total_s = run.eval.costs.t_total_s;
  row.e_total_j = run.eval.costs.e_total_j;
  row.u_msl = run.eval.util.u_msl;
  row.u_qkd = run.eval.util.u_qkd;
  row.converged = run.trace.converged && run.feasibility.feasible;
  row.wall_ms = run.wall_ms;
  return row;
}

Scenario with_parameter(const Scenario& s, const std::string& name,
                        double value) {
  Scenario out = s;
  if (name == "b_total") {
    out.server.b_total_hz = value;
  } else if (name == "f_total_server") {
    out.server.f_total_hz = value;
  } else if (name == "p_max") {
    for (auto& c : out.clients) c.p_max_w = value;
  } else if (name == "f_max_client") {
    for (auto& c : out.clients) c.f_max_hz = value;
  } else {
    throw std::invalid_argument("unknown sweep parameter: " + name);
  }
  validate_scenario(out);
  return out;
}

std::vector<ResultRow> run_sweep(const Scenario& base, const SweepSpec& spec,
                                 const orchestrator::SolveSettings& settings) {
  if (!known(spec.parameter, kParameters))
    throw std::invalid_argument("unknown sweep parameter: " + spec.parameter);
  if (spec.values.empty())
    throw std::invalid_argument("sweep needs at least one parameter value");
  if (spec.methods.empty())
    throw std::invalid_argument("sweep needs at least one method");
  for (const auto& m : spec.methods)
    if (!known(m, kMethods)) throw std::invalid_argument("unknown method: " + m);

  std::vector<double> values = spec.values;
  std::vector<std::string> methods = spec.methods;
  std::vector<std::uint64_t> seeds =
      spec.seeds.empty() ? std::vector<std::uint64_t>{settings.seed} : spec.seeds;
  std::sort(values.begin(), values.end());
  std::sort(methods.begin(), methods.end());
  std::sort(seeds.begin(), seeds.end());

  struct Task {
    double value;
    std::string method;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (double v : values)
    for (const auto& m : methods)
      for (std::uint64_t sd : seeds) tasks.push_back({v, m, sd});

  std::vector<ResultRow> rows(tasks.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = cursor.fetch_add(1);
      if (k >= tasks.size()) return;
      const Task& t = tasks[k];
      orchestrator::SolveSettings st = settings;
      st.seed = t.seed;
      try {
        Scenario sc = with_parameter(base, spec.parameter, t.value);
        rows[k] = make_row(spec.parameter, t.value, run_method(sc, t.method, st));
      } catch (const std::exception&) {
        rows[k].method = t.method;
        rows[k].param = spec.parameter;
        rows[k].value = t.value;
        rows[k].seed = t.seed;
        rows[k].converged = false;
      }
    }
  };

  const unsigned n = std::max(1u, std::min({std::thread::hardware_concurrency(),
                                            8u, static_cast<unsigned>(tasks.size())}));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i + 1 < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return rows;
}

std::string to_csv(std::span<const ResultRow> rows) {
  std::string out =
      "method,param,value,seed,objective,t_total_s,e_total_j,u_msl,u_qkd,"
      "converged,wall_ms\n";
  for (const auto& r : rows) {
    out += r.method;
    out += ',';
    out += r.param;
    out += ',';
    out += fmt(r.value);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += fmt(r.objective);
    out += ',';
    out += fmt(r.t_total_s);
    out += ',';
    out += fmt(r.e_total_j);
    out += ',';
    out += fmt(r.u_msl);
    out += ',';
    out += fmt(r.u_qkd);
    out += ',';
    out += r.converged ? "true" : "false";
    out += ',';
    out += fmt(r.wall_ms);
    out += '\n';
  }
  return out;
}

std::string result_document(const Scenario& s, const MethodRun& run) {
  json doc;
  doc["method"] = run.method;
  doc["seed"] = run.seed;
  doc["converged"] = run.trace.converged;
  doc["objective"] = run.eval.objective;
  doc["utility"] = {{"u_qkd", run.eval.util.u_qkd},
                    {"u_msl", run.eval.util.u_msl}};

  json state;
  state["phi"] = run.state.phi;
  state["w"] = run.state.w;
  state["lambda"] = run.state.lambda;
  state["p_w"] = run.state.p;
  state["b_hz"] = run.state.b;
  state["f_c_hz"] = run.state.f_c;
  state["f_s_hz"] = run.state.f_s;
  state["t_bound_s"] = run.state.t_bound_s;
  doc["state"] = state;

  json costs;
  costs["t_total_s"] = run.eval.costs.t_total_s;
  costs["e_total_j"] = run.eval.costs.e_total_j;
  json per_client = json::array();
  for (std::size_t i = 0; i < s.clients.size(); ++i) {
    json c;
    c["id"] = s.clients[i].id;
    c["lambda"] = run.state.lambda[i];
    c["encryption"] = phase_json(run.eval.costs.encryption[i]);
    c["transmission"] = phase_json(run.eval.costs.transmission[i]);
    c["compute"] = phase_json(run.eval.costs.compute[i]);
    per_client.push_back(std::move(c));
  }
  costs["per_client"] = std::move(per_client);
  doc["costs"] = costs;

  json feas;
  feas["feasible"] = run.feasibility.feasible;
  json checks = json::array();
  for (const auto& c : run.feasibility.checks)
    checks.push_back(
        {{"name", c.name}, {"ok", c.ok}, {"violation", c.violation}});
  feas["checks"] = std::move(checks);
  doc["feasibility"] = feas;
  return doc.dump(2) + "\n";
}

std::string trace_document(const MethodRun& run) {
  json doc;
  doc["method"] = run.method;
  doc["seed"] = run.seed;
  doc["converged"] = run.trace.converged;
  doc["objective"] =
      run.trace.records.empty() ? 0.0 : run.trace.records.back().objective;
  doc["block_calls"] = {{"rates", run.trace.stage1_calls},
                        {"rings", run.trace.stage2_calls},
                        {"radio", run.trace.stage3_calls}};
  doc["inner_iterations"] = run.trace.inner_iterations;
  json records = json::array();
  for (const auto& rec : run.trace.records)
    records.push_back({{"outer", rec.outer},
                       {"stage", rec.stage},
                       {"objective", rec.objective}});
  doc["records"] = std::move(records);
  return doc.dump(2) + "\n";
}

std::string robustness_document(const orchestrator::RobustnessSummary& sum,
                                std::uint64_t seed, int count) {
  json doc;
  doc["seed"] = seed;
  doc["runs"] = count;
  doc["best"] = sum.best;
  doc["worst"] = sum.worst;
  doc["within_20pct_of_best"] = sum.within_20pct;
  doc["traces_monotone"] = sum.traces_monotone;
  doc["band_shares"] = {{"10_15", sum.share_10_15},
                        {"5_10", sum.share_5_10},
                        {"neg25_0", sum.share_neg25_0}};
  doc["objectives"] = sum.objectives;
  return doc.dump(2) + "\n";
}

}  // namespace quhe::report
