#include "quhe/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "quhe/errors.hpp"
#include "quhe/rng.hpp"

namespace quhe {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ScenarioError(path + ": " + msg);
}

const json& get_field(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required field");
  return *it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) fail(path + "." + item.key(), "unknown field");
  }
}

double get_double(const json& obj, const std::string& path, const char* key) {
  const json& v = get_field(obj, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

long get_integer(const json& obj, const std::string& path, const char* key) {
  const json& v = get_field(obj, path, key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<long>();
}

bool get_bool(const json& obj, const std::string& path, const char* key) {
  const json& v = get_field(obj, path, key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const std::string& path, const char* key) {
  const json& v = get_field(obj, path, key);
  if (!v.is_array()) fail(path + "." + key, "expected an array");
  return v;
}

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

Scenario parse_document(const json& doc, const std::string& origin) {
  check_keys(doc, origin, {"links", "routes", "clients", "server", "weights",
                           "channel", "solver"});

  std::vector<qkd::Link> links;
  const json& jlinks = get_array(doc, origin, "links");
  for (std::size_t i = 0; i < jlinks.size(); ++i) {
    std::string p = idx("links", i);
    check_keys(jlinks[i], p, {"id", "beta", "length_km"});
    qkd::Link lk;
    lk.id = static_cast<int>(get_integer(jlinks[i], p, "id"));
    lk.beta = get_double(jlinks[i], p, "beta");
    lk.length_km = get_double(jlinks[i], p, "length_km");
    links.push_back(lk);
  }

  std::vector<qkd::Route> routes;
  const json& jroutes = get_array(doc, origin, "routes");
  for (std::size_t i = 0; i < jroutes.size(); ++i) {
    std::string p = idx("routes", i);
    check_keys(jroutes[i], p, {"id", "end_nodes", "links"});
    qkd::Route rt;
    rt.id = static_cast<int>(get_integer(jroutes[i], p, "id"));
    const json& ends = get_array(jroutes[i], p, "end_nodes");
    if (ends.size() != 2) fail(p + ".end_nodes", "expected exactly two node names");
    rt.end_a = get_string(ends[0], p + ".end_nodes[0]");
    rt.end_b = get_string(ends[1], p + ".end_nodes[1]");
    const json& rl = get_array(jroutes[i], p, "links");
    if (rl.empty()) fail(p + ".links", "route must traverse at least one link");
    for (std::size_t k = 0; k < rl.size(); ++k) {
      if (!rl[k].is_number_integer())
        fail(p + ".links[" + std::to_string(k) + "]", "expected an integer link id");
      rt.links.push_back(rl[k].get<int>());
    }
    routes.push_back(rt);
  }

  std::vector<mec::ClientProfile> clients;
  const json& jclients = get_array(doc, origin, "clients");
  for (std::size_t i = 0; i < jclients.size(); ++i) {
    std::string p = idx("clients", i);
    check_keys(jclients[i], p,
               {"id", "se_cycles", "tr_bits", "cmp_tokens", "tokens_per_sample",
                "kappa_c", "p_max_w", "f_max_hz", "phi_min", "sigma"});
    mec::ClientProfile c;
    c.id = static_cast<int>(get_integer(jclients[i], p, "id"));
    c.se_cycles = get_double(jclients[i], p, "se_cycles");
    c.tr_bits = get_double(jclients[i], p, "tr_bits");
    c.cmp_tokens = get_double(jclients[i], p, "cmp_tokens");
    c.tokens_per_sample = get_double(jclients[i], p, "tokens_per_sample");
    c.kappa_c = get_double(jclients[i], p, "kappa_c");
    c.p_max_w = get_double(jclients[i], p, "p_max_w");
    c.f_max_hz = get_double(jclients[i], p, "f_max_hz");
    c.phi_min = get_double(jclients[i], p, "phi_min");
    c.sigma = get_double(jclients[i], p, "sigma");
    clients.push_back(c);
  }

  const json& jserver = get_field(doc, origin, "server");
  check_keys(jserver, "server",
             {"kappa_s", "f_total_hz", "b_total_hz", "noise_psd_dbm_hz",
              "lambda_set"});
  mec::ServerProfile server;
  server.kappa_s = get_double(jserver, "server", "kappa_s");
  server.f_total_hz = get_double(jserver, "server", "f_total_hz");
  server.b_total_hz = get_double(jserver, "server", "b_total_hz");
  server.noise_psd_dbm_hz = get_double(jserver, "server", "noise_psd_dbm_hz");
  server.noise_psd_w_hz = std::pow(10.0, server.noise_psd_dbm_hz / 10.0 - 3.0);

  const json& jset = get_array(jserver, "server", "lambda_set");
  std::vector<long> lambdas;
  for (std::size_t i = 0; i < jset.size(); ++i) {
    if (!jset[i].is_number_integer())
      fail("server.lambda_set[" + std::to_string(i) + "]", "expected an integer");
    lambdas.push_back(jset[i].get<long>());
  }

  const json& jweights = get_field(doc, origin, "weights");
  check_keys(jweights, "weights", {"alpha_qkd", "alpha_msl", "alpha_t", "alpha_e"});
  ObjectiveWeights weights;
  weights.alpha_qkd = get_double(jweights, "weights", "alpha_qkd");
  weights.alpha_msl = get_double(jweights, "weights", "alpha_msl");
  weights.alpha_t = get_double(jweights, "weights", "alpha_t");
  weights.alpha_e = get_double(jweights, "weights", "alpha_e");

  const json& jchannel = get_field(doc, origin, "channel");
  check_keys(jchannel, "channel",
             {"pl_intercept_db", "pl_slope_db_per_decade", "radius_m", "rayleigh"});
  ChannelModel channel;
  channel.pl_intercept_db = get_double(jchannel, "channel", "pl_intercept_db");
  channel.pl_slope_db_per_decade =
      get_double(jchannel, "channel", "pl_slope_db_per_decade");
  channel.radius_m = get_double(jchannel, "channel", "radius_m");
  channel.rayleigh = get_bool(jchannel, "channel", "rayleigh");

  const json& jsolver = get_field(doc, origin, "solver");
  check_keys(jsolver, "solver", {"epsilon", "seed", "max_outer_iterations"});
  SolverDefaults solver;
  solver.epsilon = get_double(jsolver, "solver", "epsilon");
  long seed = get_integer(jsolver, "solver", "seed");
  if (seed < 0) fail("solver.seed", "seed must be non-negative");
  solver.seed = static_cast<std::uint64_t>(seed);
  solver.max_outer_iterations =
      static_cast<int>(get_integer(jsolver, "solver", "max_outer_iterations"));

  try {
    Scenario s{qkd::Topology(std::move(links), std::move(routes)),
               std::move(clients),
               server,
               mec::FheParamSet(std::move(lambdas)),
               weights,
               channel,
               solver};
    validate_scenario(s);
    return s;
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(origin + ": " + e.what());
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ScenarioError(msg);
}

}  // namespace

void validate_scenario(const Scenario& s) {
  require(static_cast<int>(s.clients.size()) == s.topology.route_count(),
          "clients: need exactly one client per route");
  for (std::size_t i = 0; i < s.clients.size(); ++i) {
    const auto& c = s.clients[i];
    std::string p = idx("clients", i);
    require(c.id == s.topology.routes()[i].id,
            p + ".id: must match the route id at the same position");
    require(c.se_cycles > 0.0, p + ".se_cycles: must be positive");
    require(c.tr_bits > 0.0, p + ".tr_bits: must be positive");
    require(c.cmp_tokens > 0.0, p + ".cmp_tokens: must be positive");
    require(c.tokens_per_sample > 0.0, p + ".tokens_per_sample: must be positive");
    require(c.kappa_c > 0.0, p + ".kappa_c: must be positive");
    require(c.p_max_w > 0.0, p + ".p_max_w: must be positive");
    require(c.f_max_hz > 0.0, p + ".f_max_hz: must be positive");
    require(c.phi_min > 0.0, p + ".phi_min: must be positive");
    require(c.sigma > 0.0, p + ".sigma: must be positive");
  }
  require(s.server.kappa_s > 0.0, "server.kappa_s: must be positive");
  require(s.server.f_total_hz > 0.0, "server.f_total_hz: must be positive");
  require(s.server.b_total_hz > 0.0, "server.b_total_hz: must be positive");
  require(s.server.noise_psd_w_hz > 0.0, "server.noise_psd_dbm_hz: implies zero noise");
  require(s.weights.alpha_qkd >= 0.0 && s.weights.alpha_msl >= 0.0 &&
              s.weights.alpha_t >= 0.0 && s.weights.alpha_e >= 0.0,
          "weights: must be non-negative");
  require(s.weights.alpha_qkd > 0.0 || s.weights.alpha_msl > 0.0 ||
              s.weights.alpha_t > 0.0 || s.weights.alpha_e > 0.0,
          "weights: at least one weight must be positive");
  require(s.channel.radius_m > 0.0, "channel.radius_m: must be positive");
  require(s.channel.pl_slope_db_per_decade >= 0.0,
          "channel.pl_slope_db_per_decade: must be non-negative");
  require(s.solver.epsilon > 0.0, "solver.epsilon: must be positive");
  require(s.solver.max_outer_iterations >= 1,
          "solver.max_outer_iterations: must be at least 1");
}

Scenario surfnet_default() {
  const double betas[18] = {89.84, 53.79, 77.47, 69.44, 65.12, 40.76,
                            54.17, 56.25, 99.02, 100.98, 68.75, 49.35,
                            52.40, 84.63, 80.54, 82.41, 90.52, 46.82};
  const double lengths[18] = {30.6, 60.4, 38.9, 44.2, 47.7, 78.7,
                              60.0, 58.1, 25.7, 24.4, 44.7, 66.3,
                              62.5, 33.8, 36.7, 35.4, 30.2, 70.0};
  std::vector<qkd::Link> links;
  for (int l = 0; l < 18; ++l) links.push_back({l + 1, betas[l], lengths[l]});

  std::vector<qkd::Route> routes = {
      {1, "Hilversum", "Delft", {17, 2, 1}},
      {2, "Hilversum", "Zwolle", {17, 3, 4, 5}},
      {3, "Hilversum", "Apeldoorn", {16, 4, 5, 11, 10}},
      {4, "Hilversum", "Rotterdam", {15, 18}},
      {5, "Hilversum", "Arnhem", {15, 14, 13, 12, 9}},
      {6, "Hilversum", "Enschede", {15, 14, 13, 12, 8, 7}},
  };

  const double sigmas[6] = {0.1, 0.1, 0.1, 0.2, 0.2, 0.3};
  std::vector<mec::ClientProfile> clients;
  for (int n = 0; n < 6; ++n) {
    mec::ClientProfile c;
    c.id = n + 1;
    c.se_cycles = 1e6;
    c.tr_bits = 3e9;
    c.cmp_tokens = 160.0;
    c.tokens_per_sample = 10.0;
    c.kappa_c = 1e-28;
    c.p_max_w = 0.2;
    c.f_max_hz = 3e9;
    c.phi_min = 0.5;
    c.sigma = sigmas[n];
    clients.push_back(c);
  }

  mec::ServerProfile server;
  server.kappa_s = 1e-28;
  server.f_total_hz = 2e10;
  server.b_total_hz = 1e7;
  server.noise_psd_dbm_hz = -174.0;
  server.noise_psd_w_hz = std::pow(10.0, server.noise_psd_dbm_hz / 10.0 - 3.0);

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

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(origin + ": " + e.what());
  }
  return parse_document(doc, origin);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string serialize_scenario(const Scenario& s) {
  json doc;
  doc["links"] = json::array();
  for (const auto& lk : s.topology.links())
    doc["links"].push_back(
        {{"id", lk.id}, {"beta", lk.beta}, {"length_km", lk.length_km}});
  doc["routes"] = json::array();
  for (const auto& rt : s.topology.routes())
    doc["routes"].push_back({{"id", rt.id},
                             {"end_nodes", {rt.end_a, rt.end_b}},
                             {"links", rt.links}});
  doc["clients"] = json::array();
  for (const auto& c : s.clients)
    doc["clients"].push_back({{"id", c.id},
                              {"se_cycles", c.se_cycles},
                              {"tr_bits", c.tr_bits},
                              {"cmp_tokens", c.cmp_tokens},
                              {"tokens_per_sample", c.tokens_per_sample},
                              {"kappa_c", c.kappa_c},
                              {"p_max_w", c.p_max_w},
                              {"f_max_hz", c.f_max_hz},
                              {"phi_min", c.phi_min},
                              {"sigma", c.sigma}});
  doc["server"] = {{"kappa_s", s.server.kappa_s},
                   {"f_total_hz", s.server.f_total_hz},
                   {"b_total_hz", s.server.b_total_hz},
                   {"noise_psd_dbm_hz", s.server.noise_psd_dbm_hz},
                   {"lambda_set", s.lambda_set.values()}};
  doc["weights"] = {{"alpha_qkd", s.weights.alpha_qkd},
                    {"alpha_msl", s.weights.alpha_msl},
                    {"alpha_t", s.weights.alpha_t},
                    {"alpha_e", s.weights.alpha_e}};
  doc["channel"] = {{"pl_intercept_db", s.channel.pl_intercept_db},
                    {"pl_slope_db_per_decade", s.channel.pl_slope_db_per_decade},
                    {"radius_m", s.channel.radius_m},
                    {"rayleigh", s.channel.rayleigh}};
  doc["solver"] = {{"epsilon", s.solver.epsilon},
                   {"seed", s.solver.seed},
                   {"max_outer_iterations", s.solver.max_outer_iterations}};
  return doc.dump(2) + "\n";
}

double path_loss_gain(const ChannelModel& model, double d_m) {
  if (!(d_m > 0.0)) throw std::domain_error("path_loss_gain: distance must be positive");
  double loss_db = model.pl_intercept_db +
                   model.pl_slope_db_per_decade * std::log10(d_m / 1000.0);
  return std::pow(10.0, -loss_db / 10.0);
}

std::vector<double> realize_channels(const Scenario& s, std::uint64_t seed) {
  SplitMix64 gen(seed);
  std::vector<double> gains;
  gains.reserve(s.clients.size());
  for (std::size_t n = 0; n < s.clients.size(); ++n) {
    double d = s.channel.radius_m * (1.0 - gen.uniform());
    double g = path_loss_gain(s.channel, d);
    if (s.channel.rayleigh) {
      double fade = gen.exponential();
      while (!(fade > 0.0)) fade = gen.exponential();
      g *= fade;
    }
    gains.push_back(g);
  }
  return gains;
}

}  // namespace quhe
