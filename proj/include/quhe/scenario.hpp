#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "quhe/mec_cost.hpp"
#include "quhe/qkd_model.hpp"

namespace quhe {

// Weights of the four objective terms: key utility, security utility,
// latency penalty, energy penalty.
struct ObjectiveWeights {
  double alpha_qkd = 1.0;
  double alpha_msl = 0.01;
  double alpha_t = 1e-4;
  double alpha_e = 1e-4;
};

// Log-distance path loss with optional Rayleigh fading.
struct ChannelModel {
  double pl_intercept_db = 128.1;      // loss at 1 km
  double pl_slope_db_per_decade = 37.6;
  double radius_m = 1000.0;            // clients drawn uniformly within this range
  bool rayleigh = true;
};

struct SolverDefaults {
  double epsilon = 1e-4;          // convergence threshold on objective change
  std::uint64_t seed = 42;
  int max_outer_iterations = 20;
};

// One simulation instance: QKD substrate, MEC workload, objective weights.
struct Scenario {
  qkd::Topology topology;
  std::vector<mec::ClientProfile> clients;
  mec::ServerProfile server;
  mec::FheParamSet lambda_set;
  ObjectiveWeights weights;
  ChannelModel channel;
  SolverDefaults solver;
};

// Consistency checks spanning sections (client/route pairing, positive
// budgets, at least one positive weight).  Throws ScenarioError.
void validate_scenario(const Scenario& s);

// The bundled 18-link SURFnet instance with six client pairs.
Scenario surfnet_default();

// JSON document handling.  Parsing is strict: unknown keys and missing
// fields are errors that name the offending path.
Scenario parse_scenario(const std::string& text,
                        const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& s);

// Mean channel gain at distance d_m (path loss only, no fading).
double path_loss_gain(const ChannelModel& model, double d_m);

// Per-client uplink gains: uniform distance in (0, radius], then a unit-mean
// exponential fade when Rayleigh fading is on.  Deterministic in the seed;
// each client consumes its draws in client order (distance first).
std::vector<double> realize_channels(const Scenario& s, std::uint64_t seed);

}  // namespace quhe
