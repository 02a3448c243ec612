#pragma once

#include <stdexcept>
#include <string>

namespace quhe {

// Thrown when a model instance or solver subproblem admits no feasible point.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on malformed scenario documents; the message carries the offending
// field path (e.g. "routes[2].links").
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace quhe
