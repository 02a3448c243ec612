#pragma once

#include <span>
#include <string>
#include <vector>

namespace quhe::qkd {

// Werner parameter below which the distillable key fraction is zero.
// secret_key_fraction() clamps there; the exact root of the raw curve is
// recoverable through find_key_fraction_root().
inline constexpr double kWernerThreshold = 0.779944;

struct Link {
  int id = 0;           // positive, unique within a topology
  double beta = 0.0;    // entanglement generation rate cap, pairs/s
  double length_km = 0.0;
};

struct Route {
  int id = 0;                 // positive, unique within a topology
  std::string end_a, end_b;   // descriptive only
  std::vector<int> links;     // ordered link ids, source to destination
};

// Static QKD network: repeater links plus one fixed route per client pair.
// Link and route order is preserved from construction; per-link and
// per-route vectors elsewhere in the library are indexed by that order.
class Topology {
 public:
  Topology(std::vector<Link> links, std::vector<Route> routes);

  int link_count() const { return static_cast<int>(links_.size()); }
  int route_count() const { return static_cast<int>(routes_.size()); }

  const std::vector<Link>& links() const { return links_; }
  const std::vector<Route>& routes() const { return routes_; }

  // Index lookups throw std::out_of_range for unknown ids.
  int link_index(int link_id) const;
  int route_index(int route_id) const;

  // Link indices traversed by route `r` (by route index).
  const std::vector<int>& route_links(int r) const { return route_links_[r]; }
  // Route indices crossing link `l` (by link index).
  const std::vector<int>& link_routes(int l) const { return link_routes_[l]; }
  // A link is used when at least one route crosses it.
  bool link_used(int l) const { return !link_routes_[l].empty(); }

 private:
  std::vector<Link> links_;
  std::vector<Route> routes_;
  std::vector<std::vector<int>> route_links_;
  std::vector<std::vector<int>> link_routes_;
};

// Entangled-pair capacity of a link run at Werner parameter w: beta*(1-w).
// Higher fidelity (w near 1) costs rate.  Domain: beta > 0, w in (0, 1].
double link_capacity(double beta, double w);

// Distillable secret key fraction of a Werner pair with parameter w,
// clamped to zero below kWernerThreshold.  Domain: w in [0, 1].
double secret_key_fraction(double w);

// Same curve without the clamp; negative below the threshold.
double secret_key_fraction_raw(double w);

// Bisection root of secret_key_fraction_raw on [lo, hi]; requires a sign
// change across the bracket.
double find_key_fraction_root(double lo, double hi, double tol);

// End-to-end Werner parameter of a route: product of its link parameters.
// `w` is indexed by link index and must cover the whole topology.
double end_to_end_werner(const Topology& topo, std::span<const double> w,
                         int route_id);

// Aggregate key utility: product over routes of phi_n * F(end-to-end w).
// Zero whenever any route's end-to-end parameter falls below threshold.
double key_utility(const Topology& topo, std::span<const double> phi,
                   std::span<const double> w);

// Capacity-tight Werner parameters for fixed rates: used links get
// w_l = 1 - (sum of crossing rates)/beta_l, unused links sit at 1.
// Throws InfeasibleError naming the first overloaded link.
std::vector<double> optimal_werner_from_rates(const Topology& topo,
                                              std::span<const double> phi);

}  // namespace quhe::qkd
