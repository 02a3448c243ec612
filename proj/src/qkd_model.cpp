#include "quhe/qkd_model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "quhe/errors.hpp"

namespace quhe::qkd {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Topology::Topology(std::vector<Link> links, std::vector<Route> routes)
    : links_(std::move(links)), routes_(std::move(routes)) {
  require(!links_.empty(), "topology needs at least one link");
  require(!routes_.empty(), "topology needs at least one route");

  std::unordered_map<int, int> link_pos;
  for (int l = 0; l < link_count(); ++l) {
    const Link& lk = links_[l];
    require(lk.id > 0, "link id must be positive");
    require(lk.beta > 0.0, "link " + std::to_string(lk.id) + ": beta must be positive");
    require(lk.length_km > 0.0,
            "link " + std::to_string(lk.id) + ": length must be positive");
    require(link_pos.emplace(lk.id, l).second,
            "duplicate link id " + std::to_string(lk.id));
  }

  route_links_.resize(routes_.size());
  link_routes_.resize(links_.size());
  std::unordered_set<int> route_ids;
  for (int r = 0; r < route_count(); ++r) {
    const Route& rt = routes_[r];
    require(rt.id > 0, "route id must be positive");
    require(route_ids.insert(rt.id).second,
            "duplicate route id " + std::to_string(rt.id));
    require(!rt.links.empty(),
            "route " + std::to_string(rt.id) + " has no links");
    std::unordered_set<int> seen;
    for (int link_id : rt.links) {
      auto it = link_pos.find(link_id);
      require(it != link_pos.end(), "route " + std::to_string(rt.id) +
                                        " references unknown link " +
                                        std::to_string(link_id));
      require(seen.insert(link_id).second,
              "route " + std::to_string(rt.id) + " repeats link " +
                  std::to_string(link_id));
      route_links_[r].push_back(it->second);
      link_routes_[it->second].push_back(r);
    }
  }
}

int Topology::link_index(int link_id) const {
  for (int l = 0; l < link_count(); ++l)
    if (links_[l].id == link_id) return l;
  throw std::out_of_range("unknown link id " + std::to_string(link_id));
}

int Topology::route_index(int route_id) const {
  for (int r = 0; r < route_count(); ++r)
    if (routes_[r].id == route_id) return r;
  throw std::out_of_range("unknown route id " + std::to_string(route_id));
}

double link_capacity(double beta, double w) {
  if (!(beta > 0.0)) throw std::domain_error("link_capacity: beta must be positive");
  if (!(w > 0.0) || w > 1.0)
    throw std::domain_error("link_capacity: w must lie in (0, 1]");
  return beta * (1.0 - w);
}

double secret_key_fraction_raw(double w) {
  if (w < 0.0 || w > 1.0)
    throw std::domain_error("secret_key_fraction: w must lie in [0, 1]");
  // 1 + (1+w)/2*log2((1+w)/2)*2 ... written out: binary-entropy style terms
  // for the two Bell-diagonal eigenvalue pairs (1+w)/2 and (1-w)/2.
  double a = 1.0 + w;
  double b = 1.0 - w;
  double term_a = a * std::log2(a / 2.0);
  double term_b = (b > 0.0) ? b * std::log2(b / 2.0) : 0.0;
  return 1.0 + term_a + term_b;
}

double secret_key_fraction(double w) {
  double f = secret_key_fraction_raw(w);
  return f > 0.0 ? f : 0.0;
}

double find_key_fraction_root(double lo, double hi, double tol) {
  if (!(lo < hi) || !(tol > 0.0))
    throw std::invalid_argument("find_key_fraction_root: bad bracket or tolerance");
  double flo = secret_key_fraction_raw(lo);
  double fhi = secret_key_fraction_raw(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::invalid_argument("find_key_fraction_root: bracket does not straddle the root");
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    double fmid = secret_key_fraction_raw(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (fhi > 0.0)) {
      hi = mid;
      fhi = fmid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

void check_w_vector(const Topology& topo, std::span<const double> w) {
  if (static_cast<int>(w.size()) != topo.link_count())
    throw std::invalid_argument("werner vector size does not match link count");
  for (int l = 0; l < topo.link_count(); ++l)
    if (!(w[l] > 0.0) || w[l] > 1.0)
      throw std::domain_error("werner parameter for link " +
                              std::to_string(topo.links()[l].id) +
                              " outside (0, 1]");
}

}  // namespace

double end_to_end_werner(const Topology& topo, std::span<const double> w,
                         int route_id) {
  check_w_vector(topo, w);
  int r = topo.route_index(route_id);
  double prod = 1.0;
  for (int l : topo.route_links(r)) prod *= w[l];
  return prod;
}

double key_utility(const Topology& topo, std::span<const double> phi,
                   std::span<const double> w) {
  check_w_vector(topo, w);
  if (static_cast<int>(phi.size()) != topo.route_count())
    throw std::invalid_argument("rate vector size does not match route count");
  double u = 1.0;
  for (int r = 0; r < topo.route_count(); ++r) {
    if (!(phi[r] > 0.0))
      throw std::domain_error("route rate must be positive");
    double prod = 1.0;
    for (int l : topo.route_links(r)) prod *= w[l];
    u *= phi[r] * secret_key_fraction(prod);
  }
  return u;
}

std::vector<double> optimal_werner_from_rates(const Topology& topo,
                                              std::span<const double> phi) {
  if (static_cast<int>(phi.size()) != topo.route_count())
    throw std::invalid_argument("rate vector size does not match route count");
  std::vector<double> w(topo.link_count(), 1.0);
  for (int l = 0; l < topo.link_count(); ++l) {
    if (!topo.link_used(l)) continue;
    double load = 0.0;
    for (int r : topo.link_routes(l)) load += phi[r];
    double ratio = load / topo.links()[l].beta;
    if (!(ratio < 1.0))
      throw InfeasibleError("link " + std::to_string(topo.links()[l].id) +
                            " cannot carry the requested rates");
    w[l] = 1.0 - ratio;
  }
  return w;
}

}  // namespace quhe::qkd
