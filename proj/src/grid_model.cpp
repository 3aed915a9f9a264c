#include "grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "errors.hpp"

namespace pevsched {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse: return "parse error";
    case ErrorCode::malformed_topology: return "malformed topology";
    case ErrorCode::capacity_infeasible: return "capacity infeasible";
    case ErrorCode::invalid_window: return "invalid window";
    case ErrorCode::infeasible_scenario: return "infeasible scenario";
    case ErrorCode::invalid_configuration: return "invalid configuration";
    case ErrorCode::no_solution: return "no solution";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::internal: return "internal error";
  }
  return "unknown error";
}

double PevSpec::deliverable_energy() const {
  double total = 0.0;
  for (std::size_t t = window_start; t < window_end && t < rate_cap.size(); ++t) total += rate_cap[t];
  return total;
}

void check_pev(const PevSpec& pev, std::size_t horizon) {
  if (pev.window_start >= pev.window_end || pev.window_end > horizon) {
    std::ostringstream os;
    os << "PEV '" << pev.id << "': window [" << pev.window_start << ", " << pev.window_end
       << ") is empty or exceeds the horizon of " << horizon << " slots";
    throw WindowError(os.str());
  }
  if (pev.rate_cap.size() != horizon) {
    std::ostringstream os;
    os << "PEV '" << pev.id << "': rate cap has " << pev.rate_cap.size() << " entries, expected " << horizon;
    throw InfeasibleScenario(os.str());
  }
  for (double c : pev.rate_cap) {
    if (!std::isfinite(c) || c < 0.0) throw InfeasibleScenario("PEV '" + pev.id + "': rate cap must be finite and nonnegative");
  }
  if (!std::isfinite(pev.demand) || pev.demand < 0.0) {
    throw InfeasibleScenario("PEV '" + pev.id + "': demand must be finite and nonnegative");
  }
  if (pev.battery) {
    const auto& b = *pev.battery;
    if (b.capacity_kwh < 0.0 || b.efficiency <= 0.0 || b.efficiency > 1.0 || b.initial_soc < 0.0 || b.initial_soc > 1.0) {
      throw InfeasibleScenario("PEV '" + pev.id + "': battery parameters out of range");
    }
    const double expected = b.required_energy();
    if (std::abs(expected - pev.demand) > 1e-9 * std::max(1.0, expected)) {
      std::ostringstream os;
      os << "PEV '" << pev.id << "': demand " << pev.demand << " kWh disagrees with battery-derived " << expected << " kWh";
      throw InfeasibleScenario(os.str());
    }
  }
}

std::optional<std::size_t> Network::find_feeder(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

std::span<const double> Network::base_load(std::size_t l) const {
  return {base_load_.data() + l * horizon_, horizon_};
}

std::span<const double> Network::headroom(std::size_t l) const {
  return {headroom_.data() + l * horizon_, horizon_};
}

Network build_network(const NetworkDescription& description, std::span<const PevSpec> fleet) {
  Network net;
  const std::size_t T = description.horizon;
  if (T == 0) throw TopologyError("horizon must contain at least one slot");
  if (description.feeders.empty()) throw TopologyError("network has no feeders");
  net.horizon_ = T;

  const std::size_t L = description.feeders.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& f = description.feeders[l];
    if (f.id.empty()) throw TopologyError("feeder with empty id");
    if (!index.emplace(f.id, l).second) throw TopologyError("duplicate feeder id '" + f.id + "'");
    net.ids_.push_back(f.id);
    net.capacities_.push_back(f.capacity);
  }

  net.parents_.assign(L, std::nullopt);
  net.children_.assign(L, {});
  std::vector<std::size_t> roots;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& f = description.feeders[l];
    if (f.parent.empty()) {
      roots.push_back(l);
      continue;
    }
    auto it = index.find(f.parent);
    if (it == index.end()) throw TopologyError("feeder '" + f.id + "' has unknown parent '" + f.parent + "'");
    if (it->second == l) throw TopologyError("feeder '" + f.id + "' is its own parent");
    net.parents_[l] = it->second;
    net.children_[it->second].push_back(l);
  }
  if (roots.size() != 1) {
    std::ostringstream os;
    os << "expected exactly one root feeder, found " << roots.size();
    throw TopologyError(os.str());
  }
  net.root_ = roots.front();

  // Breadth-first from the root; anything unvisited sits on a cycle.
  std::vector<std::size_t> order{net.root_};
  std::vector<std::size_t> depth(L, 0);
  std::vector<bool> seen(L, false);
  seen[net.root_] = true;
  depth[net.root_] = 1;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t c : net.children_[order[i]]) {
      if (seen[c]) throw TopologyError("feeder graph contains a cycle at '" + net.ids_[c] + "'");
      seen[c] = true;
      depth[c] = depth[order[i]] + 1;
      order.push_back(c);
    }
  }
  if (order.size() != L) {
    for (std::size_t l = 0; l < L; ++l) {
      if (!seen[l]) throw TopologyError("feeder '" + net.ids_[l] + "' is not reachable from the root (cycle)");
    }
  }

  // Base loads: given on leaves, summed upward.
  net.base_load_.assign(L * T, 0.0);
  for (const auto& [id, series] : description.leaf_base_load) {
    auto it = index.find(id);
    if (it == index.end()) throw TopologyError("base load given for unknown feeder '" + id + "'");
    if (!net.children_[it->second].empty()) {
      throw TopologyError("base load given for interior feeder '" + id + "'; interior loads are derived");
    }
    if (series.size() != T) {
      std::ostringstream os;
      os << "base load of feeder '" << id << "' has " << series.size() << " entries, expected " << T;
      throw TopologyError(os.str());
    }
    for (double v : series) {
      if (!std::isfinite(v) || v < 0.0) throw TopologyError("base load of feeder '" + id + "' must be finite and nonnegative");
    }
    std::copy(series.begin(), series.end(), net.base_load_.begin() + static_cast<std::ptrdiff_t>(it->second * T));
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t l = *it;
    for (std::size_t c : net.children_[l]) {
      for (std::size_t t = 0; t < T; ++t) net.base_load_[l * T + t] += net.base_load_[c * T + t];
    }
  }

  net.headroom_.resize(L * T);
  for (std::size_t l = 0; l < L; ++l) {
    const double peak = *std::max_element(net.base_load_.begin() + static_cast<std::ptrdiff_t>(l * T),
                                          net.base_load_.begin() + static_cast<std::ptrdiff_t>((l + 1) * T));
    if (!std::isfinite(net.capacities_[l]) || net.capacities_[l] <= peak) {
      std::ostringstream os;
      os << "feeder '" << net.ids_[l] << "': capacity " << net.capacities_[l] << " kW does not exceed peak base load "
         << peak << " kW";
      throw CapacityError(os.str());
    }
    for (std::size_t t = 0; t < T; ++t) net.headroom_[l * T + t] = net.capacities_[l] - net.base_load_[l * T + t];
  }

  net.members_.assign(L, {});
  net.paths_.reserve(fleet.size());
  for (std::size_t k = 0; k < fleet.size(); ++k) {
    const auto& pev = fleet[k];
    check_pev(pev, T);
    auto it = index.find(pev.feeder);
    if (it == index.end()) throw TopologyError("PEV '" + pev.id + "' attached to unknown feeder '" + pev.feeder + "'");
    if (!net.children_[it->second].empty()) {
      throw TopologyError("PEV '" + pev.id + "' attached to interior feeder '" + pev.feeder + "'; only leaves carry PEVs");
    }
    std::vector<std::size_t> path;
    for (std::optional<std::size_t> l = it->second; l; l = net.parents_[*l]) path.push_back(*l);
    std::reverse(path.begin(), path.end());
    for (std::size_t l : path) net.members_[l].push_back(k);
    net.max_depth_ = std::max(net.max_depth_, path.size());
    net.paths_.push_back(std::move(path));
  }
  if (fleet.empty()) net.max_depth_ = *std::max_element(depth.begin(), depth.end());
  return net;
}

Scenario make_scenario(NetworkDescription description, Fleet fleet) {
  Network network = build_network(description, fleet);
  return Scenario{std::move(description), std::move(fleet), std::move(network)};
}

void compute_loads(const ProfileSet& profiles, const Network& network, LoadSnapshot& out) {
  const std::size_t T = network.horizon();
  const std::size_t L = network.feeder_count();
  out.total_pev.assign(T, 0.0);
  out.feeder_pev.assign(L * T, 0.0);
  for (std::size_t k = 0; k < profiles.pev_count(); ++k) {
    const auto row = profiles.row(k);
    for (std::size_t t = 0; t < T; ++t) out.total_pev[t] += row[t];
  }
  for (std::size_t l = 0; l < L; ++l) {
    double* dst = out.feeder_pev.data() + l * T;
    for (std::size_t k : network.members(l)) {
      const auto row = profiles.row(k);
      for (std::size_t t = 0; t < T; ++t) dst[t] += row[t];
    }
  }
}

LoadSnapshot compute_loads(const ProfileSet& profiles, const Network& network) {
  LoadSnapshot s;
  compute_loads(profiles, network, s);
  return s;
}

double feeder_headroom(const Network& network, std::size_t l, std::size_t t) {
  return network.headroom(l)[t];
}

double feeder_pev_load(const ProfileSet& profiles, const Network& network, std::size_t l, std::size_t t) {
  double sum = 0.0;
  for (std::size_t k : network.members(l)) sum += profiles(k, t);
  return sum;
}

double variance_objective(const ProfileSet& profiles, const Network& network) {
  const auto D = network.total_base_load();
  long double f = 0.0L;
  for (std::size_t t = 0; t < network.horizon(); ++t) {
    long double load = D[t];
    for (std::size_t k = 0; k < profiles.pev_count(); ++k) load += profiles(k, t);
    f += load * load;
  }
  return static_cast<double>(f);
}

double total_load_variance(const ProfileSet& profiles, const Network& network) {
  const auto D = network.total_base_load();
  const std::size_t T = network.horizon();
  std::vector<long double> load(T);
  long double mean = 0.0L;
  for (std::size_t t = 0; t < T; ++t) {
    load[t] = D[t];
    for (std::size_t k = 0; k < profiles.pev_count(); ++k) load[t] += profiles(k, t);
    mean += load[t];
  }
  mean /= static_cast<long double>(T);
  long double var = 0.0L;
  for (long double x : load) var += (x - mean) * (x - mean);
  return static_cast<double>(var / static_cast<long double>(T));
}

double constraint_value(const ProfileSet& profiles, const Network& network, std::size_t l, std::size_t t) {
  return feeder_pev_load(profiles, network, l, t) - network.headroom(l)[t];
}

double normalized_max_overload(const LoadSnapshot& loads, const Network& network, std::size_t t) {
  const std::size_t T = network.horizon();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const double cap = network.headroom(l)[t];
    worst = std::max(worst, (loads.feeder(l, t, T) - cap) / cap);
  }
  return worst;
}

double normalized_max_overload(const ProfileSet& profiles, const Network& network, std::size_t t) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const double cap = network.headroom(l)[t];
    worst = std::max(worst, (feeder_pev_load(profiles, network, l, t) - cap) / cap);
  }
  return worst;
}

double max_constraint_violation(const LoadSnapshot& loads, const Network& network) {
  const std::size_t T = network.horizon();
  double worst = 0.0;
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto cap = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) worst = std::max(worst, loads.feeder(l, t, T) - cap[t]);
  }
  return worst;
}

double violation_norm(const LoadSnapshot& loads, const Network& network) {
  const std::size_t T = network.horizon();
  long double sq = 0.0L;
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto cap = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) {
      const double g = loads.feeder(l, t, T) - cap[t];
      if (g > 0.0) sq += static_cast<long double>(g) * g;
    }
  }
  return static_cast<double>(std::sqrt(sq));
}

ProfileSet proportional_fill(const Network& network, std::span<const PevSpec> fleet) {
  ProfileSet p(fleet.size(), network.horizon());
  for (std::size_t k = 0; k < fleet.size(); ++k) {
    const double total = fleet[k].deliverable_energy();
    if (total <= 0.0) continue;
    for (std::size_t t = fleet[k].window_start; t < fleet[k].window_end; ++t) {
      p(k, t) = fleet[k].demand * fleet[k].rate_cap[t] / total;
    }
  }
  return p;
}

bool in_feasible_set(const ProfileSet& profiles, std::span<const PevSpec> fleet, double sum_tolerance) {
  for (std::size_t k = 0; k < fleet.size(); ++k) {
    double sum = 0.0;
    for (std::size_t t = 0; t < profiles.horizon(); ++t) {
      const double v = profiles(k, t);
      if (v < 0.0 || v > fleet[k].cap(t)) return false;
      sum += v;
    }
    if (std::abs(sum - fleet[k].demand) > sum_tolerance) return false;
  }
  return true;
}

bool FeasibilityReport::necessary_conditions_hold() const {
  return std::all_of(pevs.begin(), pevs.end(), [](const PevCheck& c) { return c.ok; }) &&
         std::all_of(feeders.begin(), feeders.end(), [](const FeederCheck& c) { return c.ok; });
}

FeasibilityReport assess_feasibility(const Network& network, std::span<const PevSpec> fleet) {
  FeasibilityReport report;
  const std::size_t T = network.horizon();
  for (const auto& pev : fleet) {
    PevCheck c{pev.id, pev.demand, pev.deliverable_energy(), true};
    c.ok = c.demand <= c.deliverable * (1.0 + 1e-12);
    if (!c.ok) report.warnings.push_back("PEV '" + pev.id + "' demands more energy than its window can deliver");
    report.pevs.push_back(std::move(c));
  }
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    FeederCheck c{network.feeder_id(l), 0.0, 0.0, true};
    for (double h : network.headroom(l)) c.energy_headroom += h;
    for (std::size_t k : network.members(l)) c.energy_required += fleet[k].demand;
    c.ok = c.energy_required <= c.energy_headroom;
    if (!c.ok) report.warnings.push_back("feeder '" + c.id + "' cannot carry the energy of the PEVs below it");
    report.feeders.push_back(std::move(c));
  }

  const ProfileSet fill = proportional_fill(network, fleet);
  const LoadSnapshot loads = compute_loads(fill, network);
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto cap = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) slack = std::min(slack, cap[t] - loads.feeder(l, t, T));
  }
  report.slater_slack = slack;
  report.slater_verified = slack > 0.0;
  if (!report.slater_verified) {
    report.warnings.push_back("Slater unverified: proportional fill overloads at least one feeder");
  }
  return report;
}

FeasibilityReport validate_feasibility(const Network& network, std::span<const PevSpec> fleet) {
  FeasibilityReport report = assess_feasibility(network, fleet);
  if (!report.necessary_conditions_hold()) {
    std::ostringstream os;
    os << "scenario violates a necessary feasibility condition";
    for (const auto& w : report.warnings) {
      if (w.rfind("Slater", 0) != 0) os << "; " << w;
    }
    throw InfeasibleScenario(os.str());
  }
  return report;
}

}  // namespace pevsched
