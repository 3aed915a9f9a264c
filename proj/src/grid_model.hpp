#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pevsched {

/// One hour per slot, so kW and kWh-per-slot coincide numerically.
inline constexpr std::size_t kDefaultHorizon = 24;

struct FeederSpec {
  std::string id;
  std::string parent;  ///< empty for the substation feeder
  double capacity = 0.0;  ///< rho_l, kW
};

struct BatterySpec {
  double capacity_kwh = 0.0;
  double efficiency = 1.0;
  double initial_soc = 0.0;

  /// Energy needed to reach a full battery: B (1 - s0) / eta.
  double required_energy() const { return capacity_kwh * (1.0 - initial_soc) / efficiency; }
};

/// A plug-in vehicle and its charging constraints.
///
/// The charging window is the half-open slot range [window_start, window_end),
/// zero-based, so an all-day window over 24 hourly slots is [0, 24).
struct PevSpec {
  std::string id;
  std::string feeder;  ///< leaf feeder the vehicle is attached to
  std::size_t window_start = 0;
  std::size_t window_end = 0;
  std::vector<double> rate_cap;  ///< p_k^max(t), kW, one entry per slot of the horizon
  double demand = 0.0;  ///< U_k, kWh
  std::optional<BatterySpec> battery;

  bool in_window(std::size_t t) const { return t >= window_start && t < window_end; }

  /// Cap used by the optimizers: zero outside the window.
  double cap(std::size_t t) const { return in_window(t) ? rate_cap[t] : 0.0; }

  /// Sum of caps over the window.
  double deliverable_energy() const;
};

using Fleet = std::vector<PevSpec>;

struct NetworkDescription {
  std::size_t horizon = kDefaultHorizon;
  std::vector<FeederSpec> feeders;
  /// Base (non-PEV) load per leaf feeder. Interior loads are derived.
  std::map<std::string, std::vector<double>> leaf_base_load;
};

/// Rooted feeder tree with the derived path and membership sets.
///
/// Feeders keep the index order of the description. Paths run root to leaf;
/// membership lists are sorted by PEV index. Immutable after construction.
class Network {
 public:
  std::size_t horizon() const { return horizon_; }
  std::size_t feeder_count() const { return ids_.size(); }
  std::size_t pev_count() const { return paths_.size(); }
  std::size_t root() const { return root_; }
  std::size_t max_depth() const { return max_depth_; }

  const std::string& feeder_id(std::size_t l) const { return ids_[l]; }
  std::optional<std::size_t> find_feeder(const std::string& id) const;
  std::optional<std::size_t> parent(std::size_t l) const { return parents_[l]; }
  std::span<const std::size_t> children(std::size_t l) const { return children_[l]; }
  bool is_leaf(std::size_t l) const { return children_[l].empty(); }
  double capacity(std::size_t l) const { return capacities_[l]; }

  /// d_l(t), aggregated from the leaves below l.
  std::span<const double> base_load(std::size_t l) const;
  /// D(t), the root aggregate.
  std::span<const double> total_base_load() const { return base_load(root_); }
  /// P_l^max(t) = rho_l - d_l(t), precomputed.
  std::span<const double> headroom(std::size_t l) const;

  /// Pi_k, root first.
  std::span<const std::size_t> path(std::size_t k) const { return paths_[k]; }
  /// Gamma_l, ascending PEV index.
  std::span<const std::size_t> members(std::size_t l) const { return members_[l]; }
  std::size_t attachment(std::size_t k) const { return paths_[k].back(); }

 private:
  friend Network build_network(const NetworkDescription&, std::span<const PevSpec>);

  std::size_t horizon_ = 0;
  std::size_t root_ = 0;
  std::size_t max_depth_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::optional<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<double> capacities_;
  std::vector<double> base_load_;  // L x T
  std::vector<double> headroom_;   // L x T
  std::vector<std::vector<std::size_t>> paths_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Builds the tree, attaches the fleet and derives every set the optimizers
/// use. Throws TopologyError, CapacityError or WindowError.
Network build_network(const NetworkDescription& description, std::span<const PevSpec> fleet);

/// Checks one vehicle in isolation (window, cap vector length, demand range,
/// battery consistency). Throws WindowError or InfeasibleScenario.
void check_pev(const PevSpec& pev, std::size_t horizon);

struct Scenario {
  NetworkDescription description;
  Fleet fleet;
  Network network;
};

Scenario make_scenario(NetworkDescription description, Fleet fleet);

/// K x T matrix of charging powers, row per vehicle.
class ProfileSet {
 public:
  ProfileSet() = default;
  ProfileSet(std::size_t pevs, std::size_t horizon)
      : pevs_(pevs), horizon_(horizon), values_(pevs * horizon, 0.0) {}

  std::size_t pev_count() const { return pevs_; }
  std::size_t horizon() const { return horizon_; }

  double& operator()(std::size_t k, std::size_t t) { return values_[k * horizon_ + t]; }
  double operator()(std::size_t k, std::size_t t) const { return values_[k * horizon_ + t]; }

  std::span<double> row(std::size_t k) { return {values_.data() + k * horizon_, horizon_}; }
  std::span<const double> row(std::size_t k) const { return {values_.data() + k * horizon_, horizon_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const ProfileSet&, const ProfileSet&) = default;

 private:
  std::size_t pevs_ = 0;
  std::size_t horizon_ = 0;
  std::vector<double> values_;
};

/// Per-slot loads derived from a profile set. Summation order is fixed:
/// P(t) over k ascending, P_l(t) over Gamma_l ascending.
struct LoadSnapshot {
  std::vector<double> total_pev;   // P(t)
  std::vector<double> feeder_pev;  // L x T, P_l(t)

  double feeder(std::size_t l, std::size_t t, std::size_t horizon) const {
    return feeder_pev[l * horizon + t];
  }
};

LoadSnapshot compute_loads(const ProfileSet& profiles, const Network& network);
void compute_loads(const ProfileSet& profiles, const Network& network, LoadSnapshot& out);

double feeder_headroom(const Network& network, std::size_t l, std::size_t t);
double feeder_pev_load(const ProfileSet& profiles, const Network& network, std::size_t l, std::size_t t);

/// f(p) = sum_t (D(t) + P(t))^2, accumulated in extended precision.
double variance_objective(const ProfileSet& profiles, const Network& network);

/// Population variance of the total load D(t) + P(t) over the horizon.
double total_load_variance(const ProfileSet& profiles, const Network& network);

/// g_{l,t}(p) = P_l(t) - P_l^max(t).
double constraint_value(const ProfileSet& profiles, const Network& network, std::size_t l, std::size_t t);

double normalized_max_overload(const ProfileSet& profiles, const Network& network, std::size_t t);
double normalized_max_overload(const LoadSnapshot& loads, const Network& network, std::size_t t);

/// Largest positive part of g over all feeders and slots (0 when feasible).
double max_constraint_violation(const LoadSnapshot& loads, const Network& network);
/// ||[g(p)]^+||_2 over all (l, t).
double violation_norm(const LoadSnapshot& loads, const Network& network);

/// Proportional fill p_k(t) = U_k p_k^max(t) / sum_s p_k^max(s); always in D_k.
ProfileSet proportional_fill(const Network& network, std::span<const PevSpec> fleet);

/// True when every row lies in its D_k: box bounds exact, sum within tol.
bool in_feasible_set(const ProfileSet& profiles, std::span<const PevSpec> fleet, double sum_tolerance);

struct PevCheck {
  std::string id;
  double demand = 0.0;
  double deliverable = 0.0;
  bool ok = true;
};

struct FeederCheck {
  std::string id;
  double energy_headroom = 0.0;  ///< sum_t P_l^max(t)
  double energy_required = 0.0;  ///< sum_{k in Gamma_l} U_k
  bool ok = true;
};

struct FeasibilityReport {
  std::vector<PevCheck> pevs;
  std::vector<FeederCheck> feeders;
  double slater_slack = 0.0;  ///< min_{l,t} -g_{l,t} of the proportional fill
  bool slater_verified = false;
  std::vector<std::string> warnings;

  bool necessary_conditions_hold() const;
};

/// Builds the report without throwing.
FeasibilityReport assess_feasibility(const Network& network, std::span<const PevSpec> fleet);

/// Same report; throws InfeasibleScenario when a necessary condition fails.
FeasibilityReport validate_feasibility(const Network& network, std::span<const PevSpec> fleet);

}  // namespace pevsched
