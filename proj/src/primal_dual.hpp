#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grid_model.hpp"
#include "projection.hpp"
#include "run_trace.hpp"

namespace pevsched {

/// Multipliers mu_{l,t}, each confined to [0, cap].
class DualState {
 public:
  DualState() = default;
  DualState(std::size_t feeders, std::size_t horizon, double cap, double initial = 0.0);

  std::size_t feeder_count() const { return feeders_; }
  std::size_t horizon() const { return horizon_; }
  double cap() const { return cap_; }

  double& operator()(std::size_t l, std::size_t t) { return mu_[l * horizon_ + t]; }
  double operator()(std::size_t l, std::size_t t) const { return mu_[l * horizon_ + t]; }
  std::span<const double> values() const { return mu_; }
  std::span<double> values() { return mu_; }
  std::span<const double> row(std::size_t l) const { return {mu_.data() + l * horizon_, horizon_}; }
  double max() const;

  bool within_box() const;

  friend bool operator==(const DualState&, const DualState&) = default;

 private:
  std::size_t feeders_ = 0;
  std::size_t horizon_ = 0;
  double cap_ = 0.0;
  std::vector<double> mu_;
};

/// mu^max = sum_t (2 D(t) + P^max(t)) P^max(t) / (eps L T) + 1 / (L T),
/// P^max(t) = sum_k p_k^max(t). Throws ConfigurationError for eps <= 0.
double compute_mu_max(const Network& network, std::span<const PevSpec> fleet, double slack);

/// Lagrangian f(p) + mu^T g(p), extended precision.
double lagrangian(const ProfileSet& profiles, const DualState& dual, const Network& network);

/// dL/dp_k(t) = 2 (D(t) + P(t)) + sum_{l in Pi_k} mu_{l,t}.
std::vector<double> primal_subgradient(const ProfileSet& profiles, const DualState& dual, const Network& network,
                                       std::size_t k);

/// mu <- [min(mu + step g(p), mu^max)]^+ elementwise.
DualState dual_update(const DualState& dual, const ProfileSet& profiles, const Network& network, double step);
void dual_update(DualState& dual, const LoadSnapshot& loads, const Network& network, double step);

/// Running arithmetic mean of primal iterates; no history is kept.
class RunningAverage {
 public:
  RunningAverage() = default;
  RunningAverage(std::size_t pevs, std::size_t horizon) : mean_(pevs, horizon) {}

  void add(const ProfileSet& iterate);
  std::size_t count() const { return count_; }
  const ProfileSet& value() const { return mean_; }

 private:
  ProfileSet mean_;
  std::size_t count_ = 0;
};

/// p_hat^m = (1/m) sum_{i<m} p^i for an explicit history (m >= 1).
ProfileSet averaged_iterate(std::span<const ProfileSet> history);

struct SubgradientBounds {
  double primal = 0.0;  ///< L1
  double dual = 0.0;    ///< L2
  double uniform = 0.0;  ///< N = max(L1, L2)
};

SubgradientBounds subgradient_bounds(const Network& network, std::span<const PevSpec> fleet, double mu_max);

struct PrimalDualObserverState {
  std::size_t iteration;  ///< m of the iterate just produced
  const ProfileSet& iterate;
  const DualState& dual;
  const ProfileSet& averaged;  ///< p_hat^m
};

struct PrimalDualConfig {
  double step = 1e-2;
  std::size_t iterations = 100000;
  std::optional<double> slater_slack;  ///< defaults to the proportional-fill estimate
  double initial_multiplier = 0.0;
  std::optional<double> optimal_value;  ///< f*, when known, for the bound audit
  ProjectionOptions projection;
  std::size_t record_stride = 0;
  std::function<void(const PrimalDualObserverState&)> observer;
};

struct PrimalDualResult {
  ProfileSet averaged;  ///< p_hat^M
  ProfileSet last;      ///< p^M
  DualState dual;
  RunTrace trace;
  std::size_t iterations = 0;
  double step = 0.0;
  double slack = 0.0;
  bool slater_verified = false;
  double mu_max = 0.0;
  SubgradientBounds bounds;
  double violation_bound = 0.0;   ///< alpha N^2 / 2
  double cost_upper_gap = 0.0;    ///< alpha N^2
  double cost_lower_gap = 0.0;    ///< alpha L T mu^max N^2
  double max_primal_norm = 0.0;   ///< largest observed ||L_p||
  double max_dual_norm = 0.0;     ///< largest observed ||L_mu||
  double objective = 0.0;         ///< f(p_hat^M)
  double violation = 0.0;         ///< ||[g(p_hat^M)]^+||
  std::vector<std::string> warnings;
};

struct PrimalDualWorkspace {
  LoadSnapshot loads;
  std::vector<double> gradient;
  ProjectionWorkspace projection;
};

/// p^{m+1}_k = P_{D_k}[p^m_k - step L_{p_k}(p^m, mu^m)] for every k, then
/// mu^{m+1} from g(p^m). Both halves read the m-state. Returns the squared
/// norms of the two partial subgradients at (p^m, mu^m).
std::pair<double, double> primal_dual_iteration(const Network& network, std::span<const PevSpec> fleet, double step,
                                                const ProjectionOptions& projection, const ProfileSet& current,
                                                const DualState& dual, ProfileSet& next, DualState& next_dual,
                                                PrimalDualWorkspace& ws);

/// p^0 = P_D[0], the first point the method would project to anyway.
ProfileSet initial_primal(const Network& network, std::span<const PevSpec> fleet, const ProjectionOptions& projection);

PrimalDualResult run_primal_dual(const Network& network, std::span<const PevSpec> fleet,
                                 const PrimalDualConfig& config);

}  // namespace pevsched
