#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "grid_model.hpp"
#include "penalty_method.hpp"

namespace pevsched {

// Brute-force reference solvers. None of this calls the projection module:
// every fill, load and objective is recomputed here from the raw data.

/// Level sweep: evaluates clamp(lambda - b, 0, pmax) on a grid over the level
/// interval, narrows around the crossing of the target sum, and returns the
/// fill whose sum is closest to the demand once the grid spacing is at most
/// `resolution`. Per-coordinate error is bounded by the final spacing.
std::vector<double> oracle_project(std::span<const double> b, std::span<const double> pmax, double demand,
                                   double resolution);

/// Exact projection by breakpoint enumeration: the fill sum is piecewise
/// linear in the level with kinks at b(t) and b(t) + pmax(t).
std::vector<double> oracle_breakpoint_projection(std::span<const double> b, std::span<const double> pmax,
                                                 double demand);

/// Feeder loads recomputed by walking each vehicle's feeder up to the root
/// through the description's parent links. Keyed by feeder id.
std::map<std::string, std::vector<double>> oracle_feeder_loads(const NetworkDescription& description,
                                                               std::span<const PevSpec> fleet,
                                                               const ProfileSet& profiles);

/// sum_t (D(t) + P(t))^2 with D summed from the leaf base loads.
double oracle_objective(const NetworkDescription& description, const ProfileSet& profiles);

struct OracleConfig {
  double step = 1e-4;              ///< primal-dual step (ten times below the main run)
  std::size_t iterations = 10000000;
  double slater_slack = 0.0;       ///< 0 estimates it from the proportional fill
  double stabilization = 1e-6;     ///< relative change of f(p_hat) over the last 10% of the run
};

struct OracleSolution {
  ProfileSet profiles;
  double value = 0.0;             ///< f* (or L* for the penalty problem)
  double max_violation = 0.0;     ///< max relative overload after repair
  double unrepaired_value = 0.0;  ///< objective before the feasibility repair
  double repair_shift = 0.0;      ///< |value - unrepaired_value|
  std::size_t iterations = 0;
  bool confident = false;
  std::string note;
};

/// Reference optimum of the feeder-constrained problem: a long primal-dual
/// run, then a repair that scales overloaded slots down and refills the lost
/// energy into the lowest remaining slots along each vehicle's path.
OracleSolution oracle_solve_P(const Scenario& scenario, const OracleConfig& config = {});

/// Exhaustive search over profiles on a grid of `resolution` kW. Every demand
/// and cap must be a multiple of the resolution. Throws ConfigurationError
/// when the search space exceeds `max_combinations`.
OracleSolution oracle_grid_search_P(const Scenario& scenario, double resolution,
                                    std::size_t max_combinations = 50000000);

struct PenaltyOracleConfig {
  double step = 0.0;  ///< 0 selects half the safe maximum
  std::size_t iterations = 2000000;
  double tolerance = 1e-12;
};

/// Projected gradient on the penalized objective until the step norm falls
/// below the tolerance.
OracleSolution oracle_solve_P1(const Scenario& scenario, const OverloadCost& cost,
                               const PenaltyOracleConfig& config = {});

/// Penalized objective recomputed from the description.
double oracle_augmented(const Scenario& scenario, const OverloadCost& cost, const ProfileSet& profiles);

/// min over `samples` random feasible p of grad L(p*)^T (p - p*); a
/// stationary point gives a value >= 0 up to rounding.
double stationarity_gap(const Scenario& scenario, const OverloadCost& cost, const ProfileSet& candidate,
                        std::size_t samples, std::uint64_t seed);

}  // namespace pevsched
