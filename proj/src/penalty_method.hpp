#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "grid_model.hpp"
#include "projection.hpp"
#include "run_trace.hpp"

namespace pevsched {

/// C(x) = 0 for x < 0 and beta x^(2 + offset) for x >= 0.
struct PowerPenalty {
  double beta = 0.0;
  double offset = 0.01;  ///< epsilon-hat

  double value(double x) const;
  double derivative(double x) const;
  double curvature(double x) const;
};

/// One penalty per feeder, indexed like Network feeders.
struct OverloadCost {
  std::vector<PowerPenalty> feeders;

  static OverloadCost uniform(std::size_t feeder_count, double beta, double offset);
  /// No overload control: every beta is zero.
  static OverloadCost none(std::size_t feeder_count) { return uniform(feeder_count, 0.0, 0.0); }
};

std::pair<double, double> cost_and_derivative(const PowerPenalty& cost, double x);

/// beta_l chosen so that C_l' at an overload of 10% of the feeder's smallest
/// headroom is ten times the largest possible variance gradient
/// 2 max_t (D(t) + P^max(t)).
OverloadCost default_overload_cost(const Network& network, std::span<const PevSpec> fleet, double offset = 0.01);

/// Bound B on C_l'' over the range the penalty argument can reach,
/// [-max_t P_l^max(t), sum_{k in Gamma_l} max_t p_k^max(t)], maximized over l.
double effective_curvature_bound(const Network& network, std::span<const PevSpec> fleet, const OverloadCost& cost);

/// (2 K (1 + d_max B / 2))^-1.
double max_step_size(std::size_t pev_count, std::size_t max_depth, double curvature_bound);

/// L(p) = sum_t (D(t) + P(t))^2 + sum_l sum_t C_l(P_l(t) - P_l^max(t)),
/// accumulated in extended precision.
double augmented_objective(const ProfileSet& profiles, const Network& network, const OverloadCost& cost);

/// dL/dp_k(t) = 2 (D(t) + P(t)) + sum_{l in Pi_k} C_l'(P_l(t) - P_l^max(t)).
std::vector<double> penalty_gradient(const ProfileSet& profiles, const Network& network, const OverloadCost& cost,
                                     std::size_t k);

/// L x T matrix of C_l'(P_l(t) - P_l^max(t)).
void feeder_penalty_terms(const LoadSnapshot& loads, const Network& network, const OverloadCost& cost,
                          std::vector<double>& out);

/// q(t) = 2 (D(t) + P(t)), then each feeder term along Pi_k added root to
/// leaf. Shared by both optimizers and the coordinator so the summation
/// order is identical everywhere.
void assemble_gradient(const LoadSnapshot& loads, const Network& network, std::span<const double> feeder_terms,
                       std::size_t k, std::span<double> out);

struct PenaltyConfig {
  double step = 0.0;  ///< 0 selects 0.9 of the safe maximum
  std::size_t max_iterations = 100000;
  double tolerance = 1e-9;  ///< stop once ||p^{m+1} - p^m||_inf falls below, kW
  std::optional<double> curvature_override;
  bool safeguard = true;
  ProjectionOptions projection;
  std::size_t record_stride = 0;  ///< 0 selects ceil(M / 10^4)
  /// Called with every new iterate p^m, m >= 1.
  std::function<void(std::size_t, const ProfileSet&)> observer;
};

struct PenaltyResult {
  ProfileSet profiles;
  RunTrace trace;
  std::size_t iterations = 0;
  bool converged = false;
  double step = 0.0;
  double step_bound = 0.0;
  double curvature_bound = 0.0;
  double augmented = 0.0;
  double objective = 0.0;
  std::size_t descent_violations = 0;
  bool guarantees_void = false;
};

struct PenaltyWorkspace {
  LoadSnapshot loads;
  std::vector<double> terms;
  std::vector<double> gradient;
  ProjectionWorkspace projection;
};

/// One synchronous update: every vehicle projects against the same p^m.
void penalty_iteration(const Network& network, std::span<const PevSpec> fleet, const OverloadCost& cost,
                       double step, const ProjectionOptions& projection, const ProfileSet& current,
                       ProfileSet& next, PenaltyWorkspace& ws);

/// Projected gradient on L from p^0 = 0. Throws ConfigurationError when the
/// step breaks the safe range with the safeguard on, and InternalError when
/// L rises by more than 1e-9 between iterates inside D under the safeguard.
PenaltyResult run_penalty(const Network& network, std::span<const PevSpec> fleet, const OverloadCost& cost,
                          const PenaltyConfig& config);

}  // namespace pevsched
