#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grid_model.hpp"

namespace pevsched {

/// Projection of one vehicle's target onto its feasible set D_k, written as
/// the valley-filling problem
///
///   minimize   sum_t (p(t) + offset(t))^2
///   subject to 0 <= p(t) <= cap(t),  sum_t p(t) = demand.
///
/// Slots with cap(t) == 0 are outside the charging window and stay at zero.
struct ProjectionProblem {
  std::span<const double> offset;  ///< b(t) = alpha q(t) - p^m(t), kW
  std::span<const double> cap;     ///< p^max(t), kW
  double demand = 0.0;             ///< U, kWh
};

struct ProjectionResult {
  std::vector<double> profile;
  double level = 0.0;  ///< water level lambda*
  std::size_t steps = 0;  ///< fill loops (exact) or bisection halvings (binary search)
  std::size_t refinements = 0;  ///< secant evaluations after bisection (binary search only)
};

enum class ProjectionMethod { exact, bisection };

struct ProjectionOptions {
  ProjectionMethod method = ProjectionMethod::exact;
  double tolerance = 1e-8;  ///< epsilon' for the binary search, kW
};

/// Reusable scratch space for the hot path inside the optimizers.
struct ProjectionWorkspace {
  std::vector<std::size_t> order;
  std::vector<std::size_t> filling;
  std::vector<double> offset;
  std::vector<double> cap;
};

/// Closed form at a given level: clamp(level - b(t), 0, cap(t)).
std::vector<double> fill_at_level(double level, const ProjectionProblem& problem);

/// Interval [min_t b(t), max_t b(t) + cap(t)] over the active slots.
struct LevelBracket {
  double low = 0.0;
  double high = 0.0;
  double width() const { return high - low; }
};
LevelBracket level_bracket(const ProjectionProblem& problem);

/// ceil(log2(|bracket| / tolerance)), the bisection budget.
std::size_t bisection_step_bound(const ProjectionProblem& problem, double tolerance);

/// Exact valley fill: slots are filled in increasing order of b(t), a slot
/// leaves the fill once it reaches its cap. O(T^2) worst case.
/// Throws NoSolution when demand lies outside [0, sum cap].
ProjectionResult project_exact(const ProjectionProblem& problem);
double project_exact(const ProjectionProblem& problem, std::span<double> out, ProjectionWorkspace& ws,
                     std::size_t* loops = nullptr);

/// Bisection on the level until |sum p - demand| < tolerance, capped at
/// bisection_step_bound() halvings; a secant refinement on the piecewise
/// linear residual finishes the job when the cap is reached first.
ProjectionResult project_binary_search(const ProjectionProblem& problem, double tolerance);

/// p^{m+1}_k = P_{D_k}[p^m_k - step * gradient]. `out` receives a full
/// horizon-length row.
void project_onto_pev_set(std::span<const double> previous, std::span<const double> gradient, double step,
                          const PevSpec& pev, const ProjectionOptions& options, std::span<double> out,
                          ProjectionWorkspace& ws);

std::vector<double> project_onto_pev_set(std::span<const double> previous, std::span<const double> gradient,
                                         double step, const PevSpec& pev,
                                         const ProjectionOptions& options = {});

}  // namespace pevsched
