#include "primal_dual.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"
#include "penalty_method.hpp"

namespace pevsched {

DualState::DualState(std::size_t feeders, std::size_t horizon, double cap, double initial)
    : feeders_(feeders), horizon_(horizon), cap_(cap), mu_(feeders * horizon, std::clamp(initial, 0.0, cap)) {}

double DualState::max() const {
  double m = 0.0;
  for (double v : mu_) m = std::max(m, v);
  return m;
}

bool DualState::within_box() const {
  return std::all_of(mu_.begin(), mu_.end(), [this](double v) { return v >= 0.0 && v <= cap_; });
}

double compute_mu_max(const Network& network, std::span<const PevSpec> fleet, double slack) {
  if (!(slack > 0.0) || !std::isfinite(slack)) throw ConfigurationError("Slater slack must be positive");
  const std::size_t T = network.horizon();
  const auto D = network.total_base_load();
  double numerator = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double pmax = 0.0;
    for (const auto& pev : fleet) pmax += pev.cap(t);
    numerator += (2.0 * D[t] + pmax) * pmax;
  }
  const double LT = static_cast<double>(network.feeder_count() * T);
  return numerator / (slack * LT) + 1.0 / LT;
}

double lagrangian(const ProfileSet& profiles, const DualState& dual, const Network& network) {
  long double total = variance_objective(profiles, network);
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto h = network.headroom(l);
    for (std::size_t t = 0; t < network.horizon(); ++t) {
      long double load = 0.0L;
      for (std::size_t k : network.members(l)) load += profiles(k, t);
      total += static_cast<long double>(dual(l, t)) * (load - h[t]);
    }
  }
  return static_cast<double>(total);
}

std::vector<double> primal_subgradient(const ProfileSet& profiles, const DualState& dual, const Network& network,
                                       std::size_t k) {
  const LoadSnapshot loads = compute_loads(profiles, network);
  std::vector<double> q(network.horizon());
  assemble_gradient(loads, network, dual.values(), k, q);
  return q;
}

void dual_update(DualState& dual, const LoadSnapshot& loads, const Network& network, double step) {
  const std::size_t T = network.horizon();
  const double cap = dual.cap();
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto h = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) {
      double& mu = dual(l, t);
      mu = std::max(std::min(mu + step * (loads.feeder(l, t, T) - h[t]), cap), 0.0);
    }
  }
}

DualState dual_update(const DualState& dual, const ProfileSet& profiles, const Network& network, double step) {
  DualState next = dual;
  dual_update(next, compute_loads(profiles, network), network, step);
  return next;
}

void RunningAverage::add(const ProfileSet& iterate) {
  if (mean_.pev_count() != iterate.pev_count() || mean_.horizon() != iterate.horizon()) {
    mean_ = ProfileSet(iterate.pev_count(), iterate.horizon());
    count_ = 0;
  }
  ++count_;
  const double n = static_cast<double>(count_);
  auto mean = mean_.values();
  const auto x = iterate.values();
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (x[i] - mean[i]) / n;
}

ProfileSet averaged_iterate(std::span<const ProfileSet> history) {
  if (history.empty()) throw ConfigurationError("averaged iterate needs at least one iterate");
  RunningAverage avg;
  for (const auto& p : history) avg.add(p);
  return avg.value();
}

SubgradientBounds subgradient_bounds(const Network& network, std::span<const PevSpec> fleet, double mu_max) {
  if (fleet.size() != network.pev_count()) throw ConfigurationError("fleet does not match the network");
  const std::size_t T = network.horizon();
  const double L = static_cast<double>(network.feeder_count());
  const auto D = network.total_base_load();
  SubgradientBounds b;
  double sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double pmax = 0.0;
    for (const auto& pev : fleet) pmax += pev.cap(t);
    sum += D[t] + pmax;
  }
  b.primal = static_cast<double>(fleet.size()) * (2.0 * sum + L * static_cast<double>(T) * mu_max);
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto h = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) {
      double reach = 0.0;
      for (std::size_t k : network.members(l)) reach += fleet[k].cap(t);
      b.dual += std::max(reach - h[t], h[t]);
    }
  }
  b.uniform = std::max(b.primal, b.dual);
  return b;
}

std::pair<double, double> primal_dual_iteration(const Network& network, std::span<const PevSpec> fleet, double step,
                                                const ProjectionOptions& projection, const ProfileSet& current,
                                                const DualState& dual, ProfileSet& next, DualState& next_dual,
                                                PrimalDualWorkspace& ws) {
  const std::size_t T = network.horizon();
  compute_loads(current, network, ws.loads);
  ws.gradient.resize(T);
  double primal_sq = 0.0;
  for (std::size_t k = 0; k < fleet.size(); ++k) {
    assemble_gradient(ws.loads, network, dual.values(), k, ws.gradient);
    for (double q : ws.gradient) primal_sq += q * q;
    project_onto_pev_set(current.row(k), ws.gradient, step, fleet[k], projection, next.row(k), ws.projection);
  }
  double dual_sq = 0.0;
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto h = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) {
      const double g = ws.loads.feeder(l, t, T) - h[t];
      dual_sq += g * g;
    }
  }
  next_dual = dual;
  dual_update(next_dual, ws.loads, network, step);
  return {primal_sq, dual_sq};
}

ProfileSet initial_primal(const Network& network, std::span<const PevSpec> fleet, const ProjectionOptions& projection) {
  ProfileSet p(fleet.size(), network.horizon());
  const std::vector<double> zero(network.horizon(), 0.0);
  ProjectionWorkspace ws;
  for (std::size_t k = 0; k < fleet.size(); ++k) {
    project_onto_pev_set(zero, zero, 1.0, fleet[k], projection, p.row(k), ws);
  }
  return p;
}

namespace {

TraceRow make_row(std::size_t m, const ProfileSet& iterate, const ProfileSet& averaged, const DualState& dual,
                  const Network& network, double step_norm) {
  TraceRow row;
  row.iteration = m;
  row.objective = variance_objective(iterate, network);
  row.augmented = variance_objective(averaged, network);
  const LoadSnapshot loads = compute_loads(averaged, network);
  row.violation_norm = violation_norm(loads, network);
  row.max_violation = max_constraint_violation(loads, network);
  row.normalized_overload = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < network.horizon(); ++t) {
    row.normalized_overload = std::max(row.normalized_overload, normalized_max_overload(loads, network, t));
  }
  row.step_norm = step_norm;
  row.max_multiplier = dual.max();
  return row;
}

}  // namespace

PrimalDualResult run_primal_dual(const Network& network, std::span<const PevSpec> fleet,
                                 const PrimalDualConfig& config) {
  if (!(config.step > 0.0) || !std::isfinite(config.step)) throw ConfigurationError("step size must be positive");
  if (config.iterations == 0) throw ConfigurationError("primal-dual needs at least one iteration");
  const auto started = std::chrono::steady_clock::now();
  const std::size_t T = network.horizon();
  const std::size_t L = network.feeder_count();

  PrimalDualResult result;
  result.step = config.step;
  if (config.slater_slack) {
    result.slack = *config.slater_slack;
    result.slater_verified = result.slack > 0.0;
  } else {
    const FeasibilityReport report = assess_feasibility(network, fleet);
    result.slack = report.slater_slack;
    result.slater_verified = report.slater_verified;
  }
  if (!result.slater_verified) {
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < L; ++l) {
      for (double h : network.headroom(l)) smallest = std::min(smallest, h);
    }
    result.slack = 0.01 * smallest;
    result.warnings.push_back("Slater slack unverified; mu^max uses a fallback slack and the bounds are not guaranteed");
  }
  result.mu_max = compute_mu_max(network, fleet, result.slack);
  result.bounds = subgradient_bounds(network, fleet, result.mu_max);
  const double N2 = result.bounds.uniform * result.bounds.uniform;
  result.violation_bound = config.step * N2 / 2.0;
  result.cost_upper_gap = config.step * N2;
  result.cost_lower_gap = config.step * static_cast<double>(L * T) * result.mu_max * N2;

  auto& trace = result.trace;
  trace.method = "primal-dual";
  trace.add_metadata("step", config.step);
  trace.add_metadata("iterations_requested", static_cast<double>(config.iterations));
  trace.add_metadata("slater_slack", result.slack);
  trace.add_metadata("slater", result.slater_verified ? "verified" : "unverified");
  trace.add_metadata("mu_max", result.mu_max);
  trace.add_metadata("L1", result.bounds.primal);
  trace.add_metadata("L2", result.bounds.dual);
  trace.add_metadata("N", result.bounds.uniform);
  trace.add_metadata("violation_bound", result.violation_bound);
  trace.add_metadata("cost_upper_gap", result.cost_upper_gap);
  trace.add_metadata("cost_lower_gap", result.cost_lower_gap);
  if (config.optimal_value) {
    trace.add_metadata("f_star", *config.optimal_value);
    trace.add_metadata("cost_upper_bound", *config.optimal_value + result.cost_upper_gap);
    trace.add_metadata("cost_lower_bound", *config.optimal_value - result.cost_lower_gap);
  }
  trace.add_metadata("projection", config.projection.method == ProjectionMethod::exact ? "exact" : "bisection");

  const std::size_t stride = config.record_stride ? config.record_stride : default_record_stride(config.iterations);
  ProfileSet current = initial_primal(network, fleet, config.projection);
  ProfileSet next(fleet.size(), T);
  DualState dual(L, T, result.mu_max, config.initial_multiplier);
  DualState next_dual;
  RunningAverage average(fleet.size(), T);
  PrimalDualWorkspace ws;

  for (std::size_t m = 0; m < config.iterations; ++m) {
    const auto [primal_sq, dual_sq] =
        primal_dual_iteration(network, fleet, config.step, config.projection, current, dual, next, next_dual, ws);
    result.max_primal_norm = std::max(result.max_primal_norm, std::sqrt(primal_sq));
    result.max_dual_norm = std::max(result.max_dual_norm, std::sqrt(dual_sq));
    average.add(current);  // p_hat^{m+1} covers p^0 .. p^m
    double step_norm = 0.0;
    const auto a = current.values();
    const auto b = next.values();
    for (std::size_t i = 0; i < a.size(); ++i) step_norm = std::max(step_norm, std::abs(a[i] - b[i]));
    std::swap(current, next);
    std::swap(dual, next_dual);
    const std::size_t produced = m + 1;
    if (config.observer) config.observer({produced, current, dual, average.value()});
    if (produced % stride == 0 || produced == config.iterations || m == 0) {
      trace.rows.push_back(make_row(produced, current, average.value(), dual, network, step_norm));
    }
  }

  result.iterations = config.iterations;
  result.averaged = average.value();
  result.last = std::move(current);
  result.dual = std::move(dual);
  result.objective = variance_objective(result.averaged, network);
  result.violation = violation_norm(compute_loads(result.averaged, network), network);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  trace.add_metadata("max_primal_subgradient_norm", result.max_primal_norm);
  trace.add_metadata("max_dual_subgradient_norm", result.max_dual_norm);
  trace.add_metadata("wall_time_s", seconds);
  for (const auto& w : result.warnings) trace.add_metadata("warning", w);
  return result;
}

}  // namespace pevsched
