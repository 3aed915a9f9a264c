#include "penalty_method.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace pevsched {

double PowerPenalty::value(double x) const {
  if (x <= 0.0 || beta == 0.0) return 0.0;
  return beta * std::pow(x, 2.0 + offset);
}

double PowerPenalty::derivative(double x) const {
  if (x <= 0.0 || beta == 0.0) return 0.0;
  return beta * (2.0 + offset) * std::pow(x, 1.0 + offset);
}

double PowerPenalty::curvature(double x) const {
  if (x < 0.0 || beta == 0.0) return 0.0;
  if (x == 0.0) return offset == 0.0 ? 2.0 * beta : 0.0;
  return beta * (2.0 + offset) * (1.0 + offset) * std::pow(x, offset);
}

OverloadCost OverloadCost::uniform(std::size_t feeder_count, double beta, double offset) {
  return OverloadCost{std::vector<PowerPenalty>(feeder_count, PowerPenalty{beta, offset})};
}

std::pair<double, double> cost_and_derivative(const PowerPenalty& cost, double x) {
  return {cost.value(x), cost.derivative(x)};
}

OverloadCost default_overload_cost(const Network& network, std::span<const PevSpec> fleet, double offset) {
  const std::size_t T = network.horizon();
  const auto D = network.total_base_load();
  double peak = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double pmax = 0.0;
    for (const auto& pev : fleet) pmax += pev.cap(t);
    peak = std::max(peak, D[t] + pmax);
  }
  const double gradient_scale = 2.0 * peak;

  OverloadCost cost;
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto h = network.headroom(l);
    const double reference = 0.1 * *std::min_element(h.begin(), h.end());
    const double beta = 10.0 * gradient_scale / ((2.0 + offset) * std::pow(reference, 1.0 + offset));
    cost.feeders.push_back({beta, offset});
  }
  return cost;
}

double effective_curvature_bound(const Network& network, std::span<const PevSpec> fleet, const OverloadCost& cost) {
  double bound = 0.0;
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    double reach = 0.0;
    for (std::size_t k : network.members(l)) {
      double m = 0.0;
      for (std::size_t t = 0; t < network.horizon(); ++t) m = std::max(m, fleet[k].cap(t));
      reach += m;
    }
    // C'' is nondecreasing on x >= 0, so the supremum sits at the upper end.
    bound = std::max(bound, cost.feeders[l].curvature(reach));
  }
  return bound;
}

double max_step_size(std::size_t pev_count, std::size_t max_depth, double curvature_bound) {
  if (pev_count == 0 || max_depth == 0) throw ConfigurationError("step bound needs at least one PEV and one feeder");
  if (curvature_bound < 0.0) throw ConfigurationError("curvature bound must be nonnegative");
  const double K = static_cast<double>(pev_count);
  const double d = static_cast<double>(max_depth);
  return 1.0 / (2.0 * K * (1.0 + d * curvature_bound / 2.0));
}

double augmented_objective(const ProfileSet& profiles, const Network& network, const OverloadCost& cost) {
  const std::size_t T = network.horizon();
  const auto D = network.total_base_load();
  long double total = 0.0L;
  for (std::size_t t = 0; t < T; ++t) {
    long double load = D[t];
    for (std::size_t k = 0; k < profiles.pev_count(); ++k) load += profiles(k, t);
    total += load * load;
  }
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto& c = cost.feeders[l];
    if (c.beta == 0.0) continue;
    const auto h = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) {
      long double load = 0.0L;
      for (std::size_t k : network.members(l)) load += profiles(k, t);
      const long double x = load - h[t];
      if (x > 0.0L) total += static_cast<long double>(c.beta) * std::pow(x, 2.0L + c.offset);
    }
  }
  return static_cast<double>(total);
}

void feeder_penalty_terms(const LoadSnapshot& loads, const Network& network, const OverloadCost& cost,
                          std::vector<double>& out) {
  const std::size_t T = network.horizon();
  out.resize(network.feeder_count() * T);
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    const auto h = network.headroom(l);
    for (std::size_t t = 0; t < T; ++t) out[l * T + t] = cost.feeders[l].derivative(loads.feeder(l, t, T) - h[t]);
  }
}

void assemble_gradient(const LoadSnapshot& loads, const Network& network, std::span<const double> feeder_terms,
                       std::size_t k, std::span<double> out) {
  const std::size_t T = network.horizon();
  const auto D = network.total_base_load();
  for (std::size_t t = 0; t < T; ++t) out[t] = 2.0 * (D[t] + loads.total_pev[t]);
  for (std::size_t l : network.path(k)) {
    const double* term = feeder_terms.data() + l * T;
    for (std::size_t t = 0; t < T; ++t) out[t] += term[t];
  }
}

std::vector<double> penalty_gradient(const ProfileSet& profiles, const Network& network, const OverloadCost& cost,
                                     std::size_t k) {
  const LoadSnapshot loads = compute_loads(profiles, network);
  std::vector<double> terms;
  feeder_penalty_terms(loads, network, cost, terms);
  std::vector<double> q(network.horizon());
  assemble_gradient(loads, network, terms, k, q);
  return q;
}

void penalty_iteration(const Network& network, std::span<const PevSpec> fleet, const OverloadCost& cost,
                       double step, const ProjectionOptions& projection, const ProfileSet& current,
                       ProfileSet& next, PenaltyWorkspace& ws) {
  compute_loads(current, network, ws.loads);
  feeder_penalty_terms(ws.loads, network, cost, ws.terms);
  ws.gradient.resize(network.horizon());
  for (std::size_t k = 0; k < fleet.size(); ++k) {
    assemble_gradient(ws.loads, network, ws.terms, k, ws.gradient);
    project_onto_pev_set(current.row(k), ws.gradient, step, fleet[k], projection, next.row(k), ws.projection);
  }
}

namespace {

double inf_norm_diff(const ProfileSet& a, const ProfileSet& b) {
  double m = 0.0;
  const auto x = a.values();
  const auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

TraceRow make_row(std::size_t m, const ProfileSet& p, const Network& network, double augmented,
                  double step_norm) {
  TraceRow row;
  row.iteration = m;
  row.objective = variance_objective(p, network);
  row.augmented = augmented;
  const LoadSnapshot loads = compute_loads(p, network);
  row.max_violation = max_constraint_violation(loads, network);
  row.violation_norm = violation_norm(loads, network);
  row.normalized_overload = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < network.horizon(); ++t) {
    row.normalized_overload = std::max(row.normalized_overload, normalized_max_overload(loads, network, t));
  }
  row.step_norm = step_norm;
  row.max_multiplier = std::numeric_limits<double>::quiet_NaN();
  return row;
}

}  // namespace

PenaltyResult run_penalty(const Network& network, std::span<const PevSpec> fleet, const OverloadCost& cost,
                          const PenaltyConfig& config) {
  if (cost.feeders.size() != network.feeder_count()) {
    throw ConfigurationError("overload cost must define one penalty per feeder");
  }
  if (config.step < 0.0 || !std::isfinite(config.step)) throw ConfigurationError("step size must be positive");
  const auto started = std::chrono::steady_clock::now();

  PenaltyResult result;
  result.curvature_bound = config.curvature_override ? *config.curvature_override
                                                     : effective_curvature_bound(network, fleet, cost);
  const std::size_t K = fleet.size();
  result.step_bound = K == 0 ? std::numeric_limits<double>::infinity()
                             : max_step_size(K, network.max_depth(), result.curvature_bound);
  result.step = config.step > 0.0 ? config.step : (K == 0 ? 1.0 : 0.9 * result.step_bound);
  if (config.safeguard && !(result.step < result.step_bound)) {
    std::ostringstream os;
    os << "step size " << result.step << " is not below the safe bound " << result.step_bound;
    throw ConfigurationError(os.str());
  }
  result.guarantees_void = !config.safeguard && !(result.step < result.step_bound);

  auto& trace = result.trace;
  trace.method = std::all_of(cost.feeders.begin(), cost.feeders.end(), [](const PowerPenalty& c) { return c.beta == 0.0; })
                     ? "unconstrained"
                     : "penalty";
  trace.add_metadata("step", result.step);
  trace.add_metadata("step_bound", result.step_bound);
  trace.add_metadata("curvature_bound", result.curvature_bound);
  trace.add_metadata("pev_count", static_cast<double>(K));
  trace.add_metadata("max_depth", static_cast<double>(network.max_depth()));
  trace.add_metadata("max_iterations", static_cast<double>(config.max_iterations));
  trace.add_metadata("tolerance", config.tolerance);
  trace.add_metadata("safeguard", config.safeguard ? "on" : "off");
  trace.add_metadata("guarantees", result.guarantees_void ? "void" : "descent");
  trace.add_metadata("projection", config.projection.method == ProjectionMethod::exact ? "exact" : "bisection");
  if (!cost.feeders.empty()) {
    trace.add_metadata("penalty_offset", cost.feeders.front().offset);
    double bmin = std::numeric_limits<double>::infinity(), bmax = 0.0;
    for (const auto& c : cost.feeders) {
      bmin = std::min(bmin, c.beta);
      bmax = std::max(bmax, c.beta);
    }
    trace.add_metadata("beta_min", bmin);
    trace.add_metadata("beta_max", bmax);
  }

  const std::size_t stride = config.record_stride ? config.record_stride : default_record_stride(config.max_iterations);
  ProfileSet current(K, network.horizon());
  ProfileSet next(K, network.horizon());
  PenaltyWorkspace ws;

  double value = augmented_objective(current, network, cost);
  trace.rows.push_back(make_row(0, current, network, value, 0.0));

  std::size_t m = 0;
  double step_norm = 0.0;
  while (m < config.max_iterations) {
    penalty_iteration(network, fleet, cost, result.step, config.projection, current, next, ws);
    step_norm = inf_norm_diff(current, next);
    std::swap(current, next);
    ++m;
    const double updated = augmented_objective(current, network, cost);
    // p^0 = 0 lies outside D, so descent is only promised from p^1 on.
    if (m >= 2 && updated > value + 1e-9) {
      ++result.descent_violations;
      if (config.safeguard) {
        std::ostringstream os;
        os << "augmented objective rose from " << format_double(value) << " to " << format_double(updated)
           << " at iteration " << m << " despite a safe step size";
        throw InternalError(os.str());
      }
    }
    value = updated;
    if (config.observer) config.observer(m, current);
    const bool stop = step_norm < config.tolerance;
    if (m % stride == 0 || stop || m == config.max_iterations) {
      trace.rows.push_back(make_row(m, current, network, value, step_norm));
    }
    if (stop) {
      result.converged = true;
      break;
    }
  }

  result.iterations = m;
  result.augmented = value;
  result.objective = variance_objective(current, network);
  result.profiles = std::move(current);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  trace.add_metadata("iterations", static_cast<double>(m));
  trace.add_metadata("converged", result.converged ? "yes" : "no");
  trace.add_metadata("wall_time_s", seconds);
  return result;
}

}  // namespace pevsched
