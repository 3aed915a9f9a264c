#include "pevsched/pevsched.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "oracle.hpp"
#include "projection.hpp"
#include "scenario_io.hpp"

using namespace pevsched;

struct pev_scenario {
  Scenario scenario;
  std::vector<std::string> warnings;
};

struct pev_result {
  std::shared_ptr<const Scenario> scenario;
  StrategyRun run;
  pev_summary summary{};
  std::vector<std::string> warnings;
};

namespace {

thread_local std::string last_error;

pev_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return PEV_ERR_PARSE;
    case ErrorCode::malformed_topology: return PEV_ERR_TOPOLOGY;
    case ErrorCode::capacity_infeasible: return PEV_ERR_CAPACITY;
    case ErrorCode::invalid_window: return PEV_ERR_WINDOW;
    case ErrorCode::infeasible_scenario: return PEV_ERR_INFEASIBLE;
    case ErrorCode::invalid_configuration: return PEV_ERR_CONFIG;
    case ErrorCode::no_solution: return PEV_ERR_NO_SOLUTION;
    case ErrorCode::io: return PEV_ERR_IO;
    case ErrorCode::internal: return PEV_ERR_INTERNAL;
  }
  return PEV_ERR_INTERNAL;
}

pev_status fail(pev_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
pev_status guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PEV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PEV_ERR_INTERNAL, e.what());
  }
}

ProjectionOptions projection_of(const pev_run_options& o) {
  ProjectionOptions p;
  p.method = o.projection == PEV_PROJECTION_BISECTION ? ProjectionMethod::bisection : ProjectionMethod::exact;
  if (o.projection_tolerance > 0.0) p.tolerance = o.projection_tolerance;
  return p;
}

CompareOptions compare_options(const pev_run_options* penalty, const pev_run_options* primal_dual) {
  pev_run_options pen, pd;
  pev_run_options_default(PEV_METHOD_PENALTY, &pen);
  pev_run_options_default(PEV_METHOD_PRIMAL_DUAL, &pd);
  if (penalty) pen = *penalty;
  if (primal_dual) pd = *primal_dual;
  CompareOptions c;
  c.penalty.step = pen.step;
  c.penalty.max_iterations = pen.iterations;
  c.penalty.tolerance = pen.tolerance;
  c.penalty.safeguard = pen.safeguard != 0;
  c.penalty.projection = projection_of(pen);
  c.penalty.record_stride = pen.record_stride;
  c.penalty_offset = pen.eps_hat;
  c.primal_dual.step = pd.step > 0.0 ? pd.step : 1e-2;
  c.primal_dual.iterations = pd.iterations;
  if (pd.slater_slack > 0.0) c.primal_dual.slater_slack = pd.slater_slack;
  c.primal_dual.projection = projection_of(pd);
  c.primal_dual.record_stride = pd.record_stride;
  return c;
}

pev_summary summarize(const StrategyRun& run, const Network& net) {
  pev_summary s{};
  s.iterations = run.iterations;
  const std::string* converged = run.trace.find_metadata("converged");
  s.converged = converged && *converged == "yes";
  if (const std::string* step = run.trace.find_metadata("step")) s.step = std::stod(*step);
  s.objective = run.objective;
  s.variance = run.variance;
  s.max_normalized_overload = run.max_overload;
  s.max_violation = max_constraint_violation(compute_loads(run.profiles, net), net);
  s.wall_time_s = run.wall_time_s;
  s.downstream_messages = run.messages.downstream_messages;
  s.downstream_hops = run.messages.downstream_hops;
  s.upstream_announcements = run.messages.upstream_announcements;
  return s;
}

}  // namespace

extern "C" {

const char* pev_version(void) { return "0.3.0"; }

const char* pev_last_error(void) { return last_error.c_str(); }

const char* pev_status_name(pev_status status) {
  switch (status) {
    case PEV_OK: return "ok";
    case PEV_ERR_PARSE: return to_string(ErrorCode::parse);
    case PEV_ERR_TOPOLOGY: return to_string(ErrorCode::malformed_topology);
    case PEV_ERR_CAPACITY: return to_string(ErrorCode::capacity_infeasible);
    case PEV_ERR_WINDOW: return to_string(ErrorCode::invalid_window);
    case PEV_ERR_INFEASIBLE: return to_string(ErrorCode::infeasible_scenario);
    case PEV_ERR_CONFIG: return to_string(ErrorCode::invalid_configuration);
    case PEV_ERR_NO_SOLUTION: return to_string(ErrorCode::no_solution);
    case PEV_ERR_IO: return to_string(ErrorCode::io);
    case PEV_ERR_INTERNAL: return to_string(ErrorCode::internal);
    case PEV_ERR_ARGUMENT: return "invalid argument";
  }
  return "unknown status";
}

pev_status pev_scenario_load(const char* path, pev_scenario** out) {
  if (!path || !out) return fail(PEV_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open '") + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    *out = new pev_scenario{parse_scenario(buf.str(), path), {}};
    return PEV_OK;
  });
}

pev_status pev_scenario_generate_desk13(uint64_t seed, double scale, double nu, pev_scenario** out) {
  if (!out) return fail(PEV_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    Desk13Options o;
    o.seed = seed;
    o.scale = scale;
    o.nu = nu;
    *out = new pev_scenario{generate_desk13(o), {}};
    return PEV_OK;
  });
}

pev_status pev_scenario_save(const pev_scenario* scenario, const char* path) {
  if (!scenario || !path) return fail(PEV_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    save_scenario(scenario->scenario, path);
    return PEV_OK;
  });
}

void pev_scenario_free(pev_scenario* scenario) { delete scenario; }

pev_status pev_scenario_dims(const pev_scenario* scenario, size_t* pevs, size_t* feeders, size_t* horizon,
                             size_t* max_depth) {
  if (!scenario) return fail(PEV_ERR_ARGUMENT, "null scenario");
  const Network& n = scenario->scenario.network;
  if (pevs) *pevs = n.pev_count();
  if (feeders) *feeders = n.feeder_count();
  if (horizon) *horizon = n.horizon();
  if (max_depth) *max_depth = n.max_depth();
  return PEV_OK;
}

pev_status pev_validate(pev_scenario* scenario, pev_validation* out) {
  if (!scenario || !out) return fail(PEV_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const FeasibilityReport r = assess_feasibility(scenario->scenario.network, scenario->scenario.fleet);
    scenario->warnings = r.warnings;
    out->necessary_ok = r.necessary_conditions_hold();
    out->slater_verified = r.slater_verified;
    out->slater_slack = r.slater_slack;
    out->warning_count = r.warnings.size();
    if (!out->necessary_ok) return fail(PEV_ERR_INFEASIBLE, "scenario violates a necessary feasibility condition");
    return PEV_OK;
  });
}

const char* pev_validation_warning(const pev_scenario* scenario, size_t i) {
  if (!scenario || i >= scenario->warnings.size()) return nullptr;
  return scenario->warnings[i].c_str();
}

void pev_run_options_default(pev_method method, pev_run_options* out) {
  if (!out) return;
  *out = pev_run_options{};
  out->method = method;
  out->step = method == PEV_METHOD_PRIMAL_DUAL ? 1e-2 : 0.0;
  out->iterations = 100000;
  out->tolerance = 1e-9;
  out->eps_hat = 0.01;
  out->slater_slack = 0.0;
  out->safeguard = 1;
  out->projection = PEV_PROJECTION_EXACT;
  out->projection_tolerance = 1e-8;
  out->record_stride = 0;
}

pev_status pev_run(const pev_scenario* scenario, const pev_run_options* options, pev_result** out) {
  if (!scenario || !options || !out) return fail(PEV_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  if (options->method < PEV_METHOD_PENALTY || options->method > PEV_METHOD_UNCONSTRAINED) {
    return fail(PEV_ERR_ARGUMENT, "unknown method");
  }
  return guarded([&] {
    auto shared = std::make_shared<const Scenario>(scenario->scenario);
    const CompareOptions c = compare_options(options, options);
    const Strategy s = options->method == PEV_METHOD_PRIMAL_DUAL ? Strategy::primal_dual
                       : options->method == PEV_METHOD_PENALTY   ? Strategy::penalty
                                                                 : Strategy::unconstrained;
    auto result = std::make_unique<pev_result>();
    result->run = run_strategy(*shared, s, c);
    result->summary = summarize(result->run, shared->network);
    for (const auto& [k, v] : result->run.trace.metadata) {
      if (k == "warning") result->warnings.push_back(v);
    }
    result->scenario = std::move(shared);
    *out = result.release();
    return PEV_OK;
  });
}

pev_status pev_result_summary(const pev_result* result, pev_summary* out) {
  if (!result || !out) return fail(PEV_ERR_ARGUMENT, "null argument");
  *out = result->summary;
  return PEV_OK;
}

pev_status pev_result_profiles(const pev_result* result, double* out, size_t length) {
  if (!result || !out) return fail(PEV_ERR_ARGUMENT, "null argument");
  const auto values = result->run.profiles.values();
  if (length < values.size()) return fail(PEV_ERR_ARGUMENT, "output buffer too small");
  std::copy(values.begin(), values.end(), out);
  return PEV_OK;
}

pev_status pev_result_write_trace(const pev_result* result, const char* path) {
  if (!result || !path) return fail(PEV_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    write_trace_csv(std::string(path), result->run.trace);
    return PEV_OK;
  });
}

pev_status pev_result_write_hourly(const pev_result* result, const char* path) {
  if (!result || !path) return fail(PEV_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    write_hourly_csv(std::string(path), *result->scenario, result->run.profiles);
    return PEV_OK;
  });
}

pev_status pev_result_write_profiles(const pev_result* result, const char* path) {
  if (!result || !path) return fail(PEV_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    write_profiles_csv(std::string(path), *result->scenario, result->run.profiles);
    return PEV_OK;
  });
}

size_t pev_result_warning_count(const pev_result* result) { return result ? result->warnings.size() : 0; }

const char* pev_result_warning(const pev_result* result, size_t i) {
  if (!result || i >= result->warnings.size()) return nullptr;
  return result->warnings[i].c_str();
}

void pev_result_free(pev_result* result) { delete result; }

pev_status pev_compare(const pev_scenario* scenario, const pev_run_options* penalty,
                       const pev_run_options* primal_dual, const char* directory, pev_summary* summaries) {
  if (!scenario || !directory) return fail(PEV_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const Scenario& s = scenario->scenario;
    const auto runs = run_compare(s, compare_options(penalty, primal_dual));
    write_compare_outputs(directory, s, runs);
    if (summaries) {
      for (std::size_t i = 0; i < runs.size(); ++i) summaries[i] = summarize(runs[i], s.network);
    }
    return PEV_OK;
  });
}

pev_status pev_project(const double* b, const double* pmax, size_t n, double demand, pev_projection method,
                       double tolerance, double* out_profile, double* out_level, size_t* out_steps) {
  if ((n > 0 && (!b || !pmax || !out_profile))) return fail(PEV_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    for (size_t t = 0; t < n; ++t) {
      if (!std::isfinite(b[t]) || !std::isfinite(pmax[t]) || pmax[t] < 0.0) {
        throw ConfigurationError("offsets must be finite and caps finite and nonnegative");
      }
    }
    const ProjectionProblem problem{{b, n}, {pmax, n}, demand};
    ProjectionResult r;
    if (method == PEV_PROJECTION_BISECTION) {
      r = project_binary_search(problem, tolerance > 0.0 ? tolerance : 1e-8);
    } else {
      r = project_exact(problem);
    }
    std::copy(r.profile.begin(), r.profile.end(), out_profile);
    if (out_level) *out_level = r.level;
    if (out_steps) *out_steps = r.steps;
    return PEV_OK;
  });
}

void pev_oracle_options_default(pev_oracle_options* out) {
  if (!out) return;
  const OracleConfig c;
  out->step = c.step;
  out->iterations = c.iterations;
  out->slater_slack = 0.0;
  out->grid = 0.0;
}

pev_status pev_oracle_solve(const pev_scenario* scenario, const pev_oracle_options* options,
                            pev_oracle_report* report, double* profiles, size_t length) {
  if (!scenario || !report) return fail(PEV_ERR_ARGUMENT, "null argument");
  pev_oracle_options o;
  pev_oracle_options_default(&o);
  if (options) o = *options;
  return guarded([&] {
    const Scenario& s = scenario->scenario;
    OracleConfig c;
    c.step = o.step;
    c.iterations = o.iterations;
    c.slater_slack = o.slater_slack;
    const OracleSolution sol = oracle_solve_P(s, c);
    report->value = sol.value;
    report->unrepaired_value = sol.unrepaired_value;
    report->repair_shift = sol.repair_shift;
    report->max_violation = sol.max_violation;
    report->iterations = sol.iterations;
    report->confident = sol.confident;
    report->grid_value = std::numeric_limits<double>::quiet_NaN();
    report->grid_confident = 0;
    if (o.grid > 0.0) {
      const OracleSolution grid = oracle_grid_search_P(s, o.grid);
      report->grid_value = grid.value;
      report->grid_confident = grid.confident;
    }
    if (profiles) {
      const auto values = sol.profiles.values();
      if (length < values.size()) throw ConfigurationError("output buffer too small");
      std::copy(values.begin(), values.end(), profiles);
    }
    return PEV_OK;
  });
}

}  // extern "C"
