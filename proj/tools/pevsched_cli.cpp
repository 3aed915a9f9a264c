// Command-line front end. Talks to the library through the C API only.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pevsched/pevsched.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int exit_code(pev_status s) {
  switch (s) {
    case PEV_OK: return kExitOk;
    case PEV_ERR_IO:
    case PEV_ERR_INTERNAL:
    case PEV_ERR_NO_SOLUTION: return kExitRuntime;
    default: return kExitValidation;
  }
}

int report(pev_status s) {
  std::cerr << "pevsched: " << pev_status_name(s) << ": " << pev_last_error() << "\n";
  return exit_code(s);
}

struct ScenarioHandle {
  pev_scenario* ptr = nullptr;
  ~ScenarioHandle() { pev_scenario_free(ptr); }
};

struct ResultHandle {
  pev_result* ptr = nullptr;
  ~ResultHandle() { pev_result_free(ptr); }
};

struct RunFlags {
  std::string method = "penalty";
  double alpha = 0.0;
  std::size_t iterations = 100000;
  double tolerance = 1e-9;
  double eps_hat = 0.01;
  double slater_eps = 0.0;
  bool no_safeguard = false;
  std::string projection = "exact";
  double projection_tolerance = 1e-8;
  std::size_t stride = 0;
};

pev_method method_of(const std::string& name) {
  if (name == "primal-dual") return PEV_METHOD_PRIMAL_DUAL;
  if (name == "unconstrained") return PEV_METHOD_UNCONSTRAINED;
  return PEV_METHOD_PENALTY;
}

pev_run_options options_of(const RunFlags& f, pev_method method) {
  pev_run_options o;
  pev_run_options_default(method, &o);
  if (f.alpha > 0.0) o.step = f.alpha;
  o.iterations = f.iterations;
  o.tolerance = f.tolerance;
  o.eps_hat = f.eps_hat;
  o.slater_slack = f.slater_eps;
  o.safeguard = f.no_safeguard ? 0 : 1;
  o.projection = f.projection == "bisection" ? PEV_PROJECTION_BISECTION : PEV_PROJECTION_EXACT;
  o.projection_tolerance = f.projection_tolerance;
  o.record_stride = f.stride;
  return o;
}

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_method) {
  if (with_method) {
    cmd->add_option("--method", f.method, "penalty, primal-dual or unconstrained")
        ->check(CLI::IsMember({"penalty", "primal-dual", "unconstrained"}))
        ->capture_default_str();
  }
  cmd->add_option("--alpha", f.alpha, "step size; 0 picks 0.9 alpha_max (penalty) or 1e-2 (primal-dual)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--iterations", f.iterations, "iteration count M (cap for penalty runs)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--tolerance", f.tolerance, "penalty stop on the step norm, kW")->capture_default_str();
  cmd->add_option("--eps-hat", f.eps_hat, "penalty exponent offset")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--slater-eps", f.slater_eps, "Slater slack for mu_max, kW; 0 estimates it")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--no-safeguard", f.no_safeguard, "allow penalty steps above the safe bound");
  cmd->add_option("--projection", f.projection, "exact or bisection")
      ->check(CLI::IsMember({"exact", "bisection"}))
      ->capture_default_str();
  cmd->add_option("--proj-tol", f.projection_tolerance, "bisection tolerance, kW")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--stride", f.stride, "trace record stride; 0 picks ceil(M / 1e4)")->capture_default_str();
}

pev_status load(const std::string& path, ScenarioHandle& h) { return pev_scenario_load(path.c_str(), &h.ptr); }

void print_summary(const char* name, const pev_summary& s) {
  std::printf("%-14s variance=%.6f objective=%.6f max_overload=%.6f iterations=%zu step=%.6g time=%.3fs\n", name,
              s.variance, s.objective, s.max_normalized_overload, s.iterations, s.step, s.wall_time_s);
}

int cmd_validate(const std::string& path) {
  ScenarioHandle h;
  if (pev_status s = load(path, h); s != PEV_OK) return report(s);
  std::size_t pevs = 0, feeders = 0, horizon = 0, depth = 0;
  pev_scenario_dims(h.ptr, &pevs, &feeders, &horizon, &depth);
  pev_validation v{};
  const pev_status s = pev_validate(h.ptr, &v);
  std::printf("scenario: %s\npevs: %zu\nfeeders: %zu\nhorizon: %zu\nmax_depth: %zu\n", path.c_str(), pevs, feeders,
              horizon, depth);
  std::printf("necessary_conditions: %s\nslater_slack: %.17g\nslater_verified: %s\nwarnings: %zu\n",
              v.necessary_ok ? "ok" : "violated", v.slater_slack, v.slater_verified ? "yes" : "no", v.warning_count);
  for (std::size_t i = 0; i < v.warning_count; ++i) std::printf("warning: %s\n", pev_validation_warning(h.ptr, i));
  return s == PEV_OK ? kExitOk : report(s);
}

int cmd_run(const std::string& path, const RunFlags& flags, const std::string& trace, const std::string& profiles,
            const std::string& hourly) {
  ScenarioHandle h;
  if (pev_status s = load(path, h); s != PEV_OK) return report(s);
  pev_validation v{};
  if (pev_status s = pev_validate(h.ptr, &v); s != PEV_OK) return report(s);
  const pev_run_options o = options_of(flags, method_of(flags.method));
  ResultHandle r;
  if (pev_status s = pev_run(h.ptr, &o, &r.ptr); s != PEV_OK) return report(s);
  pev_summary sum{};
  pev_result_summary(r.ptr, &sum);
  print_summary(flags.method.c_str(), sum);
  for (std::size_t i = 0; i < pev_result_warning_count(r.ptr); ++i) {
    std::fprintf(stderr, "warning: %s\n", pev_result_warning(r.ptr, i));
  }
  if (!trace.empty()) {
    if (pev_status s = pev_result_write_trace(r.ptr, trace.c_str()); s != PEV_OK) return report(s);
  }
  if (!profiles.empty()) {
    if (pev_status s = pev_result_write_profiles(r.ptr, profiles.c_str()); s != PEV_OK) return report(s);
  }
  if (!hourly.empty()) {
    if (pev_status s = pev_result_write_hourly(r.ptr, hourly.c_str()); s != PEV_OK) return report(s);
  }
  return kExitOk;
}

int cmd_compare(const std::string& path, const RunFlags& penalty, const RunFlags& dual, const std::string& out) {
  ScenarioHandle h;
  if (pev_status s = load(path, h); s != PEV_OK) return report(s);
  pev_validation v{};
  if (pev_status s = pev_validate(h.ptr, &v); s != PEV_OK) return report(s);
  const pev_run_options pen = options_of(penalty, PEV_METHOD_PENALTY);
  const pev_run_options pd = options_of(dual, PEV_METHOD_PRIMAL_DUAL);
  pev_summary rows[3]{};
  if (pev_status s = pev_compare(h.ptr, &pen, &pd, out.c_str(), rows); s != PEV_OK) return report(s);
  const char* names[3] = {"unconstrained", "penalty", "primal-dual"};
  for (int i = 0; i < 3; ++i) print_summary(names[i], rows[i]);
  std::printf("outputs: %s\n", out.c_str());
  return kExitOk;
}

std::vector<double> numbers(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw std::runtime_error(std::string("field '") + key + "' must be an array");
  return j[key].get<std::vector<double>>();
}

int cmd_project(const std::string& path) {
  nlohmann::json problem;
  try {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "pevsched: cannot open '" << path << "'\n";
      return kExitRuntime;
    }
    problem = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "pevsched: parse error: " << e.what() << "\n";
    return kExitValidation;
  }
  std::vector<double> b, pmax;
  double demand = 0.0, tolerance = 1e-8;
  std::string method = "exact";
  try {
    b = numbers(problem, "b");
    pmax = numbers(problem, "pmax");
    demand = problem.at("demand").get<double>();
    if (problem.contains("method")) method = problem["method"].get<std::string>();
    if (problem.contains("tolerance")) tolerance = problem["tolerance"].get<double>();
  } catch (const std::exception& e) {
    std::cerr << "pevsched: parse error: " << e.what() << "\n";
    return kExitValidation;
  }
  if (b.size() != pmax.size() || (method != "exact" && method != "bisection")) {
    std::cerr << "pevsched: parse error: b and pmax must have equal length; method is exact or bisection\n";
    return kExitValidation;
  }
  std::vector<double> profile(b.size());
  double level = 0.0;
  std::size_t steps = 0;
  const pev_status s = pev_project(b.data(), pmax.data(), b.size(), demand,
                                   method == "bisection" ? PEV_PROJECTION_BISECTION : PEV_PROJECTION_EXACT, tolerance,
                                   profile.data(), &level, &steps);
  if (s != PEV_OK) return report(s);
  double sum = 0.0;
  for (double p : profile) sum += p;
  nlohmann::json out{{"method", method}, {"profile", profile}, {"level", level}, {"steps", steps}, {"sum", sum}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_oracle(const std::string& path, double alpha, std::size_t iterations, double slater, double grid,
               const std::string& out) {
  ScenarioHandle h;
  if (pev_status s = load(path, h); s != PEV_OK) return report(s);
  std::size_t pevs = 0, horizon = 0;
  pev_scenario_dims(h.ptr, &pevs, nullptr, &horizon, nullptr);
  pev_oracle_options o;
  pev_oracle_options_default(&o);
  if (alpha > 0.0) o.step = alpha;
  if (iterations > 0) o.iterations = iterations;
  o.slater_slack = slater;
  o.grid = grid;
  pev_oracle_report r{};
  std::vector<double> profiles(pevs * horizon);
  if (pev_status s = pev_oracle_solve(h.ptr, &o, &r, profiles.data(), profiles.size()); s != PEV_OK) return report(s);
  nlohmann::json j{{"f_star", r.value},
                   {"unrepaired_value", r.unrepaired_value},
                   {"repair_shift", r.repair_shift},
                   {"max_relative_violation", r.max_violation},
                   {"iterations", r.iterations},
                   {"step", o.step},
                   {"confident", r.confident != 0}};
  if (grid > 0.0) {
    j["grid_resolution"] = grid;
    j["grid_value"] = r.grid_value;
    j["grid_confident"] = r.grid_confident != 0;
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < pevs; ++k) {
    rows.emplace_back(profiles.begin() + static_cast<std::ptrdiff_t>(k * horizon),
                      profiles.begin() + static_cast<std::ptrdiff_t>((k + 1) * horizon));
  }
  j["profiles"] = rows;
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) {
      std::cerr << "pevsched: cannot open '" << out << "' for writing\n";
      return kExitRuntime;
    }
    f << j.dump(2) << "\n";
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_generate(std::uint64_t seed, double scale, double nu, const std::string& out) {
  ScenarioHandle h;
  if (pev_status s = pev_scenario_generate_desk13(seed, scale, nu, &h.ptr); s != PEV_OK) return report(s);
  if (pev_status s = pev_scenario_save(h.ptr, out.c_str()); s != PEV_OK) return report(s);
  std::size_t pevs = 0, feeders = 0;
  pev_scenario_dims(h.ptr, &pevs, &feeders, nullptr, nullptr);
  std::printf("wrote %s (%zu feeders, %zu pevs)\n", out.c_str(), feeders, pevs);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-ahead PEV charging scheduler over a feeder tree"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pev_version());

  std::string scenario;

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario", scenario, "scenario file")->required();

  RunFlags run_flags;
  std::string trace, profiles, hourly;
  auto* run = app.add_subcommand("run", "run one optimizer");
  run->add_option("scenario", scenario, "scenario file")->required();
  add_run_flags(run, run_flags, true);
  run->add_option("--trace", trace, "write the iteration trace CSV");
  run->add_option("--profiles", profiles, "write the final profiles CSV");
  run->add_option("--hourly", hourly, "write the hourly load CSV");

  RunFlags penalty_flags, dual_flags;
  dual_flags.method = "primal-dual";
  std::string out_dir = "compare-out";
  auto* compare = app.add_subcommand("compare", "run all three strategies and write comparison CSVs");
  compare->add_option("scenario", scenario, "scenario file")->required();
  compare->add_option("--out", out_dir, "output directory")->capture_default_str();
  compare->add_option("--penalty-alpha", penalty_flags.alpha, "penalty step; 0 picks 0.9 alpha_max")
      ->capture_default_str();
  compare->add_option("--penalty-iterations", penalty_flags.iterations, "penalty iteration cap")
      ->capture_default_str();
  compare->add_option("--eps-hat", penalty_flags.eps_hat, "penalty exponent offset")->capture_default_str();
  compare->add_option("--pd-alpha", dual_flags.alpha, "primal-dual step; 0 picks 1e-2")->capture_default_str();
  compare->add_option("--pd-iterations", dual_flags.iterations, "primal-dual iteration count")
      ->capture_default_str();
  compare->add_option("--slater-eps", dual_flags.slater_eps, "Slater slack, kW; 0 estimates it")
      ->capture_default_str();

  std::string problem;
  auto* project = app.add_subcommand("project", "project one target onto a box-and-sum set");
  project->add_option("problem", problem, "JSON file with b, pmax, demand and optional method, tolerance")
      ->required();

  double oracle_alpha = 0.0, oracle_slater = 0.0, oracle_grid = 0.0;
  std::size_t oracle_iterations = 0;
  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "reference solve of the constrained problem (small instances)");
  oracle->add_option("scenario", scenario, "scenario file")->required();
  oracle->add_option("--alpha", oracle_alpha, "primal-dual step; 0 picks 1e-4")->capture_default_str();
  oracle->add_option("--iterations", oracle_iterations, "iteration budget; 0 picks 1e7")->capture_default_str();
  oracle->add_option("--slater-eps", oracle_slater, "Slater slack, kW; 0 estimates it")->capture_default_str();
  oracle->add_option("--grid", oracle_grid, "also run the exhaustive grid at this resolution, kW")
      ->capture_default_str();
  oracle->add_option("--out", oracle_out, "also write the JSON report here");

  std::uint64_t seed = 13;
  double scale = 0.1, nu = 1.5;
  std::string generate_out = "desk13.json";
  auto* generate = app.add_subcommand("generate", "write the synthetic 13-node desk scenario");
  generate->add_option("--seed", seed, "base-load noise seed")->capture_default_str();
  generate->add_option("--scale", scale, "fleet and peak scale in (0, 1]")->capture_default_str();
  generate->add_option("--nu", nu, "capacity headroom factor")->capture_default_str();
  generate->add_option("--out", generate_out, "output file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (*validate) return cmd_validate(scenario);
  if (*run) return cmd_run(scenario, run_flags, trace, profiles, hourly);
  if (*compare) return cmd_compare(scenario, penalty_flags, dual_flags, out_dir);
  if (*project) return cmd_project(problem);
  if (*oracle) return cmd_oracle(scenario, oracle_alpha, oracle_iterations, oracle_slater, oracle_grid, oracle_out);
  if (*generate) return cmd_generate(seed, scale, nu, generate_out);
  return kExitValidation;
}
