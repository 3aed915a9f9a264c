#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "coordinator.hpp"
#include "grid_model.hpp"
#include "penalty_method.hpp"
#include "primal_dual.hpp"
#include "run_trace.hpp"

namespace pevsched {

inline constexpr const char* kScenarioFormat = "pevsched-scenario v1";

/// Parses a JSON scenario. Unknown keys are rejected; errors name the
/// offending feeder or vehicle. `source` prefixes every message.
Scenario parse_scenario(std::string_view text, const std::string& source = "<string>");

/// Reads, parses and validates; the feasibility report goes to `report`.
Scenario load_scenario(const std::string& path, FeasibilityReport* report = nullptr);

/// Doubles are written with round-trip precision. Constant rate caps are
/// written as a scalar.
std::string serialize_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

/// Synthetic stand-in for the IEEE 13-bus study: substation node 650, twelve
/// feeders, six load points with residential, commercial and night-shift
/// daily curves, all-day windows.
struct Desk13Options {
  std::uint64_t seed = 13;
  double scale = 0.1;               ///< PEV count and peak shrink together
  double nu = 1.5;                  ///< rho_l = nu * max_t d_l(t)
  double peak_kw = 5000.0;          ///< system peak at scale 1
  std::size_t pevs_per_load_point = 50;  ///< at scale 1
  double demand_kwh = 10.0;
  double rate_cap_kw = 1.96;
  double noise = 0.03;              ///< relative hourly jitter of the base load
};

Scenario generate_desk13(const Desk13Options& options = {});

enum class Strategy { unconstrained, penalty, primal_dual };

const char* strategy_name(Strategy s);

struct StrategyRun {
  Strategy strategy = Strategy::unconstrained;
  ProfileSet profiles;
  RunTrace trace;
  std::size_t iterations = 0;
  double wall_time_s = 0.0;
  double variance = 0.0;       ///< population variance of D + P
  double objective = 0.0;      ///< f(p)
  double max_overload = 0.0;   ///< max_t normalized max overload
  MessageCount messages;       ///< totals over all rounds
};

struct CompareOptions {
  PenaltyConfig penalty;
  PrimalDualConfig primal_dual;
  double penalty_offset = 0.01;  ///< epsilon-hat
};

StrategyRun run_strategy(const Scenario& scenario, Strategy strategy, const CompareOptions& options);

/// Unconstrained, penalty and primal-dual in that order.
std::vector<StrategyRun> run_compare(const Scenario& scenario, const CompareOptions& options);

/// hour, base_load, pev_load, total_load, normalized_max_overload.
void write_hourly_csv(std::ostream& os, const Scenario& scenario, const ProfileSet& profiles);
void write_hourly_csv(const std::string& path, const Scenario& scenario, const ProfileSet& profiles);

/// One row per strategy.
void write_summary_csv(std::ostream& os, const std::vector<StrategyRun>& runs);
void write_summary_csv(const std::string& path, const std::vector<StrategyRun>& runs);

/// pev, hour_0 .. hour_{T-1}.
void write_profiles_csv(std::ostream& os, const Scenario& scenario, const ProfileSet& profiles);
void write_profiles_csv(const std::string& path, const Scenario& scenario, const ProfileSet& profiles);

/// <strategy>_hourly.csv per run plus summary.csv, into `directory`.
void write_compare_outputs(const std::string& directory, const Scenario& scenario, const std::vector<StrategyRun>& runs);

}  // namespace pevsched
