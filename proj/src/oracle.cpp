#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace pevsched {

namespace {

double clamp_fill(double level, double b, double pmax) { return std::min(std::max(level - b, 0.0), pmax); }

double fill_sum(double level, std::span<const double> b, std::span<const double> pmax) {
  double s = 0.0;
  for (std::size_t t = 0; t < b.size(); ++t) s += clamp_fill(level, b[t], pmax[t]);
  return s;
}

// Breakpoint projection writing into `out`; `points` is scratch.
void breakpoint_fill(std::span<const double> b, std::span<const double> pmax, double demand, std::span<double> out,
                     std::vector<double>& points) {
  const std::size_t n = b.size();
  double total = 0.0;
  for (double c : pmax) total += c;
  if (demand <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (demand >= total) {
    std::copy(pmax.begin(), pmax.end(), out.begin());
    return;
  }
  points.clear();
  for (std::size_t t = 0; t < n; ++t) {
    if (pmax[t] > 0.0) {
      points.push_back(b[t]);
      points.push_back(b[t] + pmax[t]);
    }
  }
  std::sort(points.begin(), points.end());
  double left = points.front();
  double left_sum = 0.0;
  double level = points.back();
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double right = points[i];
    const double right_sum = fill_sum(right, b, pmax);
    if (right_sum >= demand) {
      level = right_sum > left_sum ? left + (demand - left_sum) * (right - left) / (right_sum - left_sum) : right;
      break;
    }
    left = right;
    left_sum = right_sum;
  }
  for (std::size_t t = 0; t < n; ++t) out[t] = clamp_fill(level, b[t], pmax[t]);
}

// The scenario flattened from its description, without the Network class.
struct Flat {
  std::size_t K = 0, T = 0, L = 0;
  std::vector<double> D;
  std::vector<double> capacity;
  std::vector<std::vector<double>> headroom;
  std::vector<std::vector<std::size_t>> paths;  // feeder indices, any order
  std::vector<std::vector<double>> caps;
  std::vector<double> demand;
};

std::map<std::string, std::size_t> feeder_index(const NetworkDescription& d) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t l = 0; l < d.feeders.size(); ++l) idx[d.feeders[l].id] = l;
  return idx;
}

std::vector<std::size_t> walk_up(const NetworkDescription& d, const std::map<std::string, std::size_t>& idx,
                                 const std::string& start) {
  std::vector<std::size_t> chain;
  std::string id = start;
  while (!id.empty()) {
    const auto it = idx.find(id);
    if (it == idx.end() || chain.size() > d.feeders.size()) throw TopologyError("oracle: broken parent chain at " + id);
    chain.push_back(it->second);
    id = d.feeders[it->second].parent;
  }
  return chain;
}

Flat flatten(const Scenario& s) {
  const auto& d = s.description;
  Flat f;
  f.K = s.fleet.size();
  f.T = d.horizon;
  f.L = d.feeders.size();
  const auto idx = feeder_index(d);
  f.D.assign(f.T, 0.0);
  std::vector<std::vector<double>> base(f.L, std::vector<double>(f.T, 0.0));
  for (const auto& [id, series] : d.leaf_base_load) {
    for (std::size_t l : walk_up(d, idx, id)) {
      for (std::size_t t = 0; t < f.T; ++t) base[l][t] += series[t];
    }
    for (std::size_t t = 0; t < f.T; ++t) f.D[t] += series[t];
  }
  for (std::size_t l = 0; l < f.L; ++l) {
    f.capacity.push_back(d.feeders[l].capacity);
    std::vector<double> h(f.T);
    for (std::size_t t = 0; t < f.T; ++t) h[t] = d.feeders[l].capacity - base[l][t];
    f.headroom.push_back(std::move(h));
  }
  for (const auto& pev : s.fleet) {
    f.paths.push_back(walk_up(d, idx, pev.feeder));
    std::vector<double> c(f.T, 0.0);
    for (std::size_t t = pev.window_start; t < pev.window_end && t < f.T; ++t) c[t] = pev.rate_cap[t];
    f.caps.push_back(std::move(c));
    f.demand.push_back(pev.demand);
  }
  return f;
}

struct Loads {
  std::vector<double> total;                 // P(t)
  std::vector<std::vector<double>> feeder;   // P_l(t)
};

void loads_of(const Flat& f, const ProfileSet& p, Loads& out) {
  out.total.assign(f.T, 0.0);
  out.feeder.assign(f.L, std::vector<double>(f.T, 0.0));
  for (std::size_t k = 0; k < f.K; ++k) {
    for (std::size_t t = 0; t < f.T; ++t) {
      const double v = p(k, t);
      out.total[t] += v;
      for (std::size_t l : f.paths[k]) out.feeder[l][t] += v;
    }
  }
}

double objective_of(const Flat& f, const ProfileSet& p) {
  long double total = 0.0L;
  for (std::size_t t = 0; t < f.T; ++t) {
    long double load = f.D[t];
    for (std::size_t k = 0; k < f.K; ++k) load += p(k, t);
    total += load * load;
  }
  return static_cast<double>(total);
}

double max_relative_violation(const Flat& f, const Loads& loads) {
  double worst = 0.0;
  for (std::size_t l = 0; l < f.L; ++l) {
    for (std::size_t t = 0; t < f.T; ++t) {
      worst = std::max(worst, (loads.feeder[l][t] - f.headroom[l][t]) / f.capacity[l]);
    }
  }
  return worst;
}

double penalty_derivative(const PowerPenalty& c, double x) {
  if (x <= 0.0 || c.beta == 0.0) return 0.0;
  return c.beta * (2.0 + c.offset) * std::pow(x, 1.0 + c.offset);
}

double augmented_of(const Flat& f, const OverloadCost& cost, const ProfileSet& p) {
  Loads loads;
  loads_of(f, p, loads);
  long double total = objective_of(f, p);
  for (std::size_t l = 0; l < f.L; ++l) {
    const auto& c = cost.feeders[l];
    for (std::size_t t = 0; t < f.T; ++t) {
      const double x = loads.feeder[l][t] - f.headroom[l][t];
      if (x > 0.0 && c.beta != 0.0) total += static_cast<long double>(c.beta) * std::pow(static_cast<long double>(x), 2.0L + c.offset);
    }
  }
  return static_cast<double>(total);
}

void penalty_gradient_of(const Flat& f, const OverloadCost& cost, const Loads& loads, std::size_t k,
                         std::vector<double>& g) {
  g.assign(f.T, 0.0);
  for (std::size_t t = 0; t < f.T; ++t) {
    g[t] = 2.0 * (f.D[t] + loads.total[t]);
    for (std::size_t l : f.paths[k]) g[t] += penalty_derivative(cost.feeders[l], loads.feeder[l][t] - f.headroom[l][t]);
  }
}

// Scale overloaded slots down, then refill each vehicle's lost energy into
// its lowest slots within the room left along its path.
bool repair(const Flat& f, ProfileSet& p, std::string& note) {
  Loads loads;
  for (int pass = 0; pass < 20; ++pass) {
    loads_of(f, p, loads);
    bool changed = false;
    for (std::size_t l = 0; l < f.L; ++l) {
      for (std::size_t t = 0; t < f.T; ++t) {
        if (loads.feeder[l][t] <= f.headroom[l][t]) continue;
        const double factor = f.headroom[l][t] / loads.feeder[l][t] * (1.0 - 1e-14);
        for (std::size_t k = 0; k < f.K; ++k) {
          if (std::find(f.paths[k].begin(), f.paths[k].end(), l) != f.paths[k].end()) p(k, t) *= factor;
        }
        changed = true;
        loads_of(f, p, loads);
      }
    }
    if (!changed) break;
  }
  bool ok = true;
  std::vector<double> room(f.T), b(f.T), add(f.T), scratch;
  for (std::size_t k = 0; k < f.K; ++k) {
    loads_of(f, p, loads);
    double have = 0.0;
    for (std::size_t t = 0; t < f.T; ++t) have += p(k, t);
    const double deficit = f.demand[k] - have;
    if (deficit <= 0.0) continue;
    double available = 0.0;
    for (std::size_t t = 0; t < f.T; ++t) {
      double r = f.caps[k][t] - p(k, t);
      for (std::size_t l : f.paths[k]) r = std::min(r, f.headroom[l][t] - loads.feeder[l][t]);
      room[t] = std::max(r, 0.0);
      available += room[t];
      b[t] = f.D[t] + loads.total[t];
    }
    if (available < deficit) {
      ok = false;
      note = "repair could not place all energy";
    }
    breakpoint_fill(b, room, std::min(deficit, available), add, scratch);
    for (std::size_t t = 0; t < f.T; ++t) p(k, t) += add[t];
  }
  return ok;
}

}  // namespace

std::vector<double> oracle_project(std::span<const double> b, std::span<const double> pmax, double demand,
                                   double resolution) {
  if (!(resolution > 0.0)) throw ConfigurationError("oracle resolution must be positive");
  const std::size_t n = b.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    lo = std::min(lo, b[t]);
    hi = std::max(hi, b[t] + pmax[t]);
  }
  constexpr std::size_t cells = 1000;
  double best_level = lo;
  double best_gap = std::abs(fill_sum(lo, b, pmax) - demand);
  double spacing = (hi - lo) / cells;
  while (true) {
    std::size_t crossing = cells;
    for (std::size_t i = 0; i <= cells; ++i) {
      const double level = lo + spacing * static_cast<double>(i);
      const double s = fill_sum(level, b, pmax);
      const double gap = std::abs(s - demand);
      if (gap < best_gap) {
        best_gap = gap;
        best_level = level;
      }
      if (s >= demand && crossing == cells) crossing = i;
    }
    if (spacing <= 0.5 * resolution || spacing == 0.0) break;
    const double left = lo + spacing * static_cast<double>(crossing > 0 ? crossing - 1 : 0);
    lo = std::max(lo, left - spacing);
    hi = std::min(hi, left + 2.0 * spacing);
    spacing = (hi - lo) / cells;
  }
  for (std::size_t t = 0; t < n; ++t) out[t] = clamp_fill(best_level, b[t], pmax[t]);
  return out;
}

std::vector<double> oracle_breakpoint_projection(std::span<const double> b, std::span<const double> pmax,
                                                 double demand) {
  std::vector<double> out(b.size()), scratch;
  breakpoint_fill(b, pmax, demand, out, scratch);
  return out;
}

std::map<std::string, std::vector<double>> oracle_feeder_loads(const NetworkDescription& description,
                                                               std::span<const PevSpec> fleet,
                                                               const ProfileSet& profiles) {
  const auto idx = feeder_index(description);
  std::map<std::string, std::vector<double>> loads;
  for (const auto& f : description.feeders) loads[f.id].assign(description.horizon, 0.0);
  for (std::size_t k = 0; k < fleet.size(); ++k) {
    for (std::size_t l : walk_up(description, idx, fleet[k].feeder)) {
      auto& row = loads[description.feeders[l].id];
      for (std::size_t t = 0; t < description.horizon; ++t) row[t] += profiles(k, t);
    }
  }
  return loads;
}

double oracle_objective(const NetworkDescription& description, const ProfileSet& profiles) {
  long double total = 0.0L;
  for (std::size_t t = 0; t < description.horizon; ++t) {
    long double load = 0.0L;
    for (const auto& [id, series] : description.leaf_base_load) load += series[t];
    for (std::size_t k = 0; k < profiles.pev_count(); ++k) load += profiles(k, t);
    total += load * load;
  }
  return static_cast<double>(total);
}

OracleSolution oracle_solve_P(const Scenario& scenario, const OracleConfig& config) {
  if (!(config.step > 0.0) || config.iterations == 0) throw ConfigurationError("oracle needs a positive step and budget");
  const Flat f = flatten(scenario);
  OracleSolution sol;
  sol.profiles = ProfileSet(f.K, f.T);
  if (f.K == 0) {
    sol.value = objective_of(f, sol.profiles);
    sol.unrepaired_value = sol.value;
    sol.confident = true;
    return sol;
  }

  double slack = config.slater_slack;
  if (!(slack > 0.0)) {
    ProfileSet fill(f.K, f.T);
    for (std::size_t k = 0; k < f.K; ++k) {
      const double total = std::accumulate(f.caps[k].begin(), f.caps[k].end(), 0.0);
      for (std::size_t t = 0; t < f.T; ++t) fill(k, t) = total > 0.0 ? f.demand[k] * f.caps[k][t] / total : 0.0;
    }
    Loads loads;
    loads_of(f, fill, loads);
    slack = std::numeric_limits<double>::infinity();
    double smallest = slack;
    for (std::size_t l = 0; l < f.L; ++l) {
      for (std::size_t t = 0; t < f.T; ++t) {
        slack = std::min(slack, f.headroom[l][t] - loads.feeder[l][t]);
        smallest = std::min(smallest, f.headroom[l][t]);
      }
    }
    if (!(slack > 0.0)) {
      slack = 0.01 * smallest;
      sol.note = "no Slater point found; fallback multiplier cap";
    }
  }
  double numerator = 0.0;
  for (std::size_t t = 0; t < f.T; ++t) {
    double pmax = 0.0;
    for (std::size_t k = 0; k < f.K; ++k) pmax += f.caps[k][t];
    numerator += (2.0 * f.D[t] + pmax) * pmax;
  }
  const double LT = static_cast<double>(f.L * f.T);
  const double mu_max = numerator / (slack * LT) + 1.0 / LT;

  const double alpha = config.step;
  ProfileSet p(f.K, f.T), next(f.K, f.T), mean(f.K, f.T);
  std::vector<std::vector<double>> mu(f.L, std::vector<double>(f.T, 0.0));
  std::vector<double> b(f.T), scratch;
  const std::vector<double> zero(f.T, 0.0);
  for (std::size_t k = 0; k < f.K; ++k) breakpoint_fill(zero, f.caps[k], f.demand[k], p.row(k), scratch);

  Loads loads;
  const std::size_t checkpoint = config.iterations - config.iterations / 10;
  double checkpoint_value = 0.0;
  for (std::size_t m = 0; m < config.iterations; ++m) {
    loads_of(f, p, loads);
    const double weight = 1.0 / static_cast<double>(m + 1);
    auto mv = mean.values();
    const auto pv = p.values();
    for (std::size_t i = 0; i < mv.size(); ++i) mv[i] += (pv[i] - mv[i]) * weight;
    for (std::size_t k = 0; k < f.K; ++k) {
      for (std::size_t t = 0; t < f.T; ++t) {
        double g = 2.0 * (f.D[t] + loads.total[t]);
        for (std::size_t l : f.paths[k]) g += mu[l][t];
        b[t] = alpha * g - p(k, t);
      }
      breakpoint_fill(b, f.caps[k], f.demand[k], next.row(k), scratch);
    }
    for (std::size_t l = 0; l < f.L; ++l) {
      for (std::size_t t = 0; t < f.T; ++t) {
        mu[l][t] = std::clamp(mu[l][t] + alpha * (loads.feeder[l][t] - f.headroom[l][t]), 0.0, mu_max);
      }
    }
    std::swap(p, next);
    if (m + 1 == checkpoint) checkpoint_value = objective_of(f, mean);
  }
  sol.iterations = config.iterations;
  sol.unrepaired_value = objective_of(f, mean);
  const double drift = std::abs(sol.unrepaired_value - checkpoint_value) / std::max(std::abs(sol.unrepaired_value), 1.0);
  sol.confident = drift <= config.stabilization;
  if (!sol.confident) {
    std::ostringstream os;
    os << "averaged objective still moving (relative drift " << drift << ")";
    sol.note = os.str();
  }

  sol.profiles = mean;
  std::string repair_note;
  if (!repair(f, sol.profiles, repair_note)) {
    sol.confident = false;
    sol.note = repair_note;
  }
  loads_of(f, sol.profiles, loads);
  sol.max_violation = max_relative_violation(f, loads);
  sol.value = objective_of(f, sol.profiles);
  sol.repair_shift = std::abs(sol.value - sol.unrepaired_value);
  if (sol.max_violation > 1e-6) {
    sol.confident = false;
    sol.note = "repaired point still overloads a feeder";
  }
  return sol;
}

OracleSolution oracle_grid_search_P(const Scenario& scenario, double resolution, std::size_t max_combinations) {
  if (!(resolution > 0.0)) throw ConfigurationError("grid resolution must be positive");
  const Flat f = flatten(scenario);

  // Integer grid: vehicle k takes x_t * resolution with 0 <= x_t <= cap_t / resolution.
  std::vector<std::vector<std::vector<int>>> choices(f.K);
  double combos = 1.0;
  for (std::size_t k = 0; k < f.K; ++k) {
    const double units = f.demand[k] / resolution;
    const long target = std::lround(units);
    if (std::abs(units - static_cast<double>(target)) > 1e-9 * std::max(1.0, units)) {
      throw ConfigurationError("demand is not a multiple of the grid resolution");
    }
    std::vector<int> upper(f.T);
    for (std::size_t t = 0; t < f.T; ++t) upper[t] = static_cast<int>(std::floor(f.caps[k][t] / resolution + 1e-9));
    // Count the bounded compositions first so oversized grids fail fast.
    std::vector<double> ways(static_cast<std::size_t>(target) + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t t = 0; t < f.T; ++t) {
      std::vector<double> next(ways.size(), 0.0);
      for (std::size_t n = 0; n < ways.size(); ++n) {
        if (ways[n] == 0.0) continue;
        for (long v = 0; v <= upper[t] && n + static_cast<std::size_t>(v) < ways.size(); ++v) next[n + v] += ways[n];
      }
      ways.swap(next);
    }
    if (combos * ways.back() > static_cast<double>(max_combinations)) {
      throw ConfigurationError("exhaustive grid too large");
    }
    std::vector<int> x(f.T, 0);
    std::function<void(std::size_t, long)> rec = [&](std::size_t t, long left) {
      if (t == f.T) {
        if (left == 0) choices[k].push_back(x);
        return;
      }
      long rest = 0;
      for (std::size_t s = t + 1; s < f.T; ++s) rest += upper[s];
      for (int v = 0; v <= upper[t] && v <= left; ++v) {
        if (left - v > rest) continue;
        x[t] = v;
        rec(t + 1, left - v);
      }
      x[t] = 0;
    };
    rec(0, target);
    combos *= static_cast<double>(choices[k].size());
    if (combos > static_cast<double>(max_combinations)) {
      throw ConfigurationError("exhaustive grid too large");
    }
  }

  OracleSolution sol;
  sol.profiles = ProfileSet(f.K, f.T);
  sol.value = std::numeric_limits<double>::infinity();
  ProfileSet trial(f.K, f.T);
  Loads loads;
  std::size_t visited = 0;
  std::function<void(std::size_t)> search = [&](std::size_t k) {
    if (k == f.K) {
      ++visited;
      loads_of(f, trial, loads);
      for (std::size_t l = 0; l < f.L; ++l) {
        for (std::size_t t = 0; t < f.T; ++t) {
          if (loads.feeder[l][t] > f.headroom[l][t] + 1e-12) return;
        }
      }
      const double v = objective_of(f, trial);
      if (v < sol.value) {
        sol.value = v;
        sol.profiles = trial;
      }
      return;
    }
    for (const auto& x : choices[k]) {
      for (std::size_t t = 0; t < f.T; ++t) trial(k, t) = x[t] * resolution;
      search(k + 1);
    }
  };
  search(0);
  sol.iterations = visited;
  sol.confident = std::isfinite(sol.value);
  sol.unrepaired_value = sol.value;
  if (!sol.confident) sol.note = "no feasible grid point";
  return sol;
}

double oracle_augmented(const Scenario& scenario, const OverloadCost& cost, const ProfileSet& profiles) {
  return augmented_of(flatten(scenario), cost, profiles);
}

OracleSolution oracle_solve_P1(const Scenario& scenario, const OverloadCost& cost, const PenaltyOracleConfig& config) {
  const Flat f = flatten(scenario);
  if (cost.feeders.size() != f.L) throw ConfigurationError("overload cost must define one penalty per feeder");
  double step = config.step;
  if (!(step > 0.0)) {
    step = f.K == 0 ? 1.0
                    : 0.5 * max_step_size(f.K, scenario.network.max_depth(),
                                          effective_curvature_bound(scenario.network, scenario.fleet, cost));
  }
  OracleSolution sol;
  ProfileSet p(f.K, f.T), next(f.K, f.T);
  Loads loads;
  std::vector<double> g, b(f.T), scratch;
  for (std::size_t m = 0; m < config.iterations; ++m) {
    loads_of(f, p, loads);
    double moved = 0.0;
    for (std::size_t k = 0; k < f.K; ++k) {
      penalty_gradient_of(f, cost, loads, k, g);
      for (std::size_t t = 0; t < f.T; ++t) b[t] = step * g[t] - p(k, t);
      breakpoint_fill(b, f.caps[k], f.demand[k], next.row(k), scratch);
      for (std::size_t t = 0; t < f.T; ++t) moved = std::max(moved, std::abs(next(k, t) - p(k, t)));
    }
    std::swap(p, next);
    sol.iterations = m + 1;
    if (moved < config.tolerance) {
      sol.confident = true;
      break;
    }
  }
  if (!sol.confident) sol.note = "step norm did not reach the tolerance within the budget";
  sol.value = augmented_of(f, cost, p);
  sol.unrepaired_value = sol.value;
  loads_of(f, p, loads);
  sol.max_violation = max_relative_violation(f, loads);
  sol.profiles = std::move(p);
  return sol;
}

double stationarity_gap(const Scenario& scenario, const OverloadCost& cost, const ProfileSet& candidate,
                        std::size_t samples, std::uint64_t seed) {
  const Flat f = flatten(scenario);
  Loads loads;
  loads_of(f, candidate, loads);
  std::vector<std::vector<double>> grad(f.K);
  for (std::size_t k = 0; k < f.K; ++k) penalty_gradient_of(f, cost, loads, k, grad[k]);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> b(f.T), x(f.T), scratch;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    double dot = 0.0;
    for (std::size_t k = 0; k < f.K; ++k) {
      for (double& v : b) v = 10.0 * unit(rng);
      breakpoint_fill(b, f.caps[k], f.demand[k], x, scratch);
      for (std::size_t t = 0; t < f.T; ++t) dot += grad[k][t] * (x[t] - candidate(k, t));
    }
    worst = std::min(worst, dot);
  }
  return worst;
}

}  // namespace pevsched
