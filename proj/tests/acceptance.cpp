// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Reference values come from the oracle module or are recomputed
// here; nothing is copied from the optimizers under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coordinator.hpp"
#include "grid_model.hpp"
#include "oracle.hpp"
#include "penalty_method.hpp"
#include "primal_dual.hpp"
#include "projection.hpp"
#include "scenario_io.hpp"
#include "support.hpp"

using namespace pevsched;
namespace ts = pevsched::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

const Scenario& desk() {
  static const Scenario s = load_scenario(PEVSCHED_SOURCE_DIR "/scenarios/desk13.json");
  return s;
}

/// Energy and box audit shared by every observer (criterion 10).
struct ConservationAudit {
  std::size_t iterates = 0;
  std::size_t failures = 0;
  double worst_sum_error = 0.0;

  void check(const ProfileSet& p, std::span<const PevSpec> fleet) {
    ++iterates;
    bool ok = true;
    for (std::size_t k = 0; k < fleet.size(); ++k) {
      double sum = 0.0;
      for (std::size_t t = 0; t < p.horizon(); ++t) {
        const double v = p(k, t);
        if (v < 0.0 || v > fleet[k].cap(t)) ok = false;
        sum += v;
      }
      const double err = std::abs(sum - fleet[k].demand);
      worst_sum_error = std::max(worst_sum_error, err);
      if (err > 1e-9) ok = false;
    }
    if (!ok) ++failures;
  }
};

ConservationAudit audit_descent, audit_tiny, audit_desk;

// ---------------------------------------------------------------- 1 and 2

struct RandomBatch {
  std::vector<ts::RandomProblem> problems;
};

const RandomBatch& random_batch() {
  static const RandomBatch batch = [] {
    RandomBatch b;
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<std::size_t> horizon(1, 48);
    for (int i = 0; i < 1000; ++i) b.problems.push_back(ts::random_problem(rng, horizon(rng)));
    return b;
  }();
  return batch;
}

Outcome projection_correctness() {
  const auto start = Clock::now();
  const double eps = 1e-8;
  std::size_t bad = 0;
  double worst_agree = 0.0, worst_oracle = 0.0, worst_sum_exact = 0.0, worst_sum_bis = 0.0;
  for (const auto& p : random_batch().problems) {
    const auto ex = project_exact(p.view()).profile;
    const auto bs = project_binary_search(p.view(), eps).profile;
    const auto ref = oracle_project(p.b, p.cap, p.demand, 1e-6);
    bool ok = true;
    double se = 0.0, sb = 0.0;
    for (std::size_t t = 0; t < p.b.size(); ++t) {
      if (ex[t] < 0.0 || ex[t] > p.cap[t] || bs[t] < 0.0 || bs[t] > p.cap[t]) ok = false;
      worst_agree = std::max(worst_agree, std::abs(ex[t] - bs[t]));
      worst_oracle = std::max({worst_oracle, std::abs(ex[t] - ref[t]), std::abs(bs[t] - ref[t])});
      if (std::abs(ex[t] - bs[t]) > 1e-6 || std::abs(ex[t] - ref[t]) > 1e-6 || std::abs(bs[t] - ref[t]) > 1e-6) {
        ok = false;
      }
      se += ex[t];
      sb += bs[t];
    }
    worst_sum_exact = std::max(worst_sum_exact, std::abs(se - p.demand));
    worst_sum_bis = std::max(worst_sum_bis, std::abs(sb - p.demand));
    if (std::abs(se - p.demand) > 1e-8 || std::abs(sb - p.demand) > eps) ok = false;
    if (!ok) ++bad;
  }
  const double elapsed = seconds_since(start);
  return {bad == 0 && elapsed < 10.0,
          fmt("1000 instances, %zu bad; max |exact-bisection| %.2e, max |x-oracle| %.2e, sum err exact %.1e "
              "bisection %.1e, %.2f s",
              bad, worst_agree, worst_oracle, worst_sum_exact, worst_sum_bis, elapsed)};
}

/// Every active slot must sit in exactly one regime at the level lambda:
/// empty with lambda <= b, full with lambda >= b + cap, or strictly between
/// with p = lambda - b.
int kkt_cases_failed(const std::vector<double>& p, const ts::RandomProblem& prob, double lambda, double tol) {
  int failed = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double cap = prob.cap[t], b = prob.b[t];
    if (cap == 0.0) continue;  // closed slot, not a decision variable
    const bool empty = p[t] <= tol && lambda <= b + tol;
    const bool full = p[t] >= cap - tol && lambda >= b + cap - tol;
    const bool inner = p[t] > 0.0 && p[t] < cap && std::abs(p[t] - (lambda - b)) <= tol;
    if (int(empty) + int(full) + int(inner) != 1) ++failed;
  }
  return failed;
}

/// Level implied by the output: the interior slots pin it; otherwise any
/// point between the largest full level and the smallest empty offset works.
double implied_level(const std::vector<double>& p, const ts::RandomProblem& prob) {
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  double inner_sum = 0.0;
  int inner = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double cap = prob.cap[t];
    if (cap == 0.0) continue;
    if (p[t] > 0.0 && p[t] < cap) {
      inner_sum += p[t] + prob.b[t];
      ++inner;
    } else if (p[t] == 0.0) {
      hi = std::min(hi, prob.b[t]);
    } else {
      lo = std::max(lo, prob.b[t] + cap);
    }
  }
  if (inner > 0) return inner_sum / inner;
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
  return std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
}

Outcome kkt_certificate() {
  std::size_t certified = 0, total = 0;
  for (const auto& prob : random_batch().problems) {
    for (int method = 0; method < 2; ++method) {
      const auto r = method == 0 ? project_exact(prob.view()) : project_binary_search(prob.view(), 1e-8);
      ++total;
      if (kkt_cases_failed(r.profile, prob, implied_level(r.profile, prob), 1e-9) == 0) ++certified;
    }
  }
  return {certified == total, fmt("%zu of %zu projection outputs certified (exact and bisection)", certified, total)};
}

// ---------------------------------------------------------------- 3

Outcome monotone_descent() {
  const auto start = Clock::now();
  const Scenario& s = desk();
  const auto cost = default_overload_cost(s.network, s.fleet);
  PenaltyConfig cfg;
  cfg.max_iterations = 100000;
  cfg.tolerance = 0.0;  // run the full budget
  cfg.safeguard = false;  // count rises here instead of aborting on the first
  double last = 0.0, worst_rise = -std::numeric_limits<double>::infinity();
  std::size_t checked = 0, rises = 0;
  cfg.observer = [&](std::size_t m, const ProfileSet& p) {
    audit_descent.check(p, s.fleet);
    const double v = augmented_objective(p, s.network, cost);
    if (m >= 2) {
      ++checked;
      worst_rise = std::max(worst_rise, v - last);
      if (v > last + 1e-9) ++rises;
    }
    last = v;
  };
  const double alpha_max =
      max_step_size(s.fleet.size(), s.network.max_depth(), effective_curvature_bound(s.network, s.fleet, cost));
  cfg.step = 0.9 * alpha_max;
  const auto r = run_penalty(s.network, s.fleet, cost, cfg);
  const double elapsed = seconds_since(start);
  return {rises == 0 && checked >= 10000 && elapsed < 60.0 && !r.guarantees_void,
          fmt("alpha %.3e = 0.9 alpha_max, %zu consecutive pairs checked, %zu rises, largest change %.2e, "
              "L(p^M) %.6e, %.1f s",
              r.step, checked, rises, worst_rise, r.augmented, elapsed)};
}

// ---------------------------------------------------------------- 4

Outcome gradient_fidelity() {
  const Scenario s = ts::four_pev();
  const auto cost = default_overload_cost(s.network, s.fleet);
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0), mult(0.0, 20.0);
  const double h = 1e-4;
  double worst_pen = 0.0, worst_pd = 0.0;
  for (int state = 0; state < 100; ++state) {
    ProfileSet p(s.fleet.size(), s.network.horizon());
    for (std::size_t k = 0; k < s.fleet.size(); ++k) {
      for (std::size_t t = 0; t < s.network.horizon(); ++t) p(k, t) = unit(rng) * s.fleet[k].rate_cap[t];
    }
    DualState mu(s.network.feeder_count(), s.network.horizon(), 20.0);
    for (double& m : mu.values()) m = mult(rng);
    auto relerr = [](double a, double fd) { return std::abs(a - fd) / std::max(1.0, std::abs(fd)); };
    for (std::size_t k = 0; k < s.fleet.size(); ++k) {
      const auto q = penalty_gradient(p, s.network, cost, k);
      const auto g = primal_subgradient(p, mu, s.network, k);
      for (std::size_t t = 0; t < s.network.horizon(); ++t) {
        const double keep = p(k, t);
        p(k, t) = keep + h;
        const double lp = augmented_objective(p, s.network, cost), dp = lagrangian(p, mu, s.network);
        p(k, t) = keep - h;
        const double lm = augmented_objective(p, s.network, cost), dm = lagrangian(p, mu, s.network);
        p(k, t) = keep;
        worst_pen = std::max(worst_pen, relerr(q[t], (lp - lm) / (2 * h)));
        worst_pd = std::max(worst_pd, relerr(g[t], (dp - dm) / (2 * h)));
      }
    }
  }
  return {worst_pen <= 1e-5 && worst_pd <= 1e-5,
          fmt("100 states, worst relative error: penalty gradient %.2e, Lagrangian subgradient %.2e", worst_pen,
              worst_pd)};
}

// ---------------------------------------------------------------- 5 and 6

/// Strictly feasible witness for tiny_congested(); its slack is the epsilon
/// used for mu^max.
double tiny_witness_slack(const Scenario& s) {
  ProfileSet w(2, 3);
  const double ev1[] = {1.4, 0.2, 1.4}, ev2[] = {0.0, 1.0, 0.0};
  for (int t = 0; t < 3; ++t) {
    w(0, t) = ev1[t];
    w(1, t) = ev2[t];
  }
  if (!in_feasible_set(w, s.fleet, 1e-12)) return -1.0;
  const auto loads = oracle_feeder_loads(s.description, s.fleet, w);
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& f : s.description.feeders) {
    // Recompute headroom from the raw description.
    std::vector<double> base(3, 0.0);
    for (const auto& [leaf, series] : s.description.leaf_base_load) {
      std::string at = leaf;
      while (!at.empty()) {
        if (at == f.id) {
          for (int t = 0; t < 3; ++t) base[t] += series[t];
          break;
        }
        const auto it = std::find_if(s.description.feeders.begin(), s.description.feeders.end(),
                                     [&](const FeederSpec& x) { return x.id == at; });
        at = it->parent;
      }
    }
    for (int t = 0; t < 3; ++t) slack = std::min(slack, f.capacity - base[t] - loads.at(f.id)[t]);
  }
  return slack;
}

struct TinyRun {
  PrimalDualResult result;
  double slack = 0.0;
  double seconds = 0.0;
};

const TinyRun& tiny_run() {
  static const TinyRun run = [] {
    const auto start = Clock::now();
    const Scenario s = ts::tiny_congested();
    TinyRun r;
    r.slack = tiny_witness_slack(s);
    PrimalDualConfig cfg;
    cfg.step = 1e-3;
    cfg.iterations = 1000000;
    cfg.slater_slack = r.slack;
    cfg.observer = [&](const PrimalDualObserverState& st) { audit_tiny.check(st.iterate, s.fleet); };
    r.result = run_primal_dual(s.network, s.fleet, cfg);
    r.seconds = seconds_since(start);
    return r;
  }();
  return run;
}

Outcome violation_bound() {
  const auto& r = tiny_run();
  const double bound = 1.1 * r.result.violation_bound;
  return {r.slack > 0.0 && r.result.violation <= bound && r.seconds < 120.0,
          fmt("eps %.3g from a strictly feasible witness, N %.4g, ||[g(p_hat)]+|| %.3e <= 1.1 alpha N^2/2 = %.3e, "
              "%.1f s",
              r.slack, r.result.bounds.uniform, r.result.violation, bound, r.seconds)};
}

Outcome cost_sandwich() {
  const auto& r = tiny_run();
  const Scenario s = ts::tiny_congested();
  OracleConfig ocfg;
  ocfg.slater_slack = r.slack;
  const auto star = oracle_solve_P(s, ocfg);
  const auto grid = oracle_grid_search_P(s, 0.05);
  const double f_star = star.value;
  const bool grid_agrees = std::abs(grid.value - f_star) <= 1e-3 * f_star;
  const double delta = 0.01 * f_star;
  const double lo = f_star - r.result.cost_lower_gap - delta;
  const double hi = f_star + r.result.cost_upper_gap + delta;
  const double f = r.result.objective;
  return {grid_agrees && f >= lo && f <= hi,
          fmt("f* %.6f (oracle, %s), grid %.6f; f(p_hat) %.6f in [%.4g, %.4g]", f_star,
              star.confident ? "stabilized" : "budget exhausted", grid.value, f, lo, hi)};
}

// ---------------------------------------------------------------- 7

Outcome step_size_trend() {
  // p_hat^m carries a transient that decays like 1/(alpha m), so at finite M
  // its violation mostly measures how far the run got, not where it is
  // heading. The tail average 2 p_hat^M - p_hat^{M/2}, the mean of
  // p^{M/2} .. p^{M-1}, has the same limit without that term.
  const auto start = Clock::now();
  const Scenario& s = desk();
  const double steps[] = {4e-3, 2e-3, 1e-3};
  double tail_v[3], raw_v[3];
  for (int i = 0; i < 3; ++i) {
    const std::size_t M = static_cast<std::size_t>(std::llround(1000.0 / steps[i]));
    PrimalDualConfig cfg;
    cfg.step = steps[i];
    cfg.iterations = M;
    ProfileSet half;
    cfg.observer = [&](const PrimalDualObserverState& st) {
      if (st.iteration == M / 2) half = st.averaged;
    };
    const auto r = run_primal_dual(s.network, s.fleet, cfg);
    ProfileSet tail = r.averaged;
    auto v = tail.values();
    const auto h = half.values();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = 2.0 * v[j] - h[j];
    tail_v[i] = violation_norm(compute_loads(tail, s.network), s.network);
    raw_v[i] = r.violation;
  }
  // Differences below 1e-12 kW are rounding noise, not a trend reversal.
  const double floor = 1e-12;
  const bool monotone = tail_v[1] <= tail_v[0] + floor && tail_v[2] <= tail_v[1] + floor;
  return {monotone, fmt("desk13, alpha 4e-3 / 2e-3 / 1e-3 at alpha M = 1000: tail-average violation %.3e / %.3e / "
                        "%.3e (raw p_hat^M %.4e / %.4e / %.4e), %.1f s",
                        tail_v[0], tail_v[1], tail_v[2], raw_v[0], raw_v[1], raw_v[2], seconds_since(start))};
}

// ---------------------------------------------------------------- 8

Outcome desk_replication() {
  const auto start = Clock::now();
  const Scenario& s = desk();
  CompareOptions o;
  o.penalty.max_iterations = 100000;
  o.penalty.observer = [&](std::size_t, const ProfileSet& p) { audit_desk.check(p, s.fleet); };
  o.primal_dual.step = 1e-2;
  o.primal_dual.iterations = 100000;
  o.primal_dual.observer = [&](const PrimalDualObserverState& st) { audit_desk.check(st.iterate, s.fleet); };
  const auto runs = run_compare(s, o);
  const auto& unc = runs[0];
  const auto& pen = runs[1];
  const auto& pd = runs[2];
  const bool overload = pen.max_overload <= 0.01 && pd.max_overload <= 0.01 && unc.max_overload > 0.0;
  const bool order = unc.variance <= pd.variance && pd.variance <= pen.variance * 1.001;
  return {overload && order,
          fmt("max overload unc %.4f pen %.5f pd %.5f; variance unc %.2f <= pd %.2f <= pen %.2f; %.1f s",
              unc.max_overload, pen.max_overload, pd.max_overload, unc.variance, pd.variance, pen.variance,
              seconds_since(start))};
}

// ---------------------------------------------------------------- 9

double max_relative_gap(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    if (a[i] != b[i]) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

/// Runs both optimizers for `rounds` iterations with observers and replays
/// them through the coordinator. Returns the largest relative gap over all
/// rounds and reports whether every round matched bitwise.
std::pair<double, bool> coordinator_gap(const Scenario& s, std::size_t rounds) {
  double worst = 0.0;
  bool bitwise = true;

  const auto cost = default_overload_cost(s.network, s.fleet);
  std::vector<ProfileSet> pen_iterates;
  PenaltyConfig pcfg;
  pcfg.max_iterations = rounds;
  pcfg.tolerance = 0.0;
  pcfg.observer = [&](std::size_t, const ProfileSet& p) { pen_iterates.push_back(p); };
  const auto pr = run_penalty(s.network, s.fleet, cost, pcfg);
  auto pc = Coordinator::penalty(s.network, s.fleet, cost, pr.step);
  for (const auto& expected : pen_iterates) {
    pc.run_round();
    const ProfileSet got = pc.profiles();
    bitwise = bitwise && got == expected;
    worst = std::max(worst, max_relative_gap(got.values(), expected.values()));
  }

  std::vector<ProfileSet> pd_iterates, pd_averages;
  std::vector<DualState> pd_duals;
  PrimalDualConfig dcfg;
  dcfg.iterations = rounds;
  dcfg.observer = [&](const PrimalDualObserverState& st) {
    pd_iterates.push_back(st.iterate);
    pd_duals.push_back(st.dual);
    pd_averages.push_back(st.averaged);
  };
  const auto dr = run_primal_dual(s.network, s.fleet, dcfg);
  auto dc = Coordinator::primal_dual(s.network, s.fleet, dcfg.step, dr.mu_max);
  for (std::size_t i = 0; i < pd_iterates.size(); ++i) {
    dc.run_round();
    const ProfileSet got = dc.profiles();
    const DualState mu = dc.multipliers();
    bitwise = bitwise && got == pd_iterates[i] && mu == pd_duals[i] && dc.averaged() == pd_averages[i];
    worst = std::max({worst, max_relative_gap(got.values(), pd_iterates[i].values()),
                      max_relative_gap(mu.values(), pd_duals[i].values()),
                      max_relative_gap(dc.averaged().values(), pd_averages[i].values())});
  }
  return {worst, bitwise};
}

Outcome coordinator_equivalence() {
  const auto [small_gap, small_bitwise] = coordinator_gap(ts::four_pev(), 100);
  const auto [desk_gap, desk_bitwise] = coordinator_gap(desk(), 100);
  return {small_bitwise && desk_gap <= 1e-12,
          fmt("K=4: %s over 100 rounds per mode; desk13: max relative gap %.1e (%s)",
              small_bitwise ? "bitwise identical" : "MISMATCH", desk_gap, desk_bitwise ? "bitwise" : "not bitwise")};
}

// ---------------------------------------------------------------- 10

Outcome energy_conservation() {
  const std::size_t iterates = audit_descent.iterates + audit_tiny.iterates + audit_desk.iterates;
  const std::size_t failures = audit_descent.failures + audit_tiny.failures + audit_desk.failures;
  const double worst = std::max({audit_descent.worst_sum_error, audit_tiny.worst_sum_error, audit_desk.worst_sum_error});
  const bool covered = audit_descent.iterates > 0 && audit_tiny.iterates > 0 && audit_desk.iterates > 0;
  return {covered && failures == 0,
          fmt("%zu iterates audited across criteria 3, 5 and 8 (%zu / %zu / %zu), %zu failures, worst |sum - U| %.1e",
              iterates, audit_descent.iterates, audit_tiny.iterates, audit_desk.iterates, failures, worst)};
}

// ---------------------------------------------------------------- 11

Outcome complexity_smoke() {
  // Offsets spread out with tight caps make the fill pass over many slots.
  std::mt19937_64 rng(1111);
  const std::size_t sizes[] = {100, 1000, 10000};
  double times[3];
  std::size_t loops[3];
  for (int i = 0; i < 3; ++i) {
    const std::size_t T = sizes[i];
    std::vector<double> b(T), cap(T);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      b[t] = static_cast<double>(t) * 0.01 + 0.001 * u(rng);
      cap[t] = 0.005 + 0.01 * u(rng);
      total += cap[t];
    }
    const ProjectionProblem prob{b, cap, 0.6 * total};
    const int reps = T <= 1000 ? 200 : 3;
    ProjectionResult r;
    const auto start = Clock::now();
    for (int rep = 0; rep < reps; ++rep) r = project_exact(prob);
    times[i] = seconds_since(start) / reps;
    loops[i] = r.steps;
  }
  // Least squares for time = c T^2 through the origin.
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double x = static_cast<double>(sizes[i]) * static_cast<double>(sizes[i]);
    sxy += x * times[i];
    sxx += x * x;
    mean += times[i] / 3.0;
  }
  const double c = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double x = static_cast<double>(sizes[i]) * static_cast<double>(sizes[i]);
    ss_res += (times[i] - c * x) * (times[i] - c * x);
    ss_tot += (times[i] - mean) * (times[i] - mean);
  }
  const double r2 = 1.0 - ss_res / ss_tot;

  std::size_t over_budget = 0, runs = 0;
  for (const auto& p : random_batch().problems) {
    for (double eps : {1e-4, 1e-8, 1e-12}) {
      const auto r = project_binary_search(p.view(), eps);
      ++runs;
      if (r.steps > bisection_step_bound(p.view(), eps)) ++over_budget;
    }
  }
  return {r2 > 0.9 && over_budget == 0,
          fmt("exact fill %.2e / %.2e / %.2e s at T=1e2/1e3/1e4 (%zu / %zu / %zu loops), c T^2 fit R^2 %.4f; "
              "bisection over budget in %zu of %zu runs",
              times[0], times[1], times[2], loops[0], loops[1], loops[2], r2, over_budget, runs)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "projection correctness", projection_correctness},
      {2, "KKT certificate", kkt_certificate},
      {3, "monotone descent of the penalized objective", monotone_descent},
      {4, "gradient fidelity", gradient_fidelity},
      {5, "averaged-iterate violation bound", violation_bound},
      {6, "averaged-iterate cost sandwich", cost_sandwich},
      {7, "violation trend under step halving", step_size_trend},
      {8, "desk-scale qualitative replication", desk_replication},
      {9, "coordinator equivalence", coordinator_equivalence},
      {10, "energy conservation of every iterate", energy_conservation},
      {11, "complexity smoke check", complexity_smoke},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
