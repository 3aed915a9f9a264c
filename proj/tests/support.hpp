#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grid_model.hpp"
#include "projection.hpp"

namespace pevsched::testing {

inline PevSpec make_pev(std::string id, std::string feeder, double demand, std::vector<double> caps,
                        std::size_t start = 0, std::size_t end = 0) {
  PevSpec p;
  p.id = std::move(id);
  p.feeder = std::move(feeder);
  p.window_start = start;
  p.window_end = end == 0 ? caps.size() : end;
  p.rate_cap = std::move(caps);
  p.demand = demand;
  return p;
}

/// Root r with leaves a and b, T = 3. Feeder a is tight in the middle slot,
/// which pushes part of vehicle 1's energy to the outer slots.
inline Scenario tiny_congested() {
  NetworkDescription d;
  d.horizon = 3;
  d.feeders = {{"r", "", 10.0}, {"a", "r", 2.5}, {"b", "r", 4.5}};
  d.leaf_base_load["a"] = {1.0, 2.0, 1.0};
  d.leaf_base_load["b"] = {3.0, 1.0, 3.0};
  Fleet fleet = {make_pev("ev1", "a", 3.0, {2.0, 2.0, 2.0}), make_pev("ev2", "b", 1.0, {2.0, 2.0, 2.0})};
  return make_scenario(std::move(d), std::move(fleet));
}

/// Hand-derived optimum of tiny_congested(): P(1) is capped at 0.5 + 1 by
/// feeder a and vehicle 2's demand, the rest splits evenly over slots 0, 2.
inline constexpr double kTinyOptimum = 2.0 * 5.25 * 5.25 + 4.5 * 4.5;

/// Two-level tree with four vehicles, uneven windows and caps; feeder x
/// binds at night.
inline Scenario four_pev() {
  NetworkDescription d;
  d.horizon = 6;
  d.feeders = {{"s", "", 40.0}, {"x", "s", 9.0}, {"y", "s", 30.0}, {"x1", "x", 5.0}, {"x2", "x", 6.0}};
  d.leaf_base_load["x1"] = {1.0, 1.5, 3.0, 4.0, 3.5, 2.0};
  d.leaf_base_load["x2"] = {2.0, 1.0, 2.5, 4.5, 4.0, 3.0};
  d.leaf_base_load["y"] = {6.0, 5.0, 9.0, 12.0, 11.0, 8.0};
  Fleet fleet = {
      make_pev("k0", "x1", 5.0, {2.0, 2.0, 2.0, 2.0, 2.0, 2.0}),
      make_pev("k1", "x1", 3.0, {1.5, 1.5, 1.5, 1.5, 1.5, 1.5}, 0, 4),
      make_pev("k2", "x2", 4.0, {3.0, 3.0, 3.0, 3.0, 3.0, 3.0}, 1, 6),
      make_pev("k3", "y", 6.0, {2.5, 2.5, 2.5, 2.5, 2.5, 2.5}),
  };
  return make_scenario(std::move(d), std::move(fleet));
}

struct RandomProblem {
  std::vector<double> b;
  std::vector<double> cap;
  double demand = 0.0;

  ProjectionProblem view() const { return {b, cap, demand}; }
};

/// Offsets in [-5, 5], caps in [0.1, 3] with some slots closed, demand a
/// random fraction of the deliverable energy.
inline RandomProblem random_problem(std::mt19937_64& rng, std::size_t T) {
  std::uniform_real_distribution<double> offset(-5.0, 5.0), cap(0.1, 3.0), unit(0.0, 1.0);
  RandomProblem p;
  p.b.resize(T);
  p.cap.resize(T);
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    p.b[t] = offset(rng);
    p.cap[t] = unit(rng) < 0.1 ? 0.0 : cap(rng);
    total += p.cap[t];
  }
  p.demand = total * unit(rng);
  return p;
}

inline double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace pevsched::testing
