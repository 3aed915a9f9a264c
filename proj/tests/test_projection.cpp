#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "errors.hpp"
#include "oracle.hpp"
#include "projection.hpp"
#include "support.hpp"

using namespace pevsched;
using pevsched::testing::sum_of;

namespace {

void check_profile(const std::vector<double>& got, std::initializer_list<double> want, double tol) {
  REQUIRE(got.size() == want.size());
  std::size_t t = 0;
  for (double w : want) CHECK(std::abs(got[t++] - w) <= tol);
}

}  // namespace

TEST_CASE("fill at a given level") {
  const std::vector<double> b = {1, 3, 2}, cap = {2, 2, 2};
  const ProjectionProblem prob{b, cap, 0.0};
  check_profile(fill_at_level(3.0, prob), {2, 0, 1}, 0);
  check_profile(fill_at_level(0.5, prob), {0, 0, 0}, 0);
  check_profile(fill_at_level(10.0, prob), {2, 2, 2}, 0);
}

TEST_CASE("bracket and step bound") {
  const std::vector<double> b = {1, 3, 2}, cap = {2, 2, 2};
  const ProjectionProblem prob{b, cap, 3.0};
  const auto br = level_bracket(prob);
  CHECK(br.low == 1.0);
  CHECK(br.high == 5.0);
  CHECK(bisection_step_bound(prob, 1e-8) == static_cast<std::size_t>(std::ceil(std::log2(4.0 / 1e-8))));
}

TEST_CASE("binary search examples") {
  SUBCASE("single slot is forced") {
    const std::vector<double> b = {0.7}, cap = {8};
    const auto r = project_binary_search({b, cap, 5.0}, 1e-10);
    CHECK(r.profile[0] == doctest::Approx(5.0));
  }
  SUBCASE("symmetric") {
    const std::vector<double> b = {0, 0, 0}, cap = {4, 4, 4};
    const auto r = project_binary_search({b, cap, 6.0}, 1e-10);
    check_profile(r.profile, {2, 2, 2}, 1e-9);
  }
  SUBCASE("valley") {
    const std::vector<double> b = {1, 3, 2}, cap = {2, 2, 2};
    const auto r = project_binary_search({b, cap, 3.0}, 1e-8);
    const auto ref = oracle_project(b, cap, 3.0, 1e-6);
    for (int t = 0; t < 3; ++t) CHECK(std::abs(r.profile[t] - ref[t]) < 1e-6);
    check_profile(r.profile, {2, 0, 1}, 1e-7);
  }
}

TEST_CASE("exact fill examples") {
  SUBCASE("shared instances") {
    const std::vector<double> b1 = {0.7}, c1 = {8};
    CHECK(project_exact({b1, c1, 5.0}).profile[0] == 5.0);
    const std::vector<double> b2 = {0, 0, 0}, c2 = {4, 4, 4};
    check_profile(project_exact({b2, c2, 6.0}).profile, {2, 2, 2}, 1e-15);
    const std::vector<double> b3 = {1, 3, 2}, c3 = {2, 2, 2};
    const auto r = project_exact({b3, c3, 3.0});
    check_profile(r.profile, {2, 0, 1}, 1e-15);
    CHECK(r.level == doctest::Approx(3.0));
    const auto bs = project_binary_search({b3, c3, 3.0}, 1e-12);
    for (int t = 0; t < 3; ++t) CHECK(std::abs(bs.profile[t] - r.profile[t]) < 1e-10);
  }
  SUBCASE("slot saturates mid-fill") {
    const std::vector<double> b = {0, 0}, cap = {1, 5};
    const auto r = project_exact({b, cap, 4.0});
    check_profile(r.profile, {1, 3}, 1e-15);
    CHECK(r.level == doctest::Approx(3.0));
    const auto ref = oracle_project(b, cap, 4.0, 1e-6);
    CHECK(std::abs(ref[1] - 3.0) < 1e-6);
  }
  SUBCASE("demand equals total cap") {
    const std::vector<double> b = {2, -1, 0.5}, cap = {1, 0.5, 2};
    check_profile(project_exact({b, cap, 3.5}).profile, {1, 0.5, 2}, 0);
    check_profile(project_binary_search({b, cap, 3.5}, 1e-8).profile, {1, 0.5, 2}, 1e-8);
  }
  SUBCASE("zero demand") {
    const std::vector<double> b = {2, -1, 0.5}, cap = {1, 0.5, 2};
    check_profile(project_exact({b, cap, 0.0}).profile, {0, 0, 0}, 0);
  }
  SUBCASE("closed slots stay empty") {
    const std::vector<double> b = {-10, 0, 0}, cap = {0, 1, 1};
    check_profile(project_exact({b, cap, 1.0}).profile, {0, 0.5, 0.5}, 1e-15);
  }
}

TEST_CASE("demand outside the reachable range") {
  const std::vector<double> b = {0, 0}, cap = {1, 1};
  CHECK_THROWS_AS(project_exact({b, cap, 2.5}), NoSolution);
  CHECK_THROWS_AS(project_exact({b, cap, -0.1}), NoSolution);
  CHECK_THROWS_AS(project_binary_search({b, cap, 2.5}, 1e-8), NoSolution);
}

TEST_CASE("exact and bisection agree with the oracle on random problems") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + trial % 30;
    const auto p = testing::random_problem(rng, T);
    const auto ex = project_exact(p.view());
    const auto bs = project_binary_search(p.view(), 1e-8);
    const auto ref = oracle_breakpoint_projection(p.b, p.cap, p.demand);
    CHECK(std::abs(sum_of(ex.profile) - p.demand) <= 1e-9 * std::max(1.0, p.demand));
    for (std::size_t t = 0; t < T; ++t) {
      CHECK(ex.profile[t] >= 0.0);
      CHECK(ex.profile[t] <= p.cap[t]);
      CHECK(std::abs(ex.profile[t] - ref[t]) < 1e-9);
      CHECK(std::abs(bs.profile[t] - ref[t]) < 1e-6);
    }
  }
}

TEST_CASE("projection is idempotent and non-expansive") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = 2 + trial % 20;
    auto p = testing::random_problem(rng, T);
    // Project a raw target x: offset b = -x.
    std::vector<double> x(T), y(T), bx(T), by(T);
    for (std::size_t t = 0; t < T; ++t) {
      x[t] = g(rng);
      y[t] = g(rng);
      bx[t] = -x[t];
      by[t] = -y[t];
    }
    const auto px = project_exact({bx, p.cap, p.demand}).profile;
    const auto py = project_exact({by, p.cap, p.demand}).profile;
    double dp = 0.0, dxy = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      dp += (px[t] - py[t]) * (px[t] - py[t]);
      dxy += (x[t] - y[t]) * (x[t] - y[t]);
    }
    CHECK(dp <= dxy + 1e-12);
    std::vector<double> bpx(T);
    for (std::size_t t = 0; t < T; ++t) bpx[t] = -px[t];
    const auto ppx = project_exact({bpx, p.cap, p.demand}).profile;
    for (std::size_t t = 0; t < T; ++t) CHECK(std::abs(ppx[t] - px[t]) < 1e-12);
  }
}

TEST_CASE("projecting onto a vehicle's set") {
  PevSpec pev = testing::make_pev("ev", "l", 3.0, {2.0, 2.0, 2.0, 2.0}, 1, 4);
  SUBCASE("interior point with zero gradient is fixed") {
    const std::vector<double> prev = {0.0, 1.0, 1.5, 0.5}, q(4, 0.0);
    const auto out = project_onto_pev_set(prev, q, 0.1, pev);
    for (int t = 0; t < 4; ++t) CHECK(out[t] == doctest::Approx(prev[t]).epsilon(1e-15));
  }
  SUBCASE("zero start spreads uniformly over the window") {
    const std::vector<double> prev(4, 0.0), q(4, 0.0);
    const auto out = project_onto_pev_set(prev, q, 0.1, pev);
    CHECK(out[0] == 0.0);
    for (int t = 1; t < 4; ++t) CHECK(out[t] == doctest::Approx(1.0));
  }
  SUBCASE("random states match the oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> prev(4), q(4), b(4), cap(4);
      for (int t = 0; t < 4; ++t) {
        prev[t] = u(rng);
        q[t] = u(rng);
      }
      const double step = 0.05 + 0.01 * trial;
      for (int t = 0; t < 4; ++t) {
        b[t] = step * q[t] - prev[t];
        cap[t] = pev.cap(t);
      }
      const auto ref = oracle_project(b, cap, pev.demand, 1e-6);
      for (auto method : {ProjectionMethod::exact, ProjectionMethod::bisection}) {
        const auto out = project_onto_pev_set(prev, q, step, pev, {method, 1e-9});
        for (int t = 0; t < 4; ++t) CHECK(std::abs(out[t] - ref[t]) < 2e-6);
      }
    }
  }
}

TEST_CASE("bisection respects its step budget") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testing::random_problem(rng, 1 + trial % 48);
    for (double eps : {1e-4, 1e-8, 1e-12}) {
      const auto r = project_binary_search(p.view(), eps);
      CHECK(r.steps <= bisection_step_bound(p.view(), eps));
      CHECK(std::abs(sum_of(r.profile) - p.demand) <= std::max(eps, 1e-12 * p.demand));
    }
  }
}
