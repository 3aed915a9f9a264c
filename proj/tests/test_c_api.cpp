#include <pevsched/pevsched.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"

namespace {

const char* kDesk = PEVSCHED_SOURCE_DIR "/scenarios/desk13.json";

struct ScenarioHandle {
  pev_scenario* ptr = nullptr;
  ~ScenarioHandle() { pev_scenario_free(ptr); }
};

struct ResultHandle {
  pev_result* ptr = nullptr;
  ~ResultHandle() { pev_result_free(ptr); }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(pev_version()).size() > 0);
  CHECK(std::string(pev_status_name(PEV_OK)) != std::string(pev_status_name(PEV_ERR_PARSE)));
}

TEST_CASE("load, validate and inspect") {
  ScenarioHandle s;
  REQUIRE(pev_scenario_load(kDesk, &s.ptr) == PEV_OK);
  size_t pevs = 0, feeders = 0, horizon = 0, depth = 0;
  REQUIRE(pev_scenario_dims(s.ptr, &pevs, &feeders, &horizon, &depth) == PEV_OK);
  CHECK(pevs == 30);
  CHECK(feeders == 12);
  CHECK(horizon == 24);
  CHECK(depth >= 2);
  pev_validation v{};
  CHECK(pev_validate(s.ptr, &v) == PEV_OK);
  CHECK(v.necessary_ok == 1);
  CHECK(v.slater_verified == 1);
  CHECK(v.warning_count == 0);
  CHECK(pev_validation_warning(s.ptr, 0) == nullptr);
}

TEST_CASE("error statuses") {
  ScenarioHandle s;
  CHECK(pev_scenario_load("/nonexistent/file.json", &s.ptr) == PEV_ERR_IO);
  CHECK(std::string(pev_last_error()).size() > 0);
  CHECK(pev_scenario_load(nullptr, &s.ptr) == PEV_ERR_ARGUMENT);

  const auto bad = std::filesystem::temp_directory_path() / "pevsched_c_api_bad.json";
  std::FILE* f = std::fopen(bad.c_str(), "w");
  REQUIRE(f);
  std::fputs("{\"feeders\":[{\"id\":\"r\",\"parent\":null}]}", f);
  std::fclose(f);
  CHECK(pev_scenario_load(bad.c_str(), &s.ptr) == PEV_ERR_PARSE);
  CHECK(std::string(pev_last_error()).find("capacity") != std::string::npos);
  CHECK(pev_scenario_generate_desk13(13, 0.1, 0.5, &s.ptr) != PEV_OK);
}

TEST_CASE("runs through the C interface") {
  ScenarioHandle s;
  REQUIRE(pev_scenario_generate_desk13(13, 0.1, 1.5, &s.ptr) == PEV_OK);

  SUBCASE("penalty") {
    pev_run_options o;
    pev_run_options_default(PEV_METHOD_PENALTY, &o);
    o.iterations = 2000;
    ResultHandle r;
    REQUIRE(pev_run(s.ptr, &o, &r.ptr) == PEV_OK);
    pev_summary sum{};
    REQUIRE(pev_result_summary(r.ptr, &sum) == PEV_OK);
    CHECK(sum.iterations > 0);
    CHECK(sum.step > 0.0);
    CHECK(sum.downstream_messages == 30 * sum.iterations);
    std::vector<double> p(30 * 24);
    REQUIRE(pev_result_profiles(r.ptr, p.data(), p.size()) == PEV_OK);
    for (size_t k = 0; k < 30; ++k) {
      double total = 0.0;
      for (size_t t = 0; t < 24; ++t) total += p[k * 24 + t];
      CHECK(total == doctest::Approx(10.0).epsilon(1e-9));
    }
    CHECK(pev_result_profiles(r.ptr, p.data(), 10) == PEV_ERR_ARGUMENT);
    const auto trace = std::filesystem::temp_directory_path() / "pevsched_c_api_trace.csv";
    CHECK(pev_result_write_trace(r.ptr, trace.c_str()) == PEV_OK);
    CHECK(std::filesystem::file_size(trace) > 0);
  }
  SUBCASE("unsafe penalty step is refused") {
    pev_run_options o;
    pev_run_options_default(PEV_METHOD_PENALTY, &o);
    o.step = 10.0;
    o.iterations = 10;
    ResultHandle r;
    CHECK(pev_run(s.ptr, &o, &r.ptr) == PEV_ERR_CONFIG);
  }
  SUBCASE("primal-dual") {
    pev_run_options o;
    pev_run_options_default(PEV_METHOD_PRIMAL_DUAL, &o);
    o.iterations = 2000;
    ResultHandle r;
    REQUIRE(pev_run(s.ptr, &o, &r.ptr) == PEV_OK);
    pev_summary sum{};
    REQUIRE(pev_result_summary(r.ptr, &sum) == PEV_OK);
    CHECK(sum.iterations == 2000);
    CHECK(std::isfinite(sum.variance));
  }
  SUBCASE("compare") {
    pev_run_options pen, pd;
    pev_run_options_default(PEV_METHOD_PENALTY, &pen);
    pev_run_options_default(PEV_METHOD_PRIMAL_DUAL, &pd);
    pen.iterations = 500;
    pd.iterations = 500;
    const auto dir = std::filesystem::temp_directory_path() / "pevsched_c_api_compare";
    pev_summary rows[3];
    REQUIRE(pev_compare(s.ptr, &pen, &pd, dir.c_str(), rows) == PEV_OK);
    CHECK(rows[0].variance <= rows[1].variance);
    CHECK(rows[0].max_normalized_overload > 0.0);
    CHECK(std::filesystem::exists(dir / "summary.csv"));
  }
}

TEST_CASE("single projection") {
  const double b[] = {1, 3, 2}, cap[] = {2, 2, 2};
  double out[3], level = 0.0;
  size_t steps = 0;
  REQUIRE(pev_project(b, cap, 3, 3.0, PEV_PROJECTION_EXACT, 0.0, out, &level, &steps) == PEV_OK);
  CHECK(out[0] == doctest::Approx(2.0));
  CHECK(out[1] == doctest::Approx(0.0));
  CHECK(out[2] == doctest::Approx(1.0));
  CHECK(level == doctest::Approx(3.0));
  REQUIRE(pev_project(b, cap, 3, 3.0, PEV_PROJECTION_BISECTION, 1e-9, out, nullptr, &steps) == PEV_OK);
  CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(steps > 0);
  CHECK(pev_project(b, cap, 3, 7.0, PEV_PROJECTION_EXACT, 0.0, out, nullptr, nullptr) == PEV_ERR_NO_SOLUTION);
}

TEST_CASE("oracle through the C interface") {
  ScenarioHandle s;
  REQUIRE(pev_scenario_generate_desk13(13, 0.1, 1.5, &s.ptr) == PEV_OK);
  pev_oracle_options o;
  pev_oracle_options_default(&o);
  o.iterations = 2000;
  pev_oracle_report rep{};
  REQUIRE(pev_oracle_solve(s.ptr, &o, &rep, nullptr, 0) == PEV_OK);
  CHECK(rep.iterations > 0);
  CHECK(std::isnan(rep.grid_value));
  CHECK(rep.value > 0.0);
}
