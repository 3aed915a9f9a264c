#include "projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "errors.hpp"

namespace pevsched {
namespace {

// Slots whose offsets (or cap levels) differ by less than this are filled
// together; exact equality is meaningless after a few updates.
constexpr double kTieTolerance = 1e-12;

double total_cap(const ProjectionProblem& problem) {
  double sum = 0.0;
  for (double c : problem.cap) {
    if (c > 0.0) sum += c;
  }
  return sum;
}

void check_problem(const ProjectionProblem& problem) {
  if (problem.offset.size() != problem.cap.size()) {
    throw ConfigurationError("projection: offset and cap lengths differ");
  }
  const double capacity = total_cap(problem);
  if (!std::isfinite(problem.demand) || problem.demand < 0.0 ||
      problem.demand > capacity + 1e-12 * std::max(1.0, capacity)) {
    std::ostringstream os;
    os << "projection: demand " << problem.demand << " outside [0, " << capacity << "]";
    throw NoSolution(os.str());
  }
}

double clamp_fill(double level, double b, double cap) {
  return std::clamp(level - b, 0.0, cap);
}

double residual(double level, const ProjectionProblem& problem) {
  double sum = 0.0;
  for (std::size_t t = 0; t < problem.cap.size(); ++t) {
    if (problem.cap[t] > 0.0) sum += clamp_fill(level, problem.offset[t], problem.cap[t]);
  }
  return sum - problem.demand;
}

}  // namespace

std::vector<double> fill_at_level(double level, const ProjectionProblem& problem) {
  std::vector<double> p(problem.cap.size(), 0.0);
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (problem.cap[t] > 0.0) p[t] = clamp_fill(level, problem.offset[t], problem.cap[t]);
  }
  return p;
}

LevelBracket level_bracket(const ProjectionProblem& problem) {
  LevelBracket br{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t t = 0; t < problem.cap.size(); ++t) {
    if (problem.cap[t] <= 0.0) continue;
    br.low = std::min(br.low, problem.offset[t]);
    br.high = std::max(br.high, problem.offset[t] + problem.cap[t]);
  }
  if (br.low > br.high) br = {0.0, 0.0};
  return br;
}

std::size_t bisection_step_bound(const ProjectionProblem& problem, double tolerance) {
  const double width = level_bracket(problem).width();
  if (width <= tolerance) return 0;
  return static_cast<std::size_t>(std::ceil(std::log2(width / tolerance)));
}

double project_exact(const ProjectionProblem& problem, std::span<double> out, ProjectionWorkspace& ws,
                     std::size_t* loops) {
  check_problem(problem);
  const std::size_t T = problem.cap.size();
  std::fill(out.begin(), out.end(), 0.0);

  ws.order.clear();
  for (std::size_t t = 0; t < T; ++t) {
    if (problem.cap[t] > 0.0) ws.order.push_back(t);
  }
  std::sort(ws.order.begin(), ws.order.end(), [&](std::size_t a, std::size_t b) {
    return problem.offset[a] < problem.offset[b] || (problem.offset[a] == problem.offset[b] && a < b);
  });
  const auto& b = problem.offset;
  const auto& cap = problem.cap;

  std::size_t count = 0;
  if (ws.order.empty()) {
    if (loops) *loops = 0;
    return 0.0;
  }

  double remaining = std::min(problem.demand, total_cap(problem));
  auto next = ws.order.begin();
  ws.filling.clear();
  double level = b[*next];

  auto admit = [&](double at) {
    while (next != ws.order.end() && b[*next] <= at + kTieTolerance) ws.filling.push_back(*next++);
  };

  while (remaining > 0.0) {
    ++count;
    // a_min and T_min: the currently filling slots all sit at `level`.
    if (ws.filling.empty()) {
      if (next == ws.order.end()) break;
      level = std::max(level, b[*next]);
      admit(level);
    }
    const double a_next = next == ws.order.end() ? std::numeric_limits<double>::infinity() : b[*next];
    double cap_level = std::numeric_limits<double>::infinity();
    for (std::size_t t : ws.filling) cap_level = std::min(cap_level, b[t] + cap[t]);
    const double target = std::min(cap_level, a_next);
    const double rise = std::max(target - level, 0.0);
    const double n = static_cast<double>(ws.filling.size());
    const double gamma = rise * n;

    if (remaining > gamma) {
      remaining -= gamma;
      for (std::size_t t : ws.filling) out[t] += rise;
      level = target;
      // Case (i): slots reaching their cap leave the fill.
      std::erase_if(ws.filling, [&](std::size_t t) {
        if (b[t] + cap[t] <= level + kTieTolerance) {
          remaining -= cap[t] - out[t];
          out[t] = cap[t];
          return true;
        }
        return false;
      });
      // Case (ii): slots whose offset the level has reached join it.
      admit(level);
    } else {
      const double share = remaining / n;
      for (std::size_t t : ws.filling) out[t] = std::min(out[t] + share, cap[t]);
      level += share;
      remaining = 0.0;
    }
  }
  if (loops) *loops = count;
  return level;
}

ProjectionResult project_exact(const ProjectionProblem& problem) {
  ProjectionResult r;
  r.profile.assign(problem.cap.size(), 0.0);
  ProjectionWorkspace ws;
  r.level = project_exact(problem, r.profile, ws, &r.steps);
  return r;
}

ProjectionResult project_binary_search(const ProjectionProblem& problem, double tolerance) {
  if (!(tolerance > 0.0)) throw ConfigurationError("projection: bisection tolerance must be positive");
  check_problem(problem);
  ProjectionResult r;
  const LevelBracket br = level_bracket(problem);
  const std::size_t budget = bisection_step_bound(problem, tolerance);

  double lo = br.low;
  double hi = br.high;
  double level = 0.5 * (lo + hi);
  double y = residual(level, problem);
  bool done = false;
  while (r.steps < budget) {
    level = 0.5 * (lo + hi);
    ++r.steps;
    y = residual(level, problem);
    if (std::abs(y) < tolerance) {
      done = true;
      break;
    }
    (y > 0.0 ? hi : lo) = level;
  }

  if (!done) {
    // The residual is piecewise linear and nondecreasing in the level, so
    // regula falsi inside the final bracket lands on the root once no
    // breakpoint separates the iterate from it.
    double y_lo = residual(lo, problem);
    double y_hi = residual(hi, problem);
    const std::size_t limit = 2 * problem.cap.size() + 8;
    while (r.refinements < limit) {
      if (std::abs(y_lo) < tolerance) {
        level = lo;
        break;
      }
      if (std::abs(y_hi) < tolerance) {
        level = hi;
        break;
      }
      const double denom = y_hi - y_lo;
      level = denom > 0.0 ? lo - y_lo * (hi - lo) / denom : 0.5 * (lo + hi);
      level = std::clamp(level, lo, hi);
      ++r.refinements;
      y = residual(level, problem);
      if (std::abs(y) < tolerance) break;
      if (y > 0.0) {
        hi = level;
        y_hi = y;
      } else {
        lo = level;
        y_lo = y;
      }
    }
  }
  r.level = level;
  r.profile = fill_at_level(level, problem);
  return r;
}

void project_onto_pev_set(std::span<const double> previous, std::span<const double> gradient, double step,
                          const PevSpec& pev, const ProjectionOptions& options, std::span<double> out,
                          ProjectionWorkspace& ws) {
  if (!(step > 0.0)) throw ConfigurationError("projection: step size must be positive");
  const std::size_t T = previous.size();
  ws.offset.resize(T);
  ws.cap.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    ws.cap[t] = pev.cap(t);
    ws.offset[t] = ws.cap[t] > 0.0 ? step * gradient[t] - previous[t] : 0.0;
  }
  const ProjectionProblem problem{ws.offset, ws.cap, pev.demand};
  if (options.method == ProjectionMethod::exact) {
    project_exact(problem, out, ws);
  } else {
    const auto r = project_binary_search(problem, options.tolerance);
    std::copy(r.profile.begin(), r.profile.end(), out.begin());
  }
}

std::vector<double> project_onto_pev_set(std::span<const double> previous, std::span<const double> gradient,
                                         double step, const PevSpec& pev, const ProjectionOptions& options) {
  std::vector<double> out(previous.size(), 0.0);
  ProjectionWorkspace ws;
  project_onto_pev_set(previous, gradient, step, pev, options, out, ws);
  return out;
}

}  // namespace pevsched
