#include "run_trace.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "errors.hpp"

namespace pevsched {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void RunTrace::add_metadata(std::string key, double value) {
  metadata.emplace_back(std::move(key), format_double(value));
}

void RunTrace::add_metadata(std::string key, std::string value) {
  metadata.emplace_back(std::move(key), std::move(value));
}

const std::string* RunTrace::find_metadata(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::size_t default_record_stride(std::size_t iterations) {
  return std::max<std::size_t>(1, (iterations + 9999) / 10000);
}

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  os << "# " << kTraceSchema << " method=" << trace.method << "\n";
  for (const auto& [k, v] : trace.metadata) os << "# " << k << "=" << v << "\n";
  const bool dual = trace.method == "primal-dual";
  if (dual) {
    os << "iteration,objective,averaged_objective,averaged_violation_norm,averaged_max_violation,"
          "averaged_normalized_overload,step_norm,max_multiplier\n";
  } else {
    os << "iteration,objective,augmented_objective,max_violation,violation_norm,normalized_overload,step_norm\n";
  }
  for (const auto& r : trace.rows) {
    os << r.iteration << ',' << format_double(r.objective) << ',' << format_double(r.augmented) << ',';
    if (dual) {
      os << format_double(r.violation_norm) << ',' << format_double(r.max_violation) << ','
         << format_double(r.normalized_overload) << ',' << format_double(r.step_norm) << ','
         << format_double(r.max_multiplier) << '\n';
    } else {
      os << format_double(r.max_violation) << ',' << format_double(r.violation_norm) << ','
         << format_double(r.normalized_overload) << ',' << format_double(r.step_norm) << '\n';
    }
  }
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_trace_csv(os, trace);
  if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace pevsched
