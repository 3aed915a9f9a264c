#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace pevsched {

/// One recorded optimizer iteration. Columns that a method does not produce
/// stay NaN and are omitted from its CSV.
struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;         ///< f(p^m)
  double augmented = 0.0;         ///< L(p^m) (penalty) or f(p_hat^m) (primal-dual)
  double max_violation = 0.0;     ///< max_{l,t} [g]^+ of the reported iterate
  double violation_norm = 0.0;    ///< ||[g]^+||_2 of the reported iterate
  double normalized_overload = 0.0;  ///< max_t normalized max overload of the reported iterate
  double step_norm = 0.0;         ///< ||p^{m+1} - p^m||_inf
  double max_multiplier = 0.0;    ///< max mu (primal-dual)
};

/// Per-iteration records plus header metadata (run parameters and bound
/// constants) echoed into CSV comment lines.
struct RunTrace {
  std::string method;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<TraceRow> rows;

  void add_metadata(std::string key, double value);
  void add_metadata(std::string key, std::string value);
  const std::string* find_metadata(const std::string& key) const;
};

inline constexpr const char* kTraceSchema = "pevsched-trace v1";

/// Header comment lines, then a header row, then one line per record.
void write_trace_csv(std::ostream& os, const RunTrace& trace);
void write_trace_csv(const std::string& path, const RunTrace& trace);

/// Every ceil(M / 10^4)-th iteration.
std::size_t default_record_stride(std::size_t iterations);

std::string format_double(double v);

}  // namespace pevsched
