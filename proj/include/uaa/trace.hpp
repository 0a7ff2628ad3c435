#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uaa {

// Phase tags: "SAS", "AAS", "ARC-hybrid" for the UAA family and "ARC", "AGD",
// "FISTA" for the baselines.
struct TraceRecord {
  int i = 0;
  std::string phase;
  bool success = false;
  double F = 0.0;
  std::optional<double> grad_map;
  std::optional<double> sigma;
  std::optional<double> tau;
  std::optional<double> step_norm;
  int inner_iters = 0;
  std::optional<double> theta;
  std::int64_t wall_ns = 0;

  // Kept in memory only.
  std::optional<double> fd_h;
  int escalations = 0;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<std::string> warnings;
  int convexity_checks = 0;
  int convexity_rejections = 0;

  int count_phase(const std::string& phase, bool successes_only = false) const;
};

inline constexpr const char* kTraceHeader =
    "i,phase,success,F,grad_map,sigma,tau,step_norm,inner_iters,theta,wall_ns";

void write_trace_csv(std::ostream& out, const RunTrace& trace);
void write_trace_csv(const std::string& path, const RunTrace& trace);

// Throws SchemaError when the header differs from kTraceHeader and ParseError
// on malformed rows.
RunTrace read_trace_csv(std::istream& in);
RunTrace read_trace_csv(const std::string& path);

// "%.17g", or empty for a missing value.
std::string format_real(std::optional<double> v);

}  // namespace uaa
