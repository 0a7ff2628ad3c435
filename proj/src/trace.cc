#include "uaa/trace.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "uaa/errors.hpp"

namespace uaa {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_opt_real(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw ParseError(line, "malformed number '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError(line, "malformed integer '" + s + "'");
  }
  return v;
}

}  // namespace

int RunTrace::count_phase(const std::string& phase, bool successes_only) const {
  int n = 0;
  for (const auto& r : records) {
    if (r.phase == phase && (!successes_only || r.success)) ++n;
  }
  return n;
}

std::string format_real(std::optional<double> v) {
  if (!v) return {};
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.i << ',' << r.phase << ',' << (r.success ? 1 : 0) << ',' << format_real(r.F) << ','
        << format_real(r.grad_map) << ',' << format_real(r.sigma) << ',' << format_real(r.tau)
        << ',' << format_real(r.step_norm) << ',' << r.inner_iters << ','
        << format_real(r.theta) << ',' << r.wall_ns << '\n';
  }
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace '" + path + "'");
  write_trace_csv(out, trace);
}

RunTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("empty trace");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) {
    throw SchemaError("unknown trace schema: '" + line + "'");
  }
  RunTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11) {
      throw ParseError(line_no, "expected 11 fields, got " + std::to_string(f.size()));
    }
    TraceRecord r;
    r.i = static_cast<int>(parse_int(f[0], line_no));
    r.phase = f[1];
    r.success = parse_int(f[2], line_no) != 0;
    const auto fv = parse_opt_real(f[3], line_no);
    if (!fv) throw ParseError(line_no, "missing F");
    r.F = *fv;
    r.grad_map = parse_opt_real(f[4], line_no);
    r.sigma = parse_opt_real(f[5], line_no);
    r.tau = parse_opt_real(f[6], line_no);
    r.step_norm = parse_opt_real(f[7], line_no);
    r.inner_iters = static_cast<int>(parse_int(f[8], line_no));
    r.theta = parse_opt_real(f[9], line_no);
    r.wall_ns = parse_int(f[10], line_no);
    trace.records.push_back(std::move(r));
  }
  return trace;
}

RunTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace '" + path + "'");
  return read_trace_csv(in);
}

}  // namespace uaa
