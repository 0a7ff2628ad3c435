#pragma once

#include <chrono>

#include "uaa/driver.hpp"

namespace uaa::detail {

using Clock = std::chrono::steady_clock;

inline std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

// ARC loop appending to `trace`, with record indices from `first_index`.
Solution run_arc(const CompositeProblem& problem, const Vector& x0, const ArcParams& params,
                 const char* phase, RunTrace trace, Clock::time_point start, int first_index);

}  // namespace uaa::detail
