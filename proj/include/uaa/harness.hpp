#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uaa/driver.hpp"
#include "uaa/problem.hpp"
#include "uaa/trace.hpp"

namespace uaa {

struct ConfigKey {
  const char* key;
  const char* default_value;
  const char* help;
  bool per_method;  // may be overridden as <method>.<key>
};

const std::vector<ConfigKey>& config_keys();
const std::vector<std::string>& known_methods();

struct ExperimentConfig {
  // problem
  std::string problem = "logistic";  // logistic | quadratic | logsumexp
  std::string dataset;               // LIBSVM path; synthetic data when empty
  std::optional<int> dataset_dim;
  int synthetic_n = 200;
  int synthetic_d = 20;
  double synthetic_noise = 0.1;
  double lambda = 1e-5;
  std::string regularizer = "l2";  // l2 | l1
  int quadratic_d = 20;
  double quadratic_mu = 1e-3;
  double quadratic_L = 1.0;
  int lse_rows = 15;
  int lse_d = 5;
  double start_scale = 1.0;

  std::vector<std::string> methods;
  std::string output_dir = "uaa_out";
  std::uint64_t seed = 1;
  int repetitions = 1;
  std::optional<double> fstar;
  bool parallel = true;

  // Algorithm keys as written: global values and per-method overrides.
  std::map<std::string, std::string> params;
  std::map<std::string, std::map<std::string, std::string>> overrides;

  // Value of an algorithm key for a method, falling back to the global value
  // and then to the documented default.
  std::string param(const std::string& method, const std::string& key) const;
  double param_real(const std::string& method, const std::string& key) const;
  int param_int(const std::string& method, const std::string& key) const;
  bool param_bool(const std::string& method, const std::string& key) const;
};

// Flat "key = value" text with '#' comments. Throws ParseError on malformed
// lines and ConfigError on unknown keys, unknown methods or a missing dataset.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

CompositeProblem build_problem(const ExperimentConfig& config);
// Start point for repetition `rep`: N(0, start_scale^2) per coordinate.
Vector start_point(const ExperimentConfig& config, int dimension, int rep);
// F* when the instance knows it (quadratic), else the configured fstar.
std::optional<double> known_fstar(const ExperimentConfig& config, const CompositeProblem& problem);

UaaConfig uaa_config_for(const ExperimentConfig& config, const std::string& method);
Solution run_method(const ExperimentConfig& config, const CompositeProblem& problem,
                    const std::string& method, const Vector& x0);

struct RunSummary {
  std::string method;
  int rep = 0;
  Status status = Status::IterCap;
  double F = 0.0;
  double grad_map = 0.0;
  int iterations = 0;
  int successes = 0;
  std::int64_t wall_ns = 0;
  std::string trace_path;
};

struct ExperimentResult {
  std::string output_dir;
  std::vector<RunSummary> runs;
  std::vector<RunTrace> traces;  // parallel to runs
  std::string summary_path;
};

// One trace CSV per (method, repetition) plus summary.csv. UAA_OUT_DIR, when
// set, replaces the configured output directory.
ExperimentResult run_experiment(const ExperimentConfig& config);

// run_experiment plus bench.csv: one row per record index and one column
// group per method (first repetition).
ExperimentResult bench(const ExperimentConfig& config);
void write_bench_csv(std::ostream& out, const ExperimentResult& result,
                     std::optional<double> fstar);

enum class RateStatus { Pass, Fail, Inconclusive };
std::string to_string(RateStatus s);

struct RateOptions {
  int window_lo = 1;
  int window_hi = 1 << 30;
  double slack = 0.3;
  double floor = 1e-13;
  int min_points = 10;
  std::optional<double> fstar;
  // Checks gap_j <= C / prod_{l=1}^{p+1} (j + l) for every success j >= 0.
  std::optional<double> c_bound;
};

struct RateEntry {
  RateStatus status = RateStatus::Inconclusive;
  double slope = 0.0;
  double theoretical = 0.0;
  int points = 0;
  std::optional<bool> c_bound_ok;
  bool sigma_ok = true;
  bool tau_ok = true;
  std::string note;
};

struct RateReport {
  std::vector<RateEntry> entries;
  double fstar = 0.0;
  RateStatus overall() const;
};

// Least-squares slope of log(F - F*) against log j over the successful AAS
// records j in [window_lo, window_hi] (j counted from 1), stopping at the first
// gap <= floor. Pass iff slope <= -(p+1) + slack; fewer than min_points usable
// records is Inconclusive. Without fstar, F* = (best F in all traces) - 1e-14.
RateReport verify_rate(const std::vector<RunTrace>& traces, int p, const RateOptions& options = {});

// Gaps of the successful AAS iterates (index 0 is the SAS output).
std::vector<double> success_gaps(const RunTrace& trace, double fstar);

}  // namespace uaa
