#include "uaa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "uaa/errors.hpp"

namespace uaa {

namespace fs = std::filesystem;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"problem", "logistic", "logistic | quadratic | logsumexp", false},
      {"dataset", "", "LIBSVM file for the logistic problem; synthetic data when unset", false},
      {"dataset.dim", "", "feature dimension override for the dataset", false},
      {"synthetic.n", "200", "synthetic samples", false},
      {"synthetic.d", "20", "synthetic features", false},
      {"synthetic.noise", "0.1", "synthetic label flip probability", false},
      {"lambda", "1e-5", "regularization weight", false},
      {"regularizer", "l2", "l2 (smooth, inside f) | l1 (nonsmooth r)", false},
      {"quadratic.d", "20", "quadratic dimension", false},
      {"quadratic.mu", "1e-3", "smallest quadratic eigenvalue", false},
      {"quadratic.L", "1", "largest quadratic eigenvalue", false},
      {"lse.rows", "15", "log-sum-exp terms", false},
      {"lse.d", "5", "log-sum-exp dimension", false},
      {"start_scale", "1", "standard deviation of the random start", false},
      {"methods", "", "comma list of uaa-p1 uaa-p2-exact uaa-p2-inexact uaa-p3 aarc arc agd fista", false},
      {"output_dir", "uaa_out", "trace directory (UAA_OUT_DIR overrides)", false},
      {"seed", "1", "instance and start seed", false},
      {"repetitions", "1", "runs per method, each from a fresh start", false},
      {"fstar", "", "optimal value used for gaps", false},
      {"parallel", "true", "run methods and repetitions concurrently", false},
      {"sigma0", "1", "initial regularization", true},
      {"sigma_min", "1e-8", "regularization floor", true},
      {"tau0", "1", "initial auxiliary weight", true},
      {"gamma1", "2", "sigma decrease divisor / increase factor", true},
      {"gamma2", "3", "upper increase factor (must exceed gamma1)", true},
      {"gamma3", "2", "tau escalation factor", true},
      {"eta", "1e-4", "acceptance threshold on theta", true},
      {"kappa_theta", "0.5", "subproblem inexactness multiplier", true},
      {"kappa_c", "1", "diagonal shift weight of the finite-difference Hessian", true},
      {"kappa_hs", "1", "finite-difference step coupling h <= kappa_hs ||s||", true},
      {"strict_listing_tau", "false", "multiply tau before the first check", true},
      {"warm_start", "true", "warm-start APGD across failed iterations", true},
      {"grad_map_tol", "1e-9", "stop when the gradient mapping falls below", true},
      {"max_success", "1000", "cap on accelerated successes", true},
      {"max_total", "5000", "cap on outer iterations", true},
      {"target_gap", "", "stop when F - fstar falls below (needs fstar)", true},
      {"lanczos.max_dim", "100", "Krylov dimension cap", true},
      {"apgd.max_iters", "20000", "inner APGD iteration cap", true},
      {"hybrid.min_success", "10", "successes before the ARC switch may fire", true},
      {"hybrid.rel_progress", "0.1", "relative progress threshold for the switch", true},
      {"hybrid.arc_grad_tol", "1e-9", "gradient tolerance of the ARC phase", true},
      {"hybrid.arc_max_iters", "500", "iteration cap of the ARC phase", true},
      {"arc.eta1", "0.1", "ARC ratio acceptance threshold", true},
      {"arc.max_iters", "500", "ARC iteration cap", true},
      {"arc.grad_tol", "1e-9", "ARC gradient tolerance", true},
      {"agd.L0", "1", "initial Lipschitz estimate for AGD/FISTA", true},
      {"agd.max_iters", "5000", "AGD/FISTA iteration cap", true},
  };
  return keys;
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m = {"uaa-p1", "uaa-p2-exact", "uaa-p2-inexact", "uaa-p3",
                                             "aarc",   "arc",          "agd",            "fista"};
  return m;
}

namespace {

const ConfigKey* find_key(const std::string& key) {
  for (const auto& k : config_keys()) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

bool is_method(const std::string& s) {
  const auto& m = known_methods();
  return std::find(m.begin(), m.end(), s) != m.end();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long out = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void apply_problem_key(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "problem") c.problem = v;
  else if (key == "dataset") c.dataset = v;
  else if (key == "dataset.dim") c.dataset_dim = static_cast<int>(to_integer(key, v));
  else if (key == "synthetic.n") c.synthetic_n = static_cast<int>(to_integer(key, v));
  else if (key == "synthetic.d") c.synthetic_d = static_cast<int>(to_integer(key, v));
  else if (key == "synthetic.noise") c.synthetic_noise = to_real(key, v);
  else if (key == "lambda") c.lambda = to_real(key, v);
  else if (key == "regularizer") c.regularizer = v;
  else if (key == "quadratic.d") c.quadratic_d = static_cast<int>(to_integer(key, v));
  else if (key == "quadratic.mu") c.quadratic_mu = to_real(key, v);
  else if (key == "quadratic.L") c.quadratic_L = to_real(key, v);
  else if (key == "lse.rows") c.lse_rows = static_cast<int>(to_integer(key, v));
  else if (key == "lse.d") c.lse_d = static_cast<int>(to_integer(key, v));
  else if (key == "start_scale") c.start_scale = to_real(key, v);
  else if (key == "methods") c.methods = split_list(v);
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_integer(key, v));
  else if (key == "repetitions") c.repetitions = static_cast<int>(to_integer(key, v));
  else if (key == "fstar") c.fstar = to_real(key, v);
  else if (key == "parallel") c.parallel = to_bool(key, v);
}

}  // namespace

std::string ExperimentConfig::param(const std::string& method, const std::string& key) const {
  if (auto it = overrides.find(method); it != overrides.end()) {
    if (auto jt = it->second.find(key); jt != it->second.end()) return jt->second;
  }
  if (auto it = params.find(key); it != params.end()) return it->second;
  const ConfigKey* k = find_key(key);
  if (!k) throw ConfigError("unknown key '" + key + "'");
  return k->default_value;
}

double ExperimentConfig::param_real(const std::string& method, const std::string& key) const {
  return to_real(key, param(method, key));
}

int ExperimentConfig::param_int(const std::string& method, const std::string& key) const {
  return static_cast<int>(to_integer(key, param(method, key)));
}

bool ExperimentConfig::param_bool(const std::string& method, const std::string& key) const {
  return to_bool(key, param(method, key));
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");

    const auto dot = key.find('.');
    if (dot != std::string::npos && is_method(key.substr(0, dot))) {
      const std::string sub = key.substr(dot + 1);
      const ConfigKey* k = find_key(sub);
      if (!k || !k->per_method) {
        throw ConfigError("line " + std::to_string(line_no) + ": '" + sub +
                          "' cannot be overridden per method");
      }
      c.overrides[key.substr(0, dot)][sub] = value;
      continue;
    }
    const ConfigKey* k = find_key(key);
    if (!k) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (k->per_method) {
      c.params[key] = value;
    } else {
      apply_problem_key(c, key, value);
    }
  }

  if (c.methods.empty()) throw ConfigError("no methods configured");
  for (const auto& m : c.methods) {
    if (!is_method(m)) throw ConfigError("unknown method '" + m + "'");
  }
  if (c.problem != "logistic" && c.problem != "quadratic" && c.problem != "logsumexp") {
    throw ConfigError("unknown problem '" + c.problem + "'");
  }
  if (c.regularizer != "l1" && c.regularizer != "l2") {
    throw ConfigError("unknown regularizer '" + c.regularizer + "'");
  }
  if (c.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!c.dataset.empty() && !fs::exists(c.dataset)) {
    throw ConfigError("dataset not found: " + c.dataset);
  }
  for (const auto& m : c.methods) {
    if (m.rfind("uaa", 0) == 0 || m == "aarc") uaa_config_for(c, m).validate();
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_experiment_config(in);
}

CompositeProblem build_problem(const ExperimentConfig& c) {
  if (c.problem == "quadratic") {
    return CompositeProblem(make_random_quadratic(c.quadratic_d, c.quadratic_mu, c.quadratic_L, c.seed));
  }
  if (c.problem == "logsumexp") {
    return CompositeProblem(make_random_logsumexp(c.lse_rows, c.lse_d, c.seed));
  }
  const Dataset data = c.dataset.empty()
                           ? make_synthetic_classification(c.synthetic_n, c.synthetic_d, c.seed,
                                                           c.synthetic_noise)
                           : load_libsvm(c.dataset, c.dataset_dim);
  if (c.regularizer == "l1") return logistic_l1_problem(data, c.lambda);
  return CompositeProblem(logistic_l2_oracle(data, c.lambda));
}

Vector start_point(const ExperimentConfig& c, int dimension, int rep) {
  std::mt19937_64 rng(c.seed * 1000003ULL + static_cast<std::uint64_t>(rep) + 17);
  std::normal_distribution<double> normal(0.0, c.start_scale);
  Vector x(dimension);
  for (int i = 0; i < dimension; ++i) x[i] = normal(rng);
  return x;
}

std::optional<double> known_fstar(const ExperimentConfig& c, const CompositeProblem& problem) {
  if (c.fstar) return c.fstar;
  if (const auto* q = dynamic_cast<const QuadraticOracle*>(&problem.smooth())) {
    return q->value(q->minimizer());
  }
  return std::nullopt;
}

UaaConfig uaa_config_for(const ExperimentConfig& c, const std::string& m) {
  UaaConfig u;
  if (m == "uaa-p1") {
    u.p = 1;
    u.variant = ModelVariant::FirstOrder;
  } else if (m == "uaa-p2-exact" || m == "aarc") {
    u.p = 2;
    u.variant = ModelVariant::ExactHessian;
  } else if (m == "uaa-p2-inexact") {
    u.p = 2;
    u.variant = ModelVariant::InexactHessian;
  } else if (m == "uaa-p3") {
    u.p = 3;
    u.variant = ModelVariant::TaylorP;
  }
  u.sigma0 = c.param_real(m, "sigma0");
  u.sigma_min = c.param_real(m, "sigma_min");
  u.tau0 = c.param_real(m, "tau0");
  u.gamma1 = c.param_real(m, "gamma1");
  u.gamma2 = c.param_real(m, "gamma2");
  u.gamma3 = c.param_real(m, "gamma3");
  u.eta = c.param_real(m, "eta");
  u.kappa_theta = c.param_real(m, "kappa_theta");
  u.kappa_c = c.param_real(m, "kappa_c");
  u.kappa_hs = c.param_real(m, "kappa_hs");
  u.strict_listing_tau = c.param_bool(m, "strict_listing_tau");
  u.warm_start = c.param_bool(m, "warm_start");
  u.stop.grad_map_tol = c.param_real(m, "grad_map_tol");
  u.stop.max_success = c.param_int(m, "max_success");
  u.stop.max_total = c.param_int(m, "max_total");
  if (const std::string g = c.param(m, "target_gap"); !g.empty()) {
    u.stop.target_gap = to_real("target_gap", g);
    u.stop.fstar = c.fstar;
  }
  u.lanczos.max_dim = c.param_int(m, "lanczos.max_dim");
  u.apgd.max_iters = c.param_int(m, "apgd.max_iters");
  u.hybrid.enabled = m == "aarc";
  u.hybrid.min_success = c.param_int(m, "hybrid.min_success");
  u.hybrid.rel_progress = c.param_real(m, "hybrid.rel_progress");
  u.hybrid.arc_grad_tol = c.param_real(m, "hybrid.arc_grad_tol");
  u.hybrid.arc_max_iters = c.param_int(m, "hybrid.arc_max_iters");
  u.seed = c.seed;
  return u;
}

Solution run_method(const ExperimentConfig& c, const CompositeProblem& problem,
                    const std::string& m, const Vector& x0) {
  if (m == "arc") {
    ArcParams a;
    a.sigma0 = c.param_real(m, "sigma0");
    a.sigma_min = c.param_real(m, "sigma_min");
    a.gamma1 = c.param_real(m, "gamma1");
    a.kappa_theta = c.param_real(m, "kappa_theta");
    a.eta1 = c.param_real(m, "arc.eta1");
    a.max_iters = c.param_int(m, "arc.max_iters");
    a.grad_tol = c.param_real(m, "arc.grad_tol");
    a.lanczos.max_dim = c.param_int(m, "lanczos.max_dim");
    return arc_baseline(problem, x0, a);
  }
  if (m == "agd" || m == "fista") {
    AgdParams a;
    a.L0 = c.param_real(m, "agd.L0");
    a.max_iters = c.param_int(m, "agd.max_iters");
    a.grad_map_tol = c.param_real(m, "grad_map_tol");
    if (const std::string g = c.param(m, "target_gap"); !g.empty() && c.fstar) {
      a.target_gap = to_real("target_gap", g);
      a.fstar = c.fstar;
    }
    return agd_baseline(problem, x0, a);
  }
  const UaaConfig u = uaa_config_for(c, m);
  if (m == "aarc") return aarc_hybrid(problem, x0, u);
  return uaa(problem, x0, u);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.output_dir = config.output_dir;
  if (const char* env = std::getenv("UAA_OUT_DIR"); env && *env) result.output_dir = env;
  fs::create_directories(result.output_dir);

  const CompositeProblem problem = build_problem(config);
  struct Job {
    std::string method;
    int rep;
  };
  std::vector<Job> jobs;
  for (const auto& m : config.methods) {
    for (int r = 0; r < config.repetitions; ++r) jobs.push_back({m, r});
  }

  auto run_job = [&](const Job& job) {
    return run_method(config, problem, job.method, start_point(config, problem.dimension(), job.rep));
  };
  std::vector<Solution> solutions;
  if (config.parallel && jobs.size() > 1) {
    std::vector<std::future<Solution>> futures;
    for (const auto& job : jobs) futures.push_back(std::async(std::launch::async, run_job, job));
    for (auto& f : futures) solutions.push_back(f.get());
  } else {
    for (const auto& job : jobs) solutions.push_back(run_job(job));
  }

  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const Solution& s = solutions[k];
    RunSummary rs;
    rs.method = jobs[k].method;
    rs.rep = jobs[k].rep;
    rs.status = s.status;
    rs.F = s.F;
    rs.grad_map = gradient_mapping_norm(problem, s.x, 1.0);
    rs.iterations = static_cast<int>(s.trace.records.size());
    for (const auto& r : s.trace.records) rs.successes += r.success ? 1 : 0;
    rs.wall_ns = s.trace.records.empty() ? 0 : s.trace.records.back().wall_ns;
    rs.trace_path =
        (fs::path(result.output_dir) / (rs.method + "_rep" + std::to_string(rs.rep) + ".csv")).string();
    write_trace_csv(rs.trace_path, s.trace);
    result.runs.push_back(rs);
    result.traces.push_back(s.trace);
  }

  result.summary_path = (fs::path(result.output_dir) / "summary.csv").string();
  std::ofstream out(result.summary_path);
  if (!out) throw ConfigError("cannot write " + result.summary_path);
  out << "method,rep,status,F,grad_map,iterations,successes,wall_ns,trace\n";
  for (const auto& r : result.runs) {
    out << r.method << ',' << r.rep << ',' << to_string(r.status) << ',' << format_real(r.F) << ','
        << format_real(r.grad_map) << ',' << r.iterations << ',' << r.successes << ','
        << r.wall_ns << ',' << r.trace_path << '\n';
  }
  return result;
}

void write_bench_csv(std::ostream& out, const ExperimentResult& result,
                     std::optional<double> fstar) {
  std::vector<std::size_t> picked;
  for (std::size_t k = 0; k < result.runs.size(); ++k) {
    if (result.runs[k].rep == 0) picked.push_back(k);
  }
  if (!fstar) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : result.traces) {
      for (const auto& r : t.records) best = std::min(best, r.F);
    }
    fstar = best - 1e-14;
  }
  out << "k";
  std::size_t rows = 0;
  for (auto k : picked) {
    const std::string& m = result.runs[k].method;
    out << ',' << m << ":phase," << m << ":success," << m << ":F," << m << ":gap," << m
        << ":grad_map," << m << ":wall_ns";
    rows = std::max(rows, result.traces[k].records.size());
  }
  out << '\n';
  for (std::size_t row = 0; row < rows; ++row) {
    out << row;
    for (auto k : picked) {
      const auto& recs = result.traces[k].records;
      if (row < recs.size()) {
        const auto& r = recs[row];
        out << ',' << r.phase << ',' << (r.success ? 1 : 0) << ',' << format_real(r.F) << ','
            << format_real(r.F - *fstar) << ',' << format_real(r.grad_map) << ',' << r.wall_ns;
      } else {
        out << ",,,,,,";
      }
    }
    out << '\n';
  }
}

ExperimentResult bench(const ExperimentConfig& config) {
  ExperimentResult result = run_experiment(config);
  const CompositeProblem problem = build_problem(config);
  std::ofstream out(fs::path(result.output_dir) / "bench.csv");
  if (!out) throw ConfigError("cannot write bench.csv in " + result.output_dir);
  write_bench_csv(out, result, known_fstar(config, problem));
  return result;
}

std::string to_string(RateStatus s) {
  switch (s) {
    case RateStatus::Pass:
      return "PASS";
    case RateStatus::Fail:
      return "FAIL";
    case RateStatus::Inconclusive:
      return "INCONCLUSIVE";
  }
  return "unknown";
}

RateStatus RateReport::overall() const {
  bool any_pass = false;
  for (const auto& e : entries) {
    if (e.status == RateStatus::Fail) return RateStatus::Fail;
    any_pass = any_pass || e.status == RateStatus::Pass;
  }
  return any_pass ? RateStatus::Pass : RateStatus::Inconclusive;
}

std::vector<double> success_gaps(const RunTrace& trace, double fstar) {
  bool uaa_family = false;
  for (const auto& r : trace.records) {
    if (r.phase == "SAS" || r.phase == "AAS") uaa_family = true;
  }
  std::vector<double> gaps;
  for (const auto& r : trace.records) {
    if (!r.success) continue;
    if (uaa_family && r.phase != "SAS" && r.phase != "AAS") continue;
    gaps.push_back(r.F - fstar);
  }
  if (!uaa_family) {
    // Baselines have no phase-I point; index 0 stays unused.
    gaps.insert(gaps.begin(), std::numeric_limits<double>::quiet_NaN());
  }
  return gaps;
}

RateReport verify_rate(const std::vector<RunTrace>& traces, int p, const RateOptions& options) {
  if (p < 1) throw ConfigError("verify_rate: p must be >= 1");
  RateReport report;
  if (options.fstar) {
    report.fstar = *options.fstar;
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : traces) {
      for (const auto& r : t.records) best = std::min(best, r.F);
    }
    report.fstar = best - 1e-14;
  }

  for (const auto& t : traces) {
    RateEntry e;
    e.theoretical = -(p + 1.0);
    const auto gaps = success_gaps(t, report.fstar);

    std::vector<double> lx, ly;
    for (std::size_t j = 1; j < gaps.size(); ++j) {
      if (static_cast<int>(j) < options.window_lo) continue;
      if (static_cast<int>(j) > options.window_hi) break;
      if (!(gaps[j] > options.floor)) break;
      lx.push_back(std::log(static_cast<double>(j)));
      ly.push_back(std::log(gaps[j]));
    }
    e.points = static_cast<int>(lx.size());
    if (e.points >= std::max(2, options.min_points)) {
      const double n = e.points;
      double mx = 0, my = 0;
      for (int k = 0; k < e.points; ++k) {
        mx += lx[k];
        my += ly[k];
      }
      mx /= n;
      my /= n;
      double sxy = 0, sxx = 0;
      for (int k = 0; k < e.points; ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
      }
      e.slope = sxx > 0 ? sxy / sxx : 0.0;
      e.status = e.slope <= e.theoretical + options.slack ? RateStatus::Pass : RateStatus::Fail;
    } else {
      e.note = "only " + std::to_string(e.points) + " usable successful records";
    }

    if (options.c_bound) {
      bool ok = true;
      for (std::size_t j = 0; j < gaps.size(); ++j) {
        if (std::isnan(gaps[j])) continue;
        double prod = 1.0;
        for (int l = 1; l <= p + 1; ++l) prod *= static_cast<double>(j + l);
        if (gaps[j] > *options.c_bound / prod + 1e-12) ok = false;
      }
      e.c_bound_ok = ok;
    }

    std::optional<double> last_tau;
    for (const auto& r : t.records) {
      if (r.sigma && !(*r.sigma > 0.0 && std::isfinite(*r.sigma))) e.sigma_ok = false;
      if (r.tau && r.phase == "AAS") {
        if (last_tau && *r.tau < *last_tau) e.tau_ok = false;
        last_tau = r.tau;
      }
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace uaa
