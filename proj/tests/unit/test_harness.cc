#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "support/reference.hpp"
#include "uaa/errors.hpp"
#include "uaa/harness.hpp"
#include "uaa/trace.hpp"

namespace uaa {
namespace {

namespace fs = std::filesystem;

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_config(in);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uaa_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// SAS success at index 0 followed by AAS successes with gap j^-power.
RunTrace power_trace(double power, int count) {
  RunTrace t;
  TraceRecord sas;
  sas.phase = "SAS";
  sas.success = true;
  sas.F = 1.0;
  t.records.push_back(sas);
  for (int j = 1; j <= count; ++j) {
    TraceRecord r;
    r.i = j;
    r.phase = "AAS";
    r.success = true;
    r.F = std::pow(double(j), -power);
    r.theta = 1.0;
    t.records.push_back(r);
    if (j % 7 == 0) {  // an interleaved failure does not shift the index
      TraceRecord f = r;
      f.success = false;
      f.F = 5.0;
      t.records.push_back(f);
    }
  }
  return t;
}

TEST(Config, ParsesKeysAndOverrides) {
  const auto c = parse(
      "# comment\n"
      "problem = quadratic\n"
      "quadratic.d = 7\n"
      "methods = uaa-p1, uaa-p2-exact , agd\n"
      "eta = 1e-3\n"
      "uaa-p2-exact.eta = 0.01   # per method\n"
      "seed = 9\n");
  EXPECT_EQ(c.problem, "quadratic");
  EXPECT_EQ(c.quadratic_d, 7);
  EXPECT_EQ(c.methods, (std::vector<std::string>{"uaa-p1", "uaa-p2-exact", "agd"}));
  EXPECT_EQ(c.param_real("uaa-p1", "eta"), 1e-3);
  EXPECT_EQ(c.param_real("uaa-p2-exact", "eta"), 0.01);
  EXPECT_EQ(c.param_real("agd", "kappa_theta"), 0.5);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(uaa_config_for(c, "uaa-p2-exact").eta, 0.01);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("methods = uaa-p1\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse("methods = uaa-p9\n"), ConfigError);
  EXPECT_THROW(parse("methods = uaa-p1\njust a line\n"), ParseError);
  EXPECT_THROW(parse("problem = quadratic\n"), ConfigError);
  EXPECT_THROW(parse("methods = uaa-p1\ndataset = /nonexistent/file.svm\n"), ConfigError);
  EXPECT_THROW(parse("methods = uaa-p1\nuaa-p1.lambda = 2\n"), ConfigError);
  EXPECT_THROW(parse("methods = uaa-p2-exact\ngamma2 = 1.5\n"), ConfigError);
  EXPECT_THROW(parse("methods = uaa-p1\nsigma0 = abc\n"), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/exp.cfg"), ConfigError);
}

TEST(Experiment, SingleRunWritesOneTrace) {
  const auto dir = scratch("single");
  auto c = parse("problem = quadratic\nquadratic.d = 6\nmethods = uaa-p1\nmax_success = 30\n");
  c.output_dir = dir.string();
  const auto r = run_experiment(c);
  ASSERT_EQ(r.runs.size(), 1u);
  int csv = 0;
  for (const auto& e : fs::directory_iterator(dir)) csv += e.path().extension() == ".csv";
  EXPECT_EQ(csv, 2);  // trace + summary
  const auto t = read_trace_csv(r.runs[0].trace_path);
  EXPECT_EQ(t.records.size(), r.traces[0].records.size());
  const auto rep = verify_rate({t}, 1, {});
  EXPECT_EQ(rep.entries.size(), 1u);
  fs::remove_all(dir);
}

TEST(Experiment, EnvironmentOverridesOutputDir) {
  const auto dir = scratch("env");
  auto c = parse("problem = quadratic\nquadratic.d = 4\nmethods = agd\n");
  c.output_dir = "/nonexistent/never";
  ::setenv("UAA_OUT_DIR", dir.string().c_str(), 1);
  const auto r = run_experiment(c);
  ::unsetenv("UAA_OUT_DIR");
  EXPECT_EQ(r.output_dir, dir.string());
  EXPECT_TRUE(fs::exists(dir / "agd_rep0.csv"));
  fs::remove_all(dir);
}

std::string strip_wall(const std::string& path) {
  std::ifstream in(path);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

TEST(Experiment, DeterministicTraces) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto c = parse("synthetic.n = 50\nsynthetic.d = 5\nmethods = uaa-p2-exact, uaa-p2-inexact, fista\n"
                 "repetitions = 2\nregularizer = l2\n");
  c.output_dir = a.string();
  const auto ra = run_experiment(c);
  c.output_dir = b.string();
  const auto rb = run_experiment(c);
  for (std::size_t k = 0; k < ra.runs.size(); ++k) {
    EXPECT_EQ(strip_wall(ra.runs[k].trace_path), strip_wall(rb.runs[k].trace_path));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Bench, ColumnGroupPerMethod) {
  const auto dir = scratch("bench");
  auto c = parse("problem = quadratic\nquadratic.d = 5\nmethods = uaa-p1, uaa-p2-exact, agd\n");
  c.output_dir = dir.string();
  bench(c);
  std::ifstream in(dir / "bench.csv");
  std::string header;
  std::getline(in, header);
  for (const char* m : {"uaa-p1", "uaa-p2-exact", "agd"}) {
    for (const char* col : {":phase", ":success", ":F", ":gap", ":grad_map", ":wall_ns"}) {
      EXPECT_NE(header.find(std::string(m) + col), std::string::npos) << m << col;
    }
  }
  fs::remove_all(dir);
}

TEST(Verify, CubicDecayPassesForOrderTwo) {
  RateOptions o;
  o.fstar = 0.0;
  const auto r = verify_rate({power_trace(3.0, 40)}, 2, o);
  EXPECT_NEAR(r.entries[0].slope, -3.0, 1e-12);
  EXPECT_EQ(r.overall(), RateStatus::Pass);
}

TEST(Verify, QuadraticDecay) {
  RateOptions o;
  o.fstar = 0.0;
  EXPECT_EQ(verify_rate({power_trace(2.0, 40)}, 2, o).overall(), RateStatus::Fail);
  EXPECT_EQ(verify_rate({power_trace(2.0, 40)}, 1, o).overall(), RateStatus::Pass);
}

TEST(Verify, FewPointsInconclusive) {
  RateOptions o;
  o.fstar = 0.0;
  EXPECT_EQ(verify_rate({power_trace(3.0, 5)}, 2, o).overall(), RateStatus::Inconclusive);
  o.floor = 1e-3;  // j^-3 drops below 1e-3 at j = 10
  EXPECT_EQ(verify_rate({power_trace(3.0, 40)}, 2, o).entries[0].points, 9);
}

TEST(Verify, CBound) {
  RateOptions o;
  o.fstar = 0.0;
  o.c_bound = 6.0;  // j^-3 <= 6/((j+1)(j+2)(j+3)) fails for large j; 1 <= 1 at j = 0
  EXPECT_FALSE(*verify_rate({power_trace(3.0, 20)}, 2, o).entries[0].c_bound_ok);
  o.c_bound = 64.0;
  EXPECT_TRUE(*verify_rate({power_trace(3.0, 20)}, 2, o).entries[0].c_bound_ok);
}

TEST(Verify, RealSecondOrderRun) {
  const auto data = make_synthetic_classification(200, 20, 3);
  const auto f = logistic_l2_oracle(data, 1e-5);
  UaaConfig u;
  u.p = 2;
  u.stop.grad_map_tol = 0.0;
  u.stop.max_success = 200;
  const auto sol = uaa::uaa(CompositeProblem(f), Vector::Constant(20, 1.0), u);
  RateOptions o;
  o.fstar = testing::newton_minimize(*f, Vector::Zero(20)).f;
  o.floor = 1e-12;
  const auto rep = verify_rate({sol.trace}, 2, o);
  EXPECT_EQ(rep.overall(), RateStatus::Pass) << rep.entries[0].slope;
}

TEST(Trace, RoundTripAndSchema) {
  RunTrace t = power_trace(2.0, 10);
  t.records[3].grad_map = 1.25e-7;
  t.records[3].sigma = 0.1;
  t.records[3].wall_ns = 123456789;
  std::stringstream buf;
  write_trace_csv(buf, t);
  const auto back = read_trace_csv(buf);
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    EXPECT_EQ(back.records[k].F, t.records[k].F);
    EXPECT_EQ(back.records[k].grad_map, t.records[k].grad_map);
    EXPECT_EQ(back.records[k].sigma, t.records[k].sigma);
    EXPECT_EQ(back.records[k].tau, t.records[k].tau);
    EXPECT_EQ(back.records[k].theta, t.records[k].theta);
    EXPECT_EQ(back.records[k].wall_ns, t.records[k].wall_ns);
    EXPECT_EQ(back.records[k].success, t.records[k].success);
  }
  std::istringstream other("i,phase,success,F,extra\n");
  EXPECT_THROW(read_trace_csv(other), SchemaError);
  std::istringstream short_row(std::string(kTraceHeader) + "\n1,AAS,1\n");
  EXPECT_THROW(read_trace_csv(short_row), ParseError);
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const fs::path out = fs::temp_directory_path() / ("uaa_cli_out_" + std::to_string(::getpid()));
  const std::string cmd = std::string(UAA_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(out);
    std::stringstream s;
    s << in.rdbuf();
    *output = s.str();
  }
  fs::remove(out);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, VerifyExitCodes) {
  const auto dir = scratch("cli");
  write_trace_csv((dir / "cubic.csv").string(), power_trace(3.0, 40));
  write_trace_csv((dir / "square.csv").string(), power_trace(2.0, 40));
  write_trace_csv((dir / "short.csv").string(), power_trace(3.0, 4));
  EXPECT_EQ(run_cli("verify " + (dir / "cubic.csv").string() + " --p 2 --fstar 0"), 0);
  EXPECT_EQ(run_cli("verify " + (dir / "square.csv").string() + " --p 2 --fstar 0"), 2);
  EXPECT_EQ(run_cli("verify " + (dir / "short.csv").string() + " --p 2 --fstar 0"), 0);
  fs::remove_all(dir);
}

TEST(Cli, MissingConfigNamesPath) {
  std::string out;
  EXPECT_EQ(run_cli("run /nonexistent/experiment.cfg", &out), 1);
  EXPECT_NE(out.find("/nonexistent/experiment.cfg"), std::string::npos);
}

TEST(Cli, HelpListsKeys) {
  std::string out;
  EXPECT_EQ(run_cli("--help", &out), 0);
  for (const auto& k : config_keys()) EXPECT_NE(out.find(k.key), std::string::npos) << k.key;
}

TEST(Cli, RunAndBench) {
  const auto dir = scratch("cli_run");
  {
    std::ofstream cfg(dir / "exp.cfg");
    cfg << "problem = quadratic\nquadratic.d = 5\nmethods = uaa-p1, uaa-p2-exact, agd\n"
        << "output_dir = " << (dir / "out").string() << "\n";
  }
  EXPECT_EQ(run_cli("run " + (dir / "exp.cfg").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  EXPECT_EQ(run_cli("bench " + (dir / "exp.cfg").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "bench.csv"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace uaa
