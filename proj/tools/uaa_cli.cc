// Command-line runner: run / verify / bench.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uaa/errors.hpp"
#include "uaa/harness.hpp"
#include "uaa/trace.hpp"

namespace {

std::string keys_footer() {
  std::ostringstream out;
  out << "\nConfig file keys (key = value, '#' comments; keys marked * accept\n"
         "per-method overrides such as uaa-p2-exact.eta):\n";
  for (const auto& k : uaa::config_keys()) {
    std::string name = k.key;
    if (k.per_method) name += " *";
    char line[256];
    std::snprintf(line, sizeof(line), "  %-24s %-10s %s\n", name.c_str(),
                  *k.default_value ? k.default_value : "-", k.help);
    out << line;
  }
  out << "\nEnvironment: UAA_OUT_DIR overrides output_dir.\n"
         "Exit codes: 0 ok (verify: pass or inconclusive), 1 config/IO error,\n"
         "2 rate verification failed.\n";
  return out.str();
}

void print_runs(const uaa::ExperimentResult& r) {
  std::printf("%-16s %4s %-14s %-24s %-12s %6s %6s\n", "method", "rep", "status", "F", "grad_map",
              "iters", "succ");
  for (const auto& s : r.runs) {
    std::printf("%-16s %4d %-14s %-24.17g %-12.3e %6d %6d\n", s.method.c_str(), s.rep,
                uaa::to_string(s.status).c_str(), s.F, s.grad_map, s.iterations, s.successes);
  }
  std::printf("summary: %s\n", r.summary_path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal adaptive accelerated optimization: experiment runner"};
  app.footer(keys_footer());
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run every configured method and repetition");
  run->add_option("config", run_config, "config file")->required();

  std::string bench_config;
  auto* bench = app.add_subcommand("bench", "Run and write a merged bench.csv for plotting");
  bench->add_option("config", bench_config, "config file")->required();

  std::vector<std::string> traces;
  int p = 0;
  uaa::RateOptions rate;
  std::optional<double> fstar;
  auto* verify = app.add_subcommand("verify", "Fit the gap decay rate of trace files");
  verify->add_option("traces", traces, "trace CSV files")->required();
  verify->add_option("--p", p, "model order; the expected slope is -(p+1)")->required();
  verify->add_option("--window-lo", rate.window_lo, "first successful index in the fit");
  verify->add_option("--window-hi", rate.window_hi, "last successful index in the fit");
  verify->add_option("--slack", rate.slack, "allowed slope excess");
  verify->add_option("--floor", rate.floor, "gaps at or below this end the fit");
  verify->add_option("--fstar", fstar, "optimal value (default: best F seen - 1e-14)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      print_runs(uaa::run_experiment(uaa::load_experiment_config(run_config)));
      return 0;
    }
    if (*bench) {
      const auto r = uaa::bench(uaa::load_experiment_config(bench_config));
      print_runs(r);
      std::printf("bench: %s/bench.csv\n", r.output_dir.c_str());
      return 0;
    }
    if (*verify) {
      std::vector<uaa::RunTrace> loaded;
      for (const auto& path : traces) loaded.push_back(uaa::read_trace_csv(path));
      rate.fstar = fstar;
      const auto report = uaa::verify_rate(loaded, p, rate);
      for (std::size_t k = 0; k < report.entries.size(); ++k) {
        const auto& e = report.entries[k];
        std::printf("%s: %s slope=%.4f expected<=%.4f points=%d%s%s\n", traces[k].c_str(),
                    uaa::to_string(e.status).c_str(), e.slope, e.theoretical + rate.slack, e.points,
                    e.note.empty() ? "" : " ", e.note.c_str());
      }
      const auto overall = report.overall();
      std::printf("%s\n", uaa::to_string(overall).c_str());
      return overall == uaa::RateStatus::Fail ? 2 : 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
