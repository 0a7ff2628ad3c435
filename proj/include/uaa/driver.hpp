#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "uaa/model.hpp"
#include "uaa/problem.hpp"
#include "uaa/subsolver.hpp"
#include "uaa/trace.hpp"
#include "uaa/types.hpp"

namespace uaa {

struct StoppingRule {
  double grad_map_tol = 1e-9;
  int max_success = 1000;
  int max_total = 5000;
  std::optional<double> target_gap;  // needs fstar
  std::optional<double> fstar;
};

struct HybridConfig {
  bool enabled = false;
  int min_success = 10;
  double rel_progress = 0.1;
  double arc_grad_tol = 1e-9;
  int arc_max_iters = 500;
};

// Passed to UaaConfig::on_subsolve after every subproblem solve. The pointers
// are valid only during the call.
struct SubsolveEvent {
  const char* phase = "";
  int iteration = 0;
  const RegularizedModel* model = nullptr;
  const SubsolveResult* result = nullptr;
  double kappa_theta = 0.0;
  bool accepted = false;  // the outer iteration counted as successful
};

struct InexactHessianEvent {
  Vector x;
  double h = 0.0;
  const Matrix* hessian = nullptr;
  int attempts = 0;
};

struct UaaConfig {
  int p = 2;
  ModelVariant variant = ModelVariant::ExactHessian;
  double sigma0 = 1.0;
  double sigma_min = 1e-8;
  double tau0 = 1.0;
  double gamma1 = 2.0;
  double gamma2 = 3.0;
  double gamma3 = 2.0;
  double eta = 1e-4;
  double kappa_theta = 0.5;
  // finite-difference Hessian: H = sym(A) + kappa_c h I with h <= kappa_hs ||s||
  double kappa_c = 1.0;
  double kappa_hs = 1.0;
  bool strict_listing_tau = false;
  bool warm_start = true;
  StoppingRule stop;
  HybridConfig hybrid;
  LanczosOptions lanczos;
  ApgdOptions apgd;
  std::uint64_t seed = 0;

  std::function<void(const SubsolveEvent&)> on_subsolve;
  std::function<void(const InexactHessianEvent&)> on_inexact_hessian;

  // Throws ConfigError on violated input constraints.
  void validate() const;
};

enum class Status { Converged, IterCap, SubsolveFail, EscalationFail };
std::string to_string(Status s);

struct Solution {
  Vector x;
  double F = 0.0;
  Status status = Status::IterCap;
  RunTrace trace;
  std::string message;
};

struct SasResult {
  Vector x;
  double sigma = 0.0;
  bool succeeded = false;
  // When !succeeded: Converged (stationary start) or SubsolveFail.
  Status status = Status::SubsolveFail;
  RunTrace trace;
};

// Phase I: iterate until the first success F(x+) - m(x+) < 0 (plus the
// pointwise convexity check when p >= 3).
SasResult sas(const CompositeProblem& problem, const Vector& x0, const UaaConfig& config);

// (y - x)^T (grad f(x) + xi) / ||y - x||^(p+1); nullopt when
// ||y - x|| <= 1e-12 (1 + ||y||).
std::optional<double> theta(const Vector& x, const Vector& y, const Vector& xi,
                            const Vector& grad_f_at_x, int p);

// Phase II from the SAS output. `prefix` is prepended to the trace.
Solution aas(const CompositeProblem& problem, const Vector& xbar0, double sigma_in,
             const UaaConfig& config, RunTrace prefix = {});

Solution uaa(const CompositeProblem& problem, const Vector& x0, const UaaConfig& config);

// uaa with a switch to arc_baseline once progress slows (config.hybrid).
Solution aarc_hybrid(const CompositeProblem& problem, const Vector& x0, UaaConfig config);

struct ArcParams {
  double sigma0 = 1.0;
  double sigma_min = 1e-8;
  double gamma1 = 2.0;
  double eta1 = 0.1;
  double kappa_theta = 0.5;
  double grad_tol = 1e-9;
  int max_iters = 500;
  LanczosOptions lanczos;
};

// Adaptive cubic regularization with the ratio test. Smooth problems only.
Solution arc_baseline(const CompositeProblem& problem, const Vector& x0, const ArcParams& params);

struct AgdParams {
  double L0 = 1.0;
  std::optional<double> fixed_L;  // no backtracking when set
  double grad_map_tol = 1e-9;
  int max_iters = 5000;
  std::optional<double> target_gap;
  std::optional<double> fstar;
};

// Nesterov accelerated gradient; FISTA when the problem has a nonsmooth part.
Solution agd_baseline(const CompositeProblem& problem, const Vector& x0, const AgdParams& params);

}  // namespace uaa
