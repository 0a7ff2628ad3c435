#include <algorithm>
#include <cmath>
#include <limits>

#include "arc_internal.hpp"
#include "uaa/errors.hpp"

namespace uaa {

namespace detail {

Solution run_arc(const CompositeProblem& problem, const Vector& x0, const ArcParams& params,
                 const char* phase, RunTrace trace, Clock::time_point start, int first_index) {
  if (problem.has_nonsmooth()) throw ConfigError("arc: smooth problems only");
  if (!(params.sigma_min > 0.0 && params.gamma1 > 1.0)) throw ConfigError("arc: bad parameters");
  const OraclePtr& f = problem.smooth_ptr();
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  Vector x = x0;
  double fx = f->value(x);
  Vector g = f->gradient(x);
  double sigma = std::max(params.sigma0, params.sigma_min);
  Solution out;
  out.status = Status::IterCap;

  for (int it = 0; it < params.max_iters; ++it) {
    if (g.norm() <= params.grad_tol) {
      out.status = Status::Converged;
      break;
    }
    const EffectiveModel m = build_model(f, x, ModelVariant::ExactHessian, 2);
    const SubsolveResult res =
        solve_cubic_lanczos(x, g, m.curvature_operator(), sigma, params.kappa_theta, params.lanczos);
    const Vector s = res.xbar - x;
    const double sn = s.norm();
    const double pred =
        -(g.dot(s) + 0.5 * s.dot(m.curvature_times(s)) + sigma * sn * sn * sn / 3.0);
    const double f_new = f->value(res.xbar);
    const Vector g_new = f->gradient(res.xbar);

    bool success;
    if (pred <= 100.0 * kEps * std::max(1.0, std::abs(fx))) {
      // Function differences are below rounding; fall back to the gradient.
      success = sn > 0.0 && g_new.norm() < g.norm();
    } else {
      success = (fx - f_new) / pred >= params.eta1;
    }

    TraceRecord r;
    r.i = first_index + it;
    r.phase = phase;
    r.success = success;
    r.F = f_new;
    r.grad_map = g_new.norm();
    r.sigma = sigma;
    r.step_norm = sn;
    r.inner_iters = res.inner_iters;
    r.wall_ns = elapsed_ns(start);
    trace.records.push_back(std::move(r));

    if (success) {
      x = res.xbar;
      fx = f_new;
      g = g_new;
      sigma = std::max(params.sigma_min, sigma / params.gamma1);
    } else {
      sigma *= params.gamma1;
    }
  }
  if (out.status == Status::IterCap && g.norm() <= params.grad_tol) out.status = Status::Converged;
  out.x = x;
  out.F = problem.objective(x);
  out.trace = std::move(trace);
  return out;
}

}  // namespace detail

Solution arc_baseline(const CompositeProblem& problem, const Vector& x0, const ArcParams& params) {
  return detail::run_arc(problem, x0, params, "ARC", {}, detail::Clock::now(), 0);
}

Solution agd_baseline(const CompositeProblem& problem, const Vector& x0, const AgdParams& params) {
  const auto start = detail::Clock::now();
  const OraclePtr& f = problem.smooth_ptr();
  const char* phase = problem.has_nonsmooth() ? "FISTA" : "AGD";
  double lip = params.fixed_L ? *params.fixed_L : params.L0;
  if (!(lip > 0.0)) throw ConfigError("agd: L must be > 0");
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  Solution out;
  out.status = Status::IterCap;
  Vector x = x0;
  Vector y = x0;
  double t = 1.0;
  if (gradient_mapping_norm(problem, x, 1.0) <= params.grad_map_tol) {
    out.status = Status::Converged;
  }

  for (int k = 1; out.status != Status::Converged && k <= params.max_iters; ++k) {
    const Vector gy = f->gradient(y);
    const double fy = f->value(y);
    Vector x_new;
    for (int bt = 0;; ++bt) {
      x_new = problem.prox(y - gy / lip, 1.0 / lip);
      if (params.fixed_L) break;
      const Vector d = x_new - y;
      if (f->value(x_new) <= fy + gy.dot(d) + 0.5 * lip * d.squaredNorm() + 8.0 * kEps * std::abs(fy)) {
        break;
      }
      lip *= 2.0;
      if (bt > 200 || !std::isfinite(lip)) throw NumericalError("agd: step size diverged");
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    x = x_new;
    t = t_new;

    TraceRecord r;
    r.i = k - 1;
    r.phase = phase;
    r.success = true;
    r.F = problem.objective(x);
    r.grad_map = gradient_mapping_norm(problem, x, 1.0);
    r.sigma = lip;
    r.inner_iters = 1;
    r.wall_ns = detail::elapsed_ns(start);
    const bool done = *r.grad_map <= params.grad_map_tol ||
                      (params.target_gap && params.fstar &&
                       r.F - *params.fstar <= *params.target_gap);
    out.trace.records.push_back(std::move(r));
    if (done) out.status = Status::Converged;
  }
  out.x = x;
  out.F = problem.objective(x);
  return out;
}

}  // namespace uaa
