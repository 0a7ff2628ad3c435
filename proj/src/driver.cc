#include "uaa/driver.hpp"

#include <algorithm>
#include <cmath>

#include "arc_internal.hpp"
#include "uaa/auxiliary.hpp"
#include "uaa/errors.hpp"

namespace uaa {

using detail::Clock;
using detail::elapsed_ns;

void UaaConfig::validate() const {
  if (p < 1) throw ConfigError("p must be >= 1");
  if (!(gamma1 > 1.0 && gamma2 > gamma1)) throw ConfigError("need gamma2 > gamma1 > 1");
  if (!(gamma3 > 1.0)) throw ConfigError("need gamma3 > 1");
  if (!(sigma_min > 0.0 && sigma_min <= sigma0)) throw ConfigError("need 0 < sigma_min <= sigma0");
  if (!(eta > 0.0)) throw ConfigError("need eta > 0");
  if (!(tau0 > 0.0)) throw ConfigError("need tau0 > 0");
  if (!(kappa_theta >= 0.0)) throw ConfigError("need kappa_theta >= 0");
  switch (variant) {
    case ModelVariant::FirstOrder:
      if (p != 1) throw ConfigError("first-order variant needs p = 1");
      break;
    case ModelVariant::ExactHessian:
    case ModelVariant::InexactHessian:
      if (p != 2) throw ConfigError("Hessian variants need p = 2");
      break;
    case ModelVariant::TaylorP:
      break;
  }
  if (variant == ModelVariant::InexactHessian && !(kappa_hs > 0.0 && kappa_c >= 0.0)) {
    throw ConfigError("need kappa_hs > 0 and kappa_c >= 0");
  }
  if (hybrid.enabled && p != 2) throw ConfigError("hybrid mode needs p = 2");
  if (stop.target_gap && !stop.fstar) throw ConfigError("target_gap needs fstar");
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Converged:
      return "Converged";
    case Status::IterCap:
      return "IterCap";
    case Status::SubsolveFail:
      return "SubsolveFail";
    case Status::EscalationFail:
      return "EscalationFail";
  }
  return "unknown";
}

std::optional<double> theta(const Vector& x, const Vector& y, const Vector& xi,
                            const Vector& grad_f_at_x, int p) {
  const Vector d = y - x;
  const double n = d.norm();
  if (n <= 1e-12 * (1.0 + y.norm())) return std::nullopt;
  return d.dot(grad_f_at_x + xi) / std::pow(n, p + 1);
}

namespace {

bool degenerate(const Vector& s, const Vector& anchor) {
  return s.norm() <= 1e-12 * (1.0 + anchor.norm());
}

struct Trial {
  std::optional<EffectiveModel> model;
  SubsolveResult result;
  std::optional<double> fd_h;
};

class Engine {
 public:
  Engine(const CompositeProblem& problem, const UaaConfig& config, Clock::time_point start,
         RunTrace trace)
      : problem_(problem), cfg_(config), start_(start), trace_(std::move(trace)) {
    total_ = static_cast<int>(trace_.records.size());
  }

  SasResult run_sas(const Vector& x0);
  Solution run_aas(const Vector& xbar0, double sigma_in);

  RunTrace& trace() { return trace_; }

 private:
  bool smooth() const { return !problem_.has_nonsmooth(); }
  const OraclePtr& f() const { return problem_.smooth_ptr(); }
  double grad_map(const Vector& x, const Vector& g) const {
    return gradient_mapping_norm(problem_, x, g, 1.0);
  }
  bool stationary(const Vector& g, double fx) const {
    return smooth() && g.norm() <= 1e-14 * (1.0 + std::abs(fx));
  }

  void solve_at(Trial& t, const Vector& y, double sigma, const std::optional<Vector>& warm);
  SubsolveResult subsolve_p2(const EffectiveModel& m, double sigma,
                             const std::optional<Vector>& warm) const;
  bool convex_ok(const RegularizedModel& reg, const Vector& y);
  void notify(const char* phase, const Trial& t, double sigma, bool accepted) const;
  void record(TraceRecord r) {
    r.wall_ns = elapsed_ns(start_);
    trace_.records.push_back(std::move(r));
  }
  Solution finish(const Vector& x, Status status, std::string message = {}) {
    Solution s;
    s.x = x;
    s.F = problem_.objective(x);
    s.status = status;
    s.message = std::move(message);
    s.trace = std::move(trace_);
    return s;
  }

  const CompositeProblem& problem_;
  const UaaConfig& cfg_;
  Clock::time_point start_;
  RunTrace trace_;
  int total_ = 0;
  double h_state_ = 0.0;
};

SubsolveResult Engine::subsolve_p2(const EffectiveModel& m, double sigma,
                                   const std::optional<Vector>& warm) const {
  if (smooth() && m.order() == 2) {
    return solve_cubic_lanczos(m.anchor(), m.anchor_gradient(), m.curvature_operator(), sigma,
                               cfg_.kappa_theta, cfg_.lanczos);
  }
  RegularizedModel reg(m, sigma, problem_);
  if (smooth()) {
    NewtonOptions opts;
    if (cfg_.warm_start) opts.warm_start = warm;
    return solve_smooth_newton(reg, cfg_.kappa_theta, opts);
  }
  ApgdOptions opts = cfg_.apgd;
  if (cfg_.warm_start) opts.warm_start = warm;
  return solve_composite_apgd(reg, cfg_.kappa_theta, opts);
}

void Engine::solve_at(Trial& t, const Vector& y, double sigma, const std::optional<Vector>& warm) {
  const int p = cfg_.p;
  if (p == 1) {
    t.model.emplace(build_model(f(), y, ModelVariant::FirstOrder, 1));
    t.result = solve_first_order(y, t.model->anchor_gradient(), sigma, problem_);
    return;
  }
  if (cfg_.variant == ModelVariant::InexactHessian) {
    SubsolveResult last;
    auto solve = [&](const Matrix& h) -> Vector {
      const EffectiveModel m = model_with_hessian(f(), y, h, 0.0);
      last = subsolve_p2(m, sigma, warm);
      return last.xbar - y;
    };
    const double h0 = h_state_ > 0.0 ? h_state_ : 1.0;
    const CoupledHessian ch =
        step_coupled_hessian(*f(), y, cfg_.kappa_hs, cfg_.kappa_c, solve, h0);
    t.model.emplace(model_with_hessian(f(), y, ch.hessian, ch.h));
    t.fd_h = ch.h;
    if (ch.status == CoupledHessian::Status::ZeroStep) {
      last.xbar = y;
    } else {
      h_state_ = cfg_.kappa_hs * ch.step.norm();
    }
    t.result = std::move(last);
    if (cfg_.on_inexact_hessian) {
      InexactHessianEvent ev;
      ev.x = y;
      ev.h = ch.h;
      ev.hessian = &t.model->inexact_hessian().value();
      ev.attempts = ch.attempts;
      cfg_.on_inexact_hessian(ev);
    }
    return;
  }
  const ModelVariant variant = p == 2 ? cfg_.variant : ModelVariant::TaylorP;
  t.model.emplace(build_model(f(), y, variant, p));
  t.result = subsolve_p2(*t.model, sigma, warm);
}

bool Engine::convex_ok(const RegularizedModel& reg, const Vector& y) {
  if (cfg_.p < 3) return true;
  ++trace_.convexity_checks;
  const bool ok = pointwise_convexity_check(reg, y);
  if (!ok) ++trace_.convexity_rejections;
  return ok;
}

void Engine::notify(const char* phase, const Trial& t, double sigma, bool accepted) const {
  if (!cfg_.on_subsolve) return;
  RegularizedModel reg(*t.model, sigma, problem_);
  SubsolveEvent ev;
  ev.phase = phase;
  ev.iteration = total_ - 1;
  ev.model = &reg;
  ev.result = &t.result;
  ev.kappa_theta = cfg_.p == 1 ? 0.0 : cfg_.kappa_theta;
  ev.accepted = accepted;
  cfg_.on_subsolve(ev);
}

SasResult Engine::run_sas(const Vector& x0) {
  SasResult out;
  Vector x = x0;
  double sigma = cfg_.sigma0;
  std::optional<Vector> warm;
  const double fx = f()->value(x);
  const Vector gx = f()->gradient(x);

  while (total_ < cfg_.stop.max_total) {
    if (stationary(gx, fx)) {
      out.status = Status::Converged;
      break;
    }
    Trial t;
    try {
      solve_at(t, x, sigma, warm);
    } catch (const CouplingFailure& e) {
      trace_.warnings.emplace_back(e.what());
      out.status = Status::SubsolveFail;
      break;
    }
    const int i = total_++;
    const Vector& xb = t.result.xbar;
    const Vector s = xb - x;

    TraceRecord r;
    r.i = i;
    r.phase = "SAS";
    r.sigma = sigma;
    r.step_norm = s.norm();
    r.inner_iters = t.result.inner_iters;
    r.fd_h = t.fd_h;

    if (degenerate(s, x)) {
      const double gm = grad_map(x, gx);
      r.F = problem_.objective(x);
      r.grad_map = gm;
      notify("SAS", t, sigma, false);
      record(std::move(r));
      if (gm <= cfg_.stop.grad_map_tol) {
        out.status = Status::Converged;
        break;
      }
      sigma *= cfg_.gamma1;
      continue;
    }

    const double f_new = problem_.objective(xb);
    RegularizedModel reg(*t.model, sigma, problem_);
    bool ok = t.result.ok() && f_new - reg.value(xb) < 0.0;
    if (ok) ok = convex_ok(reg, xb);
    r.success = ok;
    r.F = f_new;
    r.grad_map = grad_map(xb, f()->gradient(xb));
    notify("SAS", t, sigma, ok);
    record(std::move(r));

    if (ok) {
      out.x = xb;
      out.sigma = std::max(cfg_.sigma_min, sigma / cfg_.gamma1);
      out.succeeded = true;
      out.trace = trace_;
      return out;
    }
    sigma *= cfg_.gamma1;
    warm = xb;
  }
  out.x = x;
  out.sigma = sigma;
  out.trace = trace_;
  return out;
}

Solution Engine::run_aas(const Vector& xbar0, double sigma_in) {
  const int p = cfg_.p;
  double sigma = sigma_in;
  const double f0 = problem_.objective(xbar0);
  AuxModel aux = init_aux(xbar0, f0, cfg_.tau0, p);
  const AuxMin z0 = minimize_aux(aux, aux.tau);
  Vector y = (1.0 / (p + 2)) * xbar0 + ((p + 1.0) / (p + 2)) * z0.z;

  Vector best_x = xbar0;
  double best_f = f0;
  double last_f = f0;
  int successes = 0;
  std::optional<Vector> warm;

  while (total_ < cfg_.stop.max_total && successes < cfg_.stop.max_success) {
    const double fy = f()->value(y);
    const Vector gy = f()->gradient(y);
    if (stationary(gy, fy)) {
      return finish(y, Status::Converged);
    }
    Trial t;
    try {
      solve_at(t, y, sigma, warm);
    } catch (const CouplingFailure& e) {
      trace_.warnings.emplace_back(e.what());
      return finish(best_x, Status::SubsolveFail, e.what());
    }
    const int i = total_++;
    const Vector& xb = t.result.xbar;
    const Vector& xi = t.result.xi;
    const Vector s = xb - y;

    TraceRecord r;
    r.i = i;
    r.phase = "AAS";
    r.sigma = sigma;
    r.tau = aux.tau;
    r.step_norm = s.norm();
    r.inner_iters = t.result.inner_iters;
    r.fd_h = t.fd_h;

    const auto th = theta(xb, y, xi, Vector::Zero(xb.size()), p);
    if (degenerate(s, y) || !th) {
      const double gm = grad_map(y, gy);
      const double f_y = problem_.objective(y);
      r.F = f_y;
      r.grad_map = gm;
      notify("AAS", t, sigma, false);
      record(std::move(r));
      if (gm <= cfg_.stop.grad_map_tol) {
        return finish(f_y <= best_f ? y : best_x, Status::Converged);
      }
      sigma *= cfg_.gamma1;
      continue;
    }

    const Vector gx = f()->gradient(xb);
    const Vector v = gx + xi;
    const double th_val = *theta(xb, y, xi, gx, p);
    const double f_new = problem_.objective(xb);
    const double gm = grad_map(xb, gx);
    bool ok = t.result.ok() && th_val >= cfg_.eta;
    if (ok && p >= 3) {
      RegularizedModel reg(*t.model, sigma, problem_);
      ok = convex_ok(reg, xb);
    }
    r.success = ok;
    r.F = f_new;
    r.grad_map = gm;
    r.theta = th_val;
    notify("AAS", t, sigma, ok);

    if (!ok) {
      record(std::move(r));
      sigma *= cfg_.gamma1;
      warm = xb;
      continue;
    }

    accumulate(aux, xb, f_new, v);
    Escalation esc;
    try {
      esc = tau_escalation(aux, f_new, cfg_.gamma3, cfg_.strict_listing_tau);
    } catch (const EscalationFailure& e) {
      record(std::move(r));
      trace_.warnings.emplace_back(e.what());
      return finish(best_x, Status::EscalationFail, e.what());
    }
    aux.advance();
    const int jj = aux.j;
    y = ((jj + 1.0) / (jj + p + 2.0)) * xb + ((p + 1.0) / (jj + p + 2.0)) * esc.min.z;
    r.tau = aux.tau;
    r.escalations = esc.escalations;
    record(std::move(r));

    ++successes;
    sigma = std::max(cfg_.sigma_min, sigma / cfg_.gamma1);
    warm.reset();
    if (f_new < best_f) {
      best_f = f_new;
      best_x = xb;
    }
    if (gm <= cfg_.stop.grad_map_tol) {
      return finish(xb, Status::Converged);
    }
    if (cfg_.stop.target_gap && f_new - *cfg_.stop.fstar <= *cfg_.stop.target_gap) {
      return finish(xb, Status::Converged);
    }
    if (cfg_.hybrid.enabled && successes >= cfg_.hybrid.min_success) {
      const double rel = std::abs(f_new - last_f) / std::max(std::abs(last_f), 1e-12);
      if (rel <= cfg_.hybrid.rel_progress) {
        ArcParams ap;
        ap.sigma0 = sigma;
        ap.sigma_min = cfg_.sigma_min;
        ap.gamma1 = cfg_.gamma1;
        ap.kappa_theta = cfg_.kappa_theta;
        ap.grad_tol = cfg_.hybrid.arc_grad_tol;
        ap.max_iters = cfg_.hybrid.arc_max_iters;
        ap.lanczos = cfg_.lanczos;
        return detail::run_arc(problem_, xb, ap, "ARC-hybrid", std::move(trace_), start_, total_);
      }
    }
    last_f = f_new;
  }
  return finish(best_x, Status::IterCap);
}

}  // namespace

SasResult sas(const CompositeProblem& problem, const Vector& x0, const UaaConfig& config) {
  config.validate();
  Engine engine(problem, config, Clock::now(), {});
  return engine.run_sas(x0);
}

Solution aas(const CompositeProblem& problem, const Vector& xbar0, double sigma_in,
             const UaaConfig& config, RunTrace prefix) {
  config.validate();
  Engine engine(problem, config, Clock::now(), std::move(prefix));
  return engine.run_aas(xbar0, std::max(sigma_in, config.sigma_min));
}

Solution uaa(const CompositeProblem& problem, const Vector& x0, const UaaConfig& config) {
  config.validate();
  if (x0.size() != problem.dimension()) throw ConfigError("uaa: start dimension mismatch");
  const auto start = Clock::now();
  SasResult phase1 = Engine(problem, config, start, {}).run_sas(x0);
  if (!phase1.succeeded) {
    Solution s;
    s.x = phase1.x;
    s.F = problem.objective(s.x);
    s.status = phase1.status;
    s.trace = std::move(phase1.trace);
    return s;
  }
  Engine engine(problem, config, start, std::move(phase1.trace));
  return engine.run_aas(phase1.x, phase1.sigma);
}

Solution aarc_hybrid(const CompositeProblem& problem, const Vector& x0, UaaConfig config) {
  if (problem.has_nonsmooth()) throw ConfigError("aarc: smooth problems only");
  config.hybrid.enabled = true;
  return uaa(problem, x0, config);
}

}  // namespace uaa
