#include "uaa/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "uaa/errors.hpp"

namespace uaa {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct CubicMin {
  Vector s;
  bool hard_case = false;
  int iters = 0;
};

// Global minimizer of g^T s + s^T H s / 2 + sigma ||s||^3 / 3.
CubicMin cubic_global_min(const Vector& g, const Matrix& h, double sigma) {
  const int d = static_cast<int>(g.size());
  CubicMin out;
  out.s = Vector::Zero(d);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()));
  if (es.info() != Eigen::Success) {
    throw NumericalError("cubic solver: eigendecomposition failed");
  }
  const Vector& lam = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  const Vector gt = v.transpose() * g;
  const double gnorm = g.norm();
  const double lmin = lam[0];
  const double hnorm = std::max(std::abs(lam[0]), std::abs(lam[d - 1]));
  const double low = std::max(0.0, -lmin);

  if (gnorm == 0.0 && lmin >= 0.0) {
    return out;
  }

  // Components orthogonal to the shifted null space; the rest count only when
  // g has weight there.
  const double deficient = 1e-14 * (1.0 + hnorm);
  auto snorm = [&](double l) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const double den = lam[i] + l;
      if (std::abs(den) <= deficient * 1e-3 && l == low) {
        if (std::abs(gt[i]) > kEps * gnorm) return std::numeric_limits<double>::infinity();
        continue;
      }
      acc += gt[i] * gt[i] / (den * den);
    }
    return std::sqrt(acc);
  };
  auto phi = [&](double l) { return snorm(l) - l / sigma; };

  double lambda = 0.0;
  const double phi_low = phi(low);
  if (!(phi_low > 0.0)) {
    // Hard case: g has no weight on the bottom eigenspace and the secular root
    // lies at its boundary. Complete the step along that eigenspace.
    out.hard_case = true;
    lambda = low;
    Vector st = Vector::Zero(d);
    for (int i = 0; i < d; ++i) {
      const double den = lam[i] + lambda;
      if (std::abs(den) > deficient) st[i] = -gt[i] / den;
    }
    const double target = lambda / sigma;
    const double have = st.norm();
    if (target > have) {
      st[0] += std::sqrt(target * target - have * have);
    }
    out.s = v * st;
    return out;
  }

  // The root satisfies lambda (lmin + lambda) <= sigma ||g||.
  double lo = low;
  double hi = std::max(low, 0.5 * (-lmin + std::sqrt(lmin * lmin + 4.0 * sigma * gnorm)));
  hi = hi * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  while (phi(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("cubic solver: no secular bracket");
  }

  lambda = hi;
  for (int it = 0; it < 500; ++it) {
    out.iters = it + 1;
    double n2 = 0.0, n3 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double den = lam[i] + lambda;
      n2 += gt[i] * gt[i] / (den * den);
      n3 += gt[i] * gt[i] / (den * den * den);
    }
    const double n = std::sqrt(n2);
    const double f = n - lambda / sigma;
    if (f > 0.0) lo = lambda; else hi = lambda;
    if (std::abs(f) <= 4.0 * kEps * (n + lambda / sigma) || hi - lo <= 4.0 * kEps * hi) break;
    // Newton on 1/||s(lambda)|| - sigma/lambda, which is nearly linear.
    const double psi = 1.0 / n - sigma / lambda;
    const double dpsi = n3 / (n2 * n) + sigma / (lambda * lambda);
    double next = lambda - psi / dpsi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    lambda = next;
  }
  Vector st(d);
  for (int i = 0; i < d; ++i) st[i] = -gt[i] / (lam[i] + lambda);
  out.s = v * st;
  return out;
}

double am1_value(const Vector& g, const Vector& s, const Vector& hs, double sigma) {
  const double sn = s.norm();
  return s.dot(g) + s.dot(hs) + sigma * sn * sn * sn;
}

}  // namespace

SubsolveResult solve_first_order(const Vector& x, const Vector& g, double sigma,
                                 const CompositeProblem& problem) {
  if (!(sigma > 0.0)) {
    throw DomainError("solve_first_order: sigma must be > 0");
  }
  SubsolveResult out;
  out.method = "prox";
  const Vector v = x - g / sigma;
  out.xbar = problem.prox(v, 1.0 / sigma);
  out.xi = problem.has_nonsmooth() ? subgradient_from_prox(v, out.xbar, sigma)
                                   : Vector::Zero(x.size());
  out.inner_iters = 1;
  return out;
}

SubsolveResult solve_cubic_direct(const Vector& x, const Vector& g, const Matrix& h,
                                  double sigma) {
  if (!(sigma > 0.0)) {
    throw DomainError("solve_cubic_direct: sigma must be > 0");
  }
  if (h.rows() != g.size() || h.cols() != g.size() || x.size() != g.size()) {
    throw ConfigError("solve_cubic_direct: dimension mismatch");
  }
  const CubicMin cm = cubic_global_min(g, h, sigma);
  SubsolveResult out;
  out.method = "direct";
  out.xbar = x + cm.s;
  out.xi = Vector::Zero(x.size());
  out.hard_case = cm.hard_case;
  out.inner_iters = cm.iters;
  const double sn = cm.s.norm();
  const Vector hs = h * cm.s;
  out.residual = (g + hs + sigma * sn * cm.s).norm();
  out.bound = 1e-10 * (1.0 + g.norm() + hs.norm() + sigma * sn * sn);
  out.status = out.residual <= out.bound ? SubsolveStatus::Success : SubsolveStatus::NotConverged;
  return out;
}

SubsolveResult solve_cubic_lanczos(const Vector& x, const Vector& g, const LinearOperator& hvp,
                                   double sigma, double kappa_theta,
                                   const LanczosOptions& options) {
  if (!(sigma > 0.0)) {
    throw DomainError("solve_cubic_lanczos: sigma must be > 0");
  }
  const int d = static_cast<int>(g.size());
  SubsolveResult out;
  out.method = "lanczos";
  out.xi = Vector::Zero(d);
  const double gnorm = g.norm();
  if (gnorm == 0.0) {
    out.xbar = x;
    return out;
  }

  const int kmax = std::max(1, std::min(d, options.max_dim));
  const int every = std::max(1, options.check_every);
  Matrix q(d, kmax);
  Vector alpha(kmax), beta(kmax);
  double scale = 0.0;
  int hvps = 0;
  q.col(0) = g / gnorm;

  Vector best_s = Vector::Zero(d);
  double best_res = std::numeric_limits<double>::infinity();

  for (int k = 0; k < kmax; ++k) {
    Vector w = hvp(q.col(k));
    ++hvps;
    alpha[k] = q.col(k).dot(w);
    w -= alpha[k] * q.col(k);
    if (k > 0) w -= beta[k - 1] * q.col(k - 1);
    for (int pass = 0; pass < 2; ++pass) {
      w -= q.leftCols(k + 1) * (q.leftCols(k + 1).transpose() * w);
    }
    beta[k] = w.norm();
    scale = std::max({scale, std::abs(alpha[k]), beta[k]});
    const int dim = k + 1;
    const bool breakdown = beta[k] <= 1e-12 * std::max(scale, 1e-300);
    const bool at_cap = dim == kmax;
    const bool check = breakdown || at_cap || (!options.full_dimension && dim % every == 0);

    if (check) {
      Matrix t = Matrix::Zero(dim, dim);
      for (int i = 0; i < dim; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < dim) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Vector gt = Vector::Zero(dim);
      gt[0] = gnorm;
      const CubicMin cm = cubic_global_min(gt, t, sigma);
      const Vector s = q.leftCols(dim) * cm.s;
      const Vector hs = hvp(s);
      ++hvps;
      const double sn = s.norm();
      const Vector grad = g + hs + sigma * sn * s;
      const double res = grad.norm();
      const double bound = kappa_theta * sn * sn;
      const double slack = 8.0 * kEps * (gnorm + hs.norm() + sigma * sn * sn +
                                          sigma * sn * (x.norm() + (x + s).norm()));
      const double decrease = g.dot(s) + 0.5 * s.dot(hs) + sigma * sn * sn * sn / 3.0;
      const double am1 = std::abs(am1_value(g, s, hs, sigma));
      const bool ok = res <= bound + slack && decrease <= 0.0 &&
                      am1 <= options.am1_tol * (1.0 + std::abs(s.dot(g)));
      if (res < best_res) {
        best_res = res;
        best_s = s;
        out.residual = res;
        out.bound = bound;
      }
      if (ok) {
        out.xbar = x + s;
        out.residual = res;
        out.bound = bound;
        out.inner_iters = hvps;
        out.status = SubsolveStatus::Success;
        return out;
      }
      if (breakdown && !at_cap) {
        // Invariant subspace found but the reduced solution is not accurate
        // enough; solve on the full matrix instead.
        Matrix h(d, d);
        for (int j = 0; j < d; ++j) h.col(j) = hvp(Vector::Unit(d, j));
        hvps += d;
        SubsolveResult direct = solve_cubic_direct(x, g, 0.5 * (h + h.transpose()), sigma);
        direct.method = "lanczos+direct";
        direct.inner_iters += hvps;
        const double dsn = (direct.xbar - x).norm();
        direct.bound = std::max(direct.bound, kappa_theta * dsn * dsn);
        return direct;
      }
    }
    if (breakdown) break;
    if (k + 1 < kmax) q.col(k + 1) = w / beta[k];
  }

  out.xbar = x + best_s;
  out.inner_iters = hvps;
  out.status = SubsolveStatus::NotConverged;
  return out;
}

SubsolveResult solve_composite_apgd(const RegularizedModel& model, double kappa_theta,
                                    const ApgdOptions& options) {
  if (!(options.alpha0 > 0.0)) {
    throw DomainError("solve_composite_apgd: alpha0 must be > 0");
  }
  const CompositeProblem& problem = model.problem();
  const Vector& anchor = model.anchor();
  const int d = static_cast<int>(anchor.size());

  auto composite = [&](const Vector& y) {
    const double v = model.value(y);
    if (!std::isfinite(v)) throw NumericalError("APGD: non-finite model value");
    return v;
  };

  Vector x_prev = options.warm_start && options.warm_start->size() == d ? *options.warm_start
                                                                        : anchor;
  double f_prev = composite(x_prev);
  if (f_prev > model.anchor_value()) {
    x_prev = anchor;
    f_prev = composite(x_prev);
  }
  Vector y = x_prev;
  double t = 1.0;
  double alpha = options.alpha0;

  SubsolveResult out;
  out.method = "apgd";
  out.status = SubsolveStatus::NotConverged;
  out.xbar = x_prev;
  out.xi = Vector::Zero(d);
  double best_value = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= options.max_iters; ++it) {
    const Vector gy = model.smooth_grad(y);
    const double hy = model.smooth_value(y);
    if (!std::isfinite(hy) || !gy.allFinite()) throw NumericalError("APGD: non-finite gradient");

    Vector v, x_next;
    bool backtracked = false;
    for (int bt = 0;; ++bt) {
      v = y - gy / alpha;
      x_next = problem.prox(v, 1.0 / alpha);
      const Vector step = x_next - y;
      const double h_next = model.smooth_value(x_next);
      const double upper = hy + gy.dot(step) + 0.5 * alpha * step.squaredNorm();
      if (h_next <= upper + 8.0 * kEps * std::abs(hy)) break;
      alpha *= 2.0;
      backtracked = true;
      if (bt > 200 || !std::isfinite(alpha)) throw NumericalError("APGD: step size diverged");
    }
    const Vector xi = problem.has_nonsmooth() ? subgradient_from_prox(v, x_next, alpha)
                                              : Vector::Zero(d);
    const double f_next = composite(x_next);

    const ResidualCheck rc = residual_criterion(model, x_next, xi, kappa_theta);
    if (rc.decrease && f_next < best_value) {
      best_value = f_next;
      out.xbar = x_next;
      out.xi = xi;
      out.residual = rc.residual;
      out.bound = rc.bound;
    }
    if (rc.satisfied) {
      out.xbar = x_next;
      out.xi = xi;
      out.residual = rc.residual;
      out.bound = rc.bound;
      out.inner_iters = it;
      out.status = SubsolveStatus::Success;
      return out;
    }

    if (f_next > f_prev) {
      t = 1.0;
      y = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * (x_next - x_prev);
      t = t_next;
    }
    x_prev = x_next;
    f_prev = f_next;
    if (!backtracked) alpha *= 0.5;
  }
  out.inner_iters = options.max_iters;
  return out;
}

SubsolveResult solve_smooth_newton(const RegularizedModel& model, double kappa_theta,
                                   const NewtonOptions& options) {
  if (model.problem().has_nonsmooth()) {
    throw ConfigError("solve_smooth_newton: smooth models only");
  }
  const Vector& anchor = model.anchor();
  const int d = static_cast<int>(anchor.size());
  const int p = model.order();
  const double sigma = model.sigma();

  SubsolveResult out;
  out.method = "newton";
  out.status = SubsolveStatus::NotConverged;
  out.xi = Vector::Zero(d);
  const Vector zero = Vector::Zero(d);

  Vector y = anchor;
  double fy = model.smooth_value(y);
  if (options.warm_start && options.warm_start->size() == d) {
    const double fw = model.smooth_value(*options.warm_start);
    if (fw < fy) {
      y = *options.warm_start;
      fy = fw;
    }
  }
  out.xbar = y;

  for (int it = 1; it <= options.max_iters; ++it) {
    out.inner_iters = it;
    if (!std::isfinite(fy)) throw NumericalError("Newton: non-finite model value");
    const Vector g = model.smooth_grad(y);
    if (y != anchor) {
      const ResidualCheck rc = residual_criterion(model, y, zero, kappa_theta);
      out.xbar = y;
      out.residual = rc.residual;
      out.bound = rc.bound;
      if (rc.satisfied) {
        out.status = SubsolveStatus::Success;
        return out;
      }
    }
    const Vector s = y - anchor;
    const double sn = s.norm();
    Matrix h = model.base().hessian_at(y);
    h.diagonal().array() += sigma * std::pow(sn, p - 1);
    if (sn > 0.0) h += sigma * (p - 1) * std::pow(sn, p - 3) * (s * s.transpose());

    Vector dir;
    double shift = 0.0;
    const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    for (int tries = 0; tries < 60; ++tries) {
      Matrix hs = h;
      hs.diagonal().array() += shift;
      Eigen::LLT<Matrix> llt(hs);
      if (llt.info() == Eigen::Success) {
        dir = llt.solve(-g);
        if (dir.allFinite() && g.dot(dir) < 0.0) break;
      }
      dir.resize(0);
      shift = shift == 0.0 ? 1e-12 * scale : 10.0 * shift;
    }
    if (dir.size() == 0) break;

    const double slope = g.dot(dir);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector cand = y + t * dir;
      const double fc = model.smooth_value(cand);
      if (fc <= fy + 1e-4 * t * slope) {
        moved = cand != y;
        y = cand;
        fy = fc;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // No representable decrease is left.
      const ResidualCheck rc = residual_criterion(model, y, zero, kappa_theta);
      out.xbar = y;
      out.residual = rc.residual;
      out.bound = rc.bound;
      if (rc.satisfied) out.status = SubsolveStatus::Success;
      return out;
    }
  }
  const ResidualCheck rc = residual_criterion(model, y, zero, kappa_theta);
  out.xbar = y;
  out.residual = rc.residual;
  out.bound = rc.bound;
  if (rc.satisfied) out.status = SubsolveStatus::Success;
  return out;
}

}  // namespace uaa
