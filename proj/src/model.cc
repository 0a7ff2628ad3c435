#include "uaa/model.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "uaa/errors.hpp"

namespace uaa {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double factorial(int k) {
  double out = 1.0;
  for (int i = 2; i <= k; ++i) {
    out *= i;
  }
  return out;
}

Matrix materialize(const LinearOperator& op, int d) {
  Matrix m(d, d);
  for (int j = 0; j < d; ++j) {
    m.col(j) = op(Vector::Unit(d, j));
  }
  return 0.5 * (m + m.transpose());
}

}  // namespace

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::FirstOrder:
      return "first-order";
    case ModelVariant::ExactHessian:
      return "exact-hessian";
    case ModelVariant::InexactHessian:
      return "inexact-hessian";
    case ModelVariant::TaylorP:
      return "taylor";
  }
  return "unknown";
}

EffectiveModel build_model(OraclePtr oracle, const Vector& x, ModelVariant variant, int p,
                           std::optional<FdParams> fd_params) {
  if (!oracle) {
    throw ConfigError("build_model: null oracle");
  }
  if (x.size() != oracle->dimension()) {
    throw ConfigError("build_model: anchor dimension mismatch");
  }
  switch (variant) {
    case ModelVariant::FirstOrder:
      if (p != 1) throw ConfigError("first-order model requires p = 1");
      break;
    case ModelVariant::ExactHessian:
      if (p != 2) throw ConfigError("exact Hessian model requires p = 2");
      break;
    case ModelVariant::InexactHessian:
      if (p != 2) throw ConfigError("inexact Hessian model requires p = 2");
      if (!fd_params) throw ConfigError("inexact Hessian model requires (h, kappa_c)");
      break;
    case ModelVariant::TaylorP:
      if (p < 1) throw ConfigError("Taylor model requires p >= 1");
      if (p >= 3 && (!oracle->has_third_order() || oracle->max_order() < p)) {
        throw ConfigError("oracle does not provide derivatives up to order " + std::to_string(p));
      }
      break;
  }
  if (variant == ModelVariant::InexactHessian) {
    Matrix h = inexact_hessian(*oracle, x, fd_params->h, fd_params->kappa_c);
    return model_with_hessian(std::move(oracle), x, std::move(h), fd_params->h);
  }
  EffectiveModel m;
  m.anchor_ = x;
  m.order_ = p;
  m.variant_ = variant;
  m.f_anchor_ = oracle->value(x);
  m.g_anchor_ = oracle->gradient(x);
  m.oracle_ = std::move(oracle);
  return m;
}

EffectiveModel model_with_hessian(OraclePtr oracle, const Vector& x, Matrix h_matrix, double h) {
  if (h_matrix.rows() != x.size() || h_matrix.cols() != x.size()) {
    throw ConfigError("model_with_hessian: matrix dimension mismatch");
  }
  EffectiveModel m;
  m.anchor_ = x;
  m.order_ = 2;
  m.variant_ = ModelVariant::InexactHessian;
  m.f_anchor_ = oracle->value(x);
  m.g_anchor_ = oracle->gradient(x);
  m.h_matrix_ = std::move(h_matrix);
  m.fd_step_ = h;
  m.oracle_ = std::move(oracle);
  return m;
}

double EffectiveModel::value(const Vector& y) const {
  const Vector s = y - anchor_;
  switch (variant_) {
    case ModelVariant::FirstOrder:
      return f_anchor_ + g_anchor_.dot(s);
    case ModelVariant::ExactHessian:
      return f_anchor_ + g_anchor_.dot(s) + 0.5 * s.dot(oracle_->hessian_vec(anchor_, s));
    case ModelVariant::InexactHessian:
      return f_anchor_ + g_anchor_.dot(s) + 0.5 * s.dot(*h_matrix_ * s);
    case ModelVariant::TaylorP: {
      double v = f_anchor_ + g_anchor_.dot(s);
      for (int k = 2; k <= order_; ++k) {
        v += s.dot(oracle_->tensor_contract(anchor_, s, k)) / factorial(k);
      }
      return v;
    }
  }
  return 0.0;
}

Vector EffectiveModel::grad(const Vector& y) const {
  const Vector s = y - anchor_;
  switch (variant_) {
    case ModelVariant::FirstOrder:
      return g_anchor_;
    case ModelVariant::ExactHessian:
      return g_anchor_ + oracle_->hessian_vec(anchor_, s);
    case ModelVariant::InexactHessian:
      return g_anchor_ + *h_matrix_ * s;
    case ModelVariant::TaylorP: {
      Vector g = g_anchor_;
      for (int k = 2; k <= order_; ++k) {
        g += oracle_->tensor_contract(anchor_, s, k) / factorial(k - 1);
      }
      return g;
    }
  }
  return g_anchor_;
}

Vector EffectiveModel::curvature_times(const Vector& v) const {
  if (order_ < 2) {
    return Vector::Zero(v.size());
  }
  if (h_matrix_) {
    return *h_matrix_ * v;
  }
  return oracle_->hessian_vec(anchor_, v);
}

LinearOperator EffectiveModel::curvature_operator() const {
  // Copies keep the operator valid independently of this model's lifetime.
  if (order_ < 2) {
    return [](const Vector& v) -> Vector { return Vector::Zero(v.size()); };
  }
  if (h_matrix_) {
    return [h = *h_matrix_](const Vector& v) -> Vector { return h * v; };
  }
  return [oracle = oracle_, x = anchor_](const Vector& v) -> Vector {
    return oracle->hessian_vec(x, v);
  };
}

Matrix EffectiveModel::curvature_matrix() const {
  const int d = dimension();
  if (order_ < 2) {
    return Matrix::Zero(d, d);
  }
  if (h_matrix_) {
    return *h_matrix_;
  }
  if (oracle_->has_full_hessian()) {
    return oracle_->full_hessian(anchor_);
  }
  return materialize(curvature_operator(), d);
}

Matrix EffectiveModel::hessian_at(const Vector& y) const {
  Matrix h = curvature_matrix();
  if (order_ < 3) {
    return h;
  }
  const int d = dimension();
  const Vector s = y - anchor_;
  for (int k = 3; k <= order_; ++k) {
    // Column i of the derivative of nabla^k f[s]^(k-1) in s, by central
    // differences; exact for k = 3 because the contraction is quadratic in s.
    const double delta = k == 3 ? 1.0 : std::cbrt(kEps) * (1.0 + s.norm());
    Matrix jac(d, d);
    for (int i = 0; i < d; ++i) {
      const Vector e = delta * Vector::Unit(d, i);
      jac.col(i) = (oracle_->tensor_contract(anchor_, s + e, k) -
                    oracle_->tensor_contract(anchor_, s - e, k)) /
                   (2.0 * delta);
    }
    h += 0.5 * (jac + jac.transpose()) / factorial(k - 1);
  }
  return h;
}

Matrix inexact_hessian(const SmoothOracle& oracle, const Vector& x, double h, double kappa_c) {
  if (!(h > 0.0)) {
    throw DomainError("inexact_hessian: h must be > 0");
  }
  if (!(kappa_c >= 0.0)) {
    throw DomainError("inexact_hessian: kappa_c must be >= 0");
  }
  const int d = static_cast<int>(x.size());
  const Vector g0 = oracle.gradient(x);
  Matrix a(d, d);
  Vector xp = x;
  for (int j = 0; j < d; ++j) {
    xp[j] = x[j] + h;
    a.col(j) = (oracle.gradient(xp) - g0) / h;
    xp[j] = x[j];
  }
  Matrix out = 0.5 * (a + a.transpose());
  out.diagonal().array() += kappa_c * h;
  return out;
}

CoupledHessian step_coupled_hessian(const SmoothOracle& oracle, const Vector& x, double kappa_hs,
                                    double kappa_c,
                                    const std::function<Vector(const Matrix&)>& solve, double h0,
                                    int max_iters) {
  if (!(kappa_hs > 0.0)) {
    throw DomainError("step coupling: kappa_hs must be > 0");
  }
  double h = h0 > 0.0 && std::isfinite(h0) ? h0 : 1.0;
  CoupledHessian out;
  for (int attempt = 1; attempt <= max_iters; ++attempt) {
    out.h = h;
    out.hessian = inexact_hessian(oracle, x, h, kappa_c);
    out.step = solve(out.hessian);
    out.attempts = attempt;
    const double sn = out.step.norm();
    if (sn == 0.0) {
      out.status = CoupledHessian::Status::ZeroStep;
      return out;
    }
    if (h <= kappa_hs * sn) {
      out.status = CoupledHessian::Status::Coupled;
      return out;
    }
    h = std::min(h, kappa_hs * sn) / 2.0;
  }
  throw CouplingFailure(out.h, out.step);
}

RegularizedModel::RegularizedModel(const EffectiveModel& base, double sigma,
                                   const CompositeProblem& problem)
    : base_(&base), sigma_(sigma), problem_(&problem) {
  if (!(sigma >= 0.0)) {
    throw DomainError("regularized model: sigma must be >= 0");
  }
}

double RegularizedModel::smooth_value(const Vector& y) const {
  const int p = order();
  const double sn = (y - anchor()).norm();
  return base_->value(y) + sigma_ * std::pow(sn, p + 1) / (p + 1);
}

Vector RegularizedModel::smooth_grad(const Vector& y) const {
  const int p = order();
  const Vector s = y - anchor();
  return base_->grad(y) + sigma_ * std::pow(s.norm(), p - 1) * s;
}

double RegularizedModel::value(const Vector& y) const {
  return smooth_value(y) + problem_->r_eval(y);
}

double RegularizedModel::anchor_value() const {
  return base_->anchor_value() + problem_->r_eval(anchor());
}

ResidualCheck residual_criterion(const RegularizedModel& model, const Vector& xbar,
                                 const Vector& xi, double kappa_theta) {
  const int p = model.order();
  const Vector s = xbar - model.anchor();
  const double sn = s.norm();
  const Vector gm = model.base().grad(xbar);
  const Vector reg = model.sigma() * std::pow(sn, p - 1) * s;

  ResidualCheck out;
  out.residual = (gm + reg + xi).norm();
  out.bound = kappa_theta * std::pow(sn, p);
  // s is formed as a difference of points, so its rounding error scales with
  // their norms rather than with ||s||.
  const double spread = model.sigma() * std::pow(sn, p - 1) * (xbar.norm() + model.anchor().norm());
  const double slack = 8.0 * kEps * (gm.norm() + reg.norm() + xi.norm() + spread);

  const double m_anchor = model.anchor_value();
  const double m_bar = model.value(xbar);
  out.decrease = m_bar <= m_anchor + 4.0 * kEps * std::abs(m_anchor);
  out.satisfied = out.decrease && out.residual <= out.bound + slack;
  return out;
}

bool pointwise_convexity_check(const RegularizedModel& model, const Vector& y, double rel_tol) {
  const int p = model.order();
  if (p <= 2) {
    return true;
  }
  const Vector s = y - model.anchor();
  const double sn = s.norm();
  Matrix h = model.base().hessian_at(y);
  h.diagonal().array() += model.sigma() * std::pow(sn, p - 1);
  if (sn > 0.0) {
    h += model.sigma() * (p - 1) * std::pow(sn, p - 3) * (s * s.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  return lmin >= -rel_tol * (1.0 + norm);
}

}  // namespace uaa
