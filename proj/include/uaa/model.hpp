#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "uaa/problem.hpp"
#include "uaa/types.hpp"

namespace uaa {

enum class ModelVariant { FirstOrder, ExactHessian, InexactHessian, TaylorP };

std::string_view to_string(ModelVariant v);

// Finite-difference Hessian parameters: step h and the diagonal shift weight
// kappa_c (H = sym(A) + kappa_c h I).
struct FdParams {
  double h = 1.0;
  double kappa_c = 1.0;
};

// Anchored approximation mbar(y; x) of f.
//
//   FirstOrder:     f(x) + g^T s
//   ExactHessian:   + 0.5 s^T hess f(x) s, applied through Hessian-vector products
//   InexactHessian: + 0.5 s^T H s with H a stored symmetric matrix
//   TaylorP:        sum_{k<=p} nabla^k f(x)[s]^k / k!
//
// with s = y - x. Immutable after construction.
class EffectiveModel {
 public:
  const Vector& anchor() const { return anchor_; }
  int order() const { return order_; }
  ModelVariant variant() const { return variant_; }
  double anchor_value() const { return f_anchor_; }
  const Vector& anchor_gradient() const { return g_anchor_; }
  int dimension() const { return static_cast<int>(anchor_.size()); }

  double value(const Vector& y) const;
  Vector grad(const Vector& y) const;

  // Curvature operator at the anchor, v -> B v, where B is the second-order
  // coefficient of the model (zero for FirstOrder).
  Vector curvature_times(const Vector& v) const;
  LinearOperator curvature_operator() const;
  // Materialized curvature B (d x d).
  Matrix curvature_matrix() const;

  // hess_y mbar(y; x). Equal to curvature_matrix() for p <= 2.
  Matrix hessian_at(const Vector& y) const;

  // Stored matrix and step of the finite-difference variant.
  const std::optional<Matrix>& inexact_hessian() const { return h_matrix_; }
  std::optional<double> fd_step() const { return fd_step_; }

  const SmoothOracle& oracle() const { return *oracle_; }

 private:
  friend EffectiveModel build_model(OraclePtr, const Vector&, ModelVariant, int,
                                    std::optional<FdParams>);
  friend EffectiveModel model_with_hessian(OraclePtr, const Vector&, Matrix, double);

  EffectiveModel() = default;

  OraclePtr oracle_;
  Vector anchor_;
  int order_ = 1;
  ModelVariant variant_ = ModelVariant::FirstOrder;
  double f_anchor_ = 0.0;
  Vector g_anchor_;
  std::optional<Matrix> h_matrix_;
  std::optional<double> fd_step_;
};

// Throws ConfigError when the variant needs a capability the oracle lacks or
// when fd_params is missing for InexactHessian.
EffectiveModel build_model(OraclePtr oracle, const Vector& x, ModelVariant variant, int p,
                           std::optional<FdParams> fd_params = std::nullopt);

// InexactHessian model around a precomputed symmetric H (built with step h).
EffectiveModel model_with_hessian(OraclePtr oracle, const Vector& x, Matrix h_matrix, double h);

// Forward-difference Hessian surrogate from d + 1 gradient evaluations,
// symmetrized and shifted by kappa_c h I.
Matrix inexact_hessian(const SmoothOracle& oracle, const Vector& x, double h, double kappa_c);

struct CoupledHessian {
  enum class Status { Coupled, ZeroStep };
  Status status = Status::Coupled;
  double h = 0.0;
  Matrix hessian;
  Vector step;
  int attempts = 0;
};

// Searches for a finite-difference step h with h <= kappa_hs ||s||, where s is
// the trial step returned by `solve` for the surrogate built with h. Starting
// from h0, repeats h <- min(h, kappa_hs ||s||) / 2 while h > kappa_hs ||s||.
// A zero step ends the search with status ZeroStep. Throws CouplingFailure
// after max_iters attempts.
CoupledHessian step_coupled_hessian(const SmoothOracle& oracle, const Vector& x, double kappa_hs,
                                    double kappa_c, const std::function<Vector(const Matrix&)>& solve,
                                    double h0 = 1.0, int max_iters = 30);

// m(y; x, sigma) = mbar(y; x) + sigma ||y - x||^(p+1) / (p+1) + r(y)
// Holds non-owning references; both referents must outlive it.
class RegularizedModel {
 public:
  RegularizedModel(const EffectiveModel& base, double sigma, const CompositeProblem& problem);

  const EffectiveModel& base() const { return *base_; }
  const CompositeProblem& problem() const { return *problem_; }
  double sigma() const { return sigma_; }
  int order() const { return base_->order(); }
  const Vector& anchor() const { return base_->anchor(); }

  // Smooth part mbar + sigma ||s||^(p+1)/(p+1) and its gradient.
  double smooth_value(const Vector& y) const;
  Vector smooth_grad(const Vector& y) const;
  double value(const Vector& y) const;
  // m(x; x, sigma) = F(x)
  double anchor_value() const;

 private:
  const EffectiveModel* base_;
  double sigma_;
  const CompositeProblem* problem_;
};

struct ResidualCheck {
  bool satisfied = false;
  double residual = 0.0;
  double bound = 0.0;
  bool decrease = false;  // m(xbar) <= m(x)
};

// Inexactness test for an approximate minimizer xbar of m with xi in dr(xbar):
//   ||grad mbar(xbar) + sigma ||s||^(p-1) s + xi|| <= kappa_theta ||s||^p
//   and m(xbar) <= m(x).
// The norm comparison allows a rounding slack of a few ulps of the summed terms.
ResidualCheck residual_criterion(const RegularizedModel& model, const Vector& xbar,
                                 const Vector& xi, double kappa_theta);

// For p >= 3: whether the smooth part of m is locally convex at y, i.e.
// lambda_min(hess_y[mbar + sigma ||y - x||^(p+1)/(p+1)]) >= -eps_psd with
// eps_psd = rel_tol (1 + ||hess||). Always true for p <= 2.
bool pointwise_convexity_check(const RegularizedModel& model, const Vector& y,
                               double rel_tol = 1e-10);

}  // namespace uaa
