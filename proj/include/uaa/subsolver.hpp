#pragma once

#include <optional>
#include <string>

#include "uaa/model.hpp"
#include "uaa/problem.hpp"
#include "uaa/types.hpp"

namespace uaa {

enum class SubsolveStatus {
  Success,
  NotConverged,  // iteration or dimension cap reached; xbar is the best iterate
};

// Approximate minimizer xbar of m(.; x, sigma) with xi in dr(xbar).
struct SubsolveResult {
  Vector xbar;
  Vector xi;
  double residual = 0.0;
  double bound = 0.0;
  // Hessian-vector products for Lanczos (residual checks included), iterations otherwise.
  int inner_iters = 0;
  std::string method;
  SubsolveStatus status = SubsolveStatus::Success;
  bool hard_case = false;

  bool ok() const { return status == SubsolveStatus::Success; }
};

// Proximal step xbar = prox(x - g/sigma, 1/sigma). The residual is zero by
// construction and reported as such.
SubsolveResult solve_first_order(const Vector& x, const Vector& g, double sigma,
                                 const CompositeProblem& problem);

// Global minimizer of g^T s + s^T H s / 2 + sigma ||s||^3 / 3 through the
// eigendecomposition of H and a root find on lambda = sigma ||s(lambda)||.
SubsolveResult solve_cubic_direct(const Vector& x, const Vector& g, const Matrix& h, double sigma);

struct LanczosOptions {
  int max_dim = 100;
  int check_every = 5;
  // Skip the early exits and build the whole min(d, max_dim) subspace.
  bool full_dimension = false;
  double am1_tol = 1e-8;
};

// Cubic subproblem (p = 2, r = 0) restricted to growing Krylov subspaces of
// (H, g). Accepts once the inexactness test and the side identity
//   |s^T g + s^T H s + sigma ||s||^3| <= am1_tol (1 + |s^T g|)
// hold. On Krylov breakdown without acceptance, falls back to the direct solver
// on a materialized H.
SubsolveResult solve_cubic_lanczos(const Vector& x, const Vector& g, const LinearOperator& hvp,
                                   double sigma, double kappa_theta,
                                   const LanczosOptions& options = {});

struct ApgdOptions {
  double alpha0 = 1.0;
  int max_iters = 20000;
  std::optional<Vector> warm_start;
};

// Accelerated proximal gradient on m(.; x, sigma) with backtracking on the
// smooth part and momentum restart when the model value increases. Stops when
// residual_criterion passes at the latest prox point. Throws NumericalError on
// non-finite values.
SubsolveResult solve_composite_apgd(const RegularizedModel& model, double kappa_theta,
                                    const ApgdOptions& options = {});

struct NewtonOptions {
  int max_iters = 200;
  std::optional<Vector> warm_start;
};

// Damped Newton on the smooth model mbar + sigma ||s||^(p+1)/(p+1) (r = 0)
// using hess_y of the model, with a diagonal shift when the Hessian is not
// positive definite. Used for smooth models of order p >= 3.
SubsolveResult solve_smooth_newton(const RegularizedModel& model, double kappa_theta,
                                   const NewtonOptions& options = {});

}  // namespace uaa
