#pragma once

#include "uaa/types.hpp"

namespace uaa {

// Estimating-sequence model psi_j(z, tau) = l_j(z) + tau R(z) with
//   l_j(z) = a + g^T z,  R(z) = ||z - x0||^(p+1) / (2(p+1)).
struct AuxModel {
  Vector x0;
  double a = 0.0;
  Vector g;
  double tau = 1.0;
  int p = 1;
  int j = 0;
  // prod_{l=2}^{p+1} (j+l) / p!   and   prod_{l=1}^{p+1} (j+l) / (p+1)!
  double coef = 1.0;
  double target = 1.0;

  double reg(const Vector& z) const;
  double value(const Vector& z, double tau_eval) const;
  double value(const Vector& z) const { return value(z, tau); }
  Vector gradient(const Vector& z, double tau_eval) const;

  // Target for the next index, target(j+1).
  double next_target() const;
  // Moves j to j+1 and updates coef/target through their ratios. Throws
  // DomainError past j = 1e6.
  void advance();
};

// Direct products, used to cross-check the incremental updates.
double aux_coef(int j, int p);
double aux_target(int j, int p);

AuxModel init_aux(const Vector& x0, double f0, double tau0, int p);

// a += coef(j) (F - xbar^T v), g += coef(j) v, with v = grad f(xbar) + xi.
void accumulate(AuxModel& aux, const Vector& xbar, double f_value, const Vector& v);

struct AuxMin {
  Vector z;
  double value = 0.0;
};

AuxMin minimize_aux(const AuxModel& aux, double tau);

struct Escalation {
  double tau = 0.0;
  AuxMin min;
  int escalations = 0;
};

// Smallest k >= 0 with minimize_aux(aux, gamma3^k tau).value >= target(j+1) F,
// checking the current tau first. With strict_listing the first multiplication
// happens before any check. Updates aux.tau. Throws EscalationFailure past
// max_escalations.
Escalation tau_escalation(AuxModel& aux, double f_next, double gamma3, bool strict_listing = false,
                          int max_escalations = 200);

}  // namespace uaa
