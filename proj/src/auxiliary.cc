#include "uaa/auxiliary.hpp"

#include <cmath>

#include "uaa/errors.hpp"

namespace uaa {

namespace {
constexpr int kMaxIndex = 1000000;
}

double AuxModel::reg(const Vector& z) const {
  return std::pow((z - x0).norm(), p + 1) / (2.0 * (p + 1));
}

double AuxModel::value(const Vector& z, double tau_eval) const {
  return a + g.dot(z) + tau_eval * reg(z);
}

Vector AuxModel::gradient(const Vector& z, double tau_eval) const {
  const Vector dz = z - x0;
  return g + 0.5 * tau_eval * std::pow(dz.norm(), p - 1) * dz;
}

double AuxModel::next_target() const {
  return target * (j + p + 2.0) / (j + 1.0);
}

void AuxModel::advance() {
  if (j >= kMaxIndex) {
    throw DomainError("auxiliary model: success index beyond 1e6");
  }
  target = next_target();
  coef *= (j + p + 2.0) / (j + 2.0);
  ++j;
}

double aux_coef(int j, int p) {
  double out = 1.0;
  for (int l = 2; l <= p + 1; ++l) out *= (j + l);
  for (int l = 2; l <= p; ++l) out /= l;
  return out;
}

double aux_target(int j, int p) {
  double out = 1.0;
  for (int l = 1; l <= p + 1; ++l) out *= (j + l);
  for (int l = 2; l <= p + 1; ++l) out /= l;
  return out;
}

AuxModel init_aux(const Vector& x0, double f0, double tau0, int p) {
  if (!(tau0 > 0.0)) {
    throw DomainError("init_aux: tau0 must be > 0");
  }
  if (p < 1) {
    throw DomainError("init_aux: p must be >= 1");
  }
  AuxModel aux;
  aux.x0 = x0;
  aux.a = f0;
  aux.g = Vector::Zero(x0.size());
  aux.tau = tau0;
  aux.p = p;
  aux.j = 0;
  aux.coef = aux_coef(0, p);
  aux.target = aux_target(0, p);
  return aux;
}

void accumulate(AuxModel& aux, const Vector& xbar, double f_value, const Vector& v) {
  aux.a += aux.coef * (f_value - xbar.dot(v));
  aux.g += aux.coef * v;
}

AuxMin minimize_aux(const AuxModel& aux, double tau) {
  if (!(tau > 0.0)) {
    throw DomainError("minimize_aux: tau must be > 0");
  }
  AuxMin out;
  const double gn = aux.g.norm();
  if (gn == 0.0) {
    out.z = aux.x0;
  } else {
    const double t = std::pow(2.0 * gn / tau, 1.0 / aux.p);
    out.z = aux.x0 - (t / gn) * aux.g;
  }
  out.value = aux.value(out.z, tau);
  return out;
}

Escalation tau_escalation(AuxModel& aux, double f_next, double gamma3, bool strict_listing,
                          int max_escalations) {
  if (!(gamma3 > 1.0)) {
    throw DomainError("tau_escalation: gamma3 must be > 1");
  }
  const double bar = aux.next_target() * f_next;
  Escalation out;
  out.tau = aux.tau;
  if (strict_listing) {
    out.tau *= gamma3;
    out.escalations = 1;
  }
  for (;;) {
    out.min = minimize_aux(aux, out.tau);
    if (out.min.value >= bar) break;
    if (out.escalations >= max_escalations) {
      throw EscalationFailure(out.escalations, out.tau);
    }
    out.tau *= gamma3;
    ++out.escalations;
  }
  aux.tau = out.tau;
  return out;
}

}  // namespace uaa
