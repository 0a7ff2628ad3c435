#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "uaa/driver.hpp"
#include "uaa/errors.hpp"

namespace uaa {
namespace {

Vector randn(std::mt19937_64& rng, int d, double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

UaaConfig p2() {
  UaaConfig c;
  c.p = 2;
  c.variant = ModelVariant::ExactHessian;
  return c;
}

TEST(Config, RejectsInvalidConstants) {
  auto expect_bad = [](auto mutate) {
    UaaConfig c = p2();
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  expect_bad([](UaaConfig& c) { c.gamma2 = c.gamma1; });
  expect_bad([](UaaConfig& c) { c.gamma1 = 1.0; });
  expect_bad([](UaaConfig& c) { c.gamma3 = 1.0; });
  expect_bad([](UaaConfig& c) { c.sigma_min = 2 * c.sigma0; });
  expect_bad([](UaaConfig& c) { c.sigma_min = 0.0; });
  expect_bad([](UaaConfig& c) { c.eta = 0.0; });
  expect_bad([](UaaConfig& c) { c.tau0 = 0.0; });
  expect_bad([](UaaConfig& c) { c.p = 0; });
  expect_bad([](UaaConfig& c) { c.p = 1; });  // ExactHessian needs p = 2
  EXPECT_NO_THROW(p2().validate());
}

TEST(Sas, QuadraticSucceedsAtOnce) {
  const auto q = make_random_quadratic(6, 0.1, 1.0, 1);
  UaaConfig c = p2();
  c.sigma0 = 100.0;
  const auto r = sas(CompositeProblem(q), Vector::Ones(6), c);
  EXPECT_TRUE(r.succeeded);
  EXPECT_EQ(r.trace.records.size(), 1u);
  EXPECT_DOUBLE_EQ(r.sigma, 50.0);
  EXPECT_LT(q->value(r.x), q->value(Vector::Ones(6)));
}

TEST(Sas, OptimalStartConverges) {
  const auto q = make_random_quadratic(4, 0.1, 1.0, 2);
  const auto r = sas(CompositeProblem(q), q->minimizer(), p2());
  EXPECT_FALSE(r.succeeded);
  EXPECT_EQ(r.status, Status::Converged);
  const auto sol = uaa::uaa(CompositeProblem(q), q->minimizer(), p2());
  EXPECT_EQ(sol.status, Status::Converged);
}

TEST(Sas, BudgetExhausted) {
  const auto f = logistic_l2_oracle(make_synthetic_classification(40, 4, 3), 1e-3);
  UaaConfig c = p2();
  c.sigma0 = c.sigma_min = 1e-8;
  c.stop.max_total = 1;
  const auto r = sas(CompositeProblem(f), Vector::Constant(4, 5.0), c);
  EXPECT_FALSE(r.succeeded);
  EXPECT_EQ(r.status, Status::SubsolveFail);
  EXPECT_EQ(r.trace.records.size(), 1u);
  EXPECT_DOUBLE_EQ(r.sigma, 2e-8);
}

TEST(Theta, AlignedStep) {
  const Vector x{{1.0, 1.0}}, v{{0.5, -1.0}};
  const double t = 0.3;
  const Vector y = x + t * v;  // (y - x) = t v, with grad f(x) + xi = v
  const auto th = theta(x, y, Vector::Zero(2), v, 2);
  ASSERT_TRUE(th);
  EXPECT_NEAR(*th, t * v.squaredNorm() / std::pow(t * v.norm(), 3), 1e-12);
  EXPECT_GT(*th, 0);
}

TEST(Theta, OrthogonalAndDegenerate) {
  const Vector x = Vector::Zero(2);
  EXPECT_EQ(*theta(x, Vector{{1.0, 0.0}}, Vector{{0.0, 0.5}}, Vector{{0.0, 0.5}}, 1), 0.0);
  EXPECT_FALSE(theta(x, x, Vector::Zero(2), Vector::Ones(2), 2));
}

TEST(Aas, FirstAnchorIsSasPoint) {
  const auto q = make_random_quadratic(5, 0.1, 1.0, 4);
  UaaConfig c = p2();
  c.stop.max_success = 3;
  std::vector<Vector> anchors, xbars;
  std::vector<std::string> phases;
  std::vector<bool> accepted;
  c.on_subsolve = [&](const SubsolveEvent& e) {
    anchors.push_back(e.model->anchor());
    xbars.push_back(e.result->xbar);
    phases.emplace_back(e.phase);
    accepted.push_back(e.accepted);
  };
  uaa::uaa(CompositeProblem(q), Vector::Ones(5), c);
  std::size_t k = 0;
  while (phases[k] == "SAS") ++k;
  ASSERT_TRUE(accepted[k - 1]);
  EXPECT_LE((anchors[k] - xbars[k - 1]).norm(), 1e-14 * (1 + xbars[k - 1].norm()));
}

TEST(Aas, LargeSigmaAlwaysAccepts) {
  // quadratic: rho_2 = 0, so sigma >= kappa_theta + eta forces theta >= eta
  const auto q = make_random_quadratic(8, 0.05, 1.0, 5);
  UaaConfig c = p2();
  c.sigma0 = c.sigma_min = c.kappa_theta + c.eta;
  c.stop.max_success = 40;
  c.stop.grad_map_tol = 0;
  const auto sol = uaa::uaa(CompositeProblem(q), Vector::Ones(8), c);
  int aas = 0;
  for (const auto& r : sol.trace.records) {
    if (r.phase != "AAS") continue;
    ++aas;
    EXPECT_TRUE(r.success);
    EXPECT_GE(*r.theta, c.eta);
  }
  EXPECT_EQ(aas, 40);
}

TEST(Aas, BestSoFarAndFinalValue) {
  const auto f = logistic_l2_oracle(make_synthetic_classification(60, 5, 6), 1e-4);
  const auto sol = uaa::uaa(CompositeProblem(f), Vector::Constant(5, 2.0), p2());
  EXPECT_EQ(sol.status, Status::Converged);
  EXPECT_DOUBLE_EQ(sol.F, f->value(sol.x));
  double best = 1e300;
  for (const auto& r : sol.trace.records) {
    if (r.success) best = std::min(best, r.F);
  }
  EXPECT_LE(sol.F, best + 1e-12);
}

TEST(Uaa, FirstOrderScalarQuadratic) {
  auto q = std::make_shared<QuadraticOracle>(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -3.0));
  UaaConfig c;
  c.p = 1;
  c.variant = ModelVariant::FirstOrder;
  c.stop.grad_map_tol = 1e-12;
  const auto sol = uaa::uaa(CompositeProblem(q), Vector::Constant(1, 10.0), c);
  EXPECT_LE(sol.F - q->value(q->minimizer()), 1e-10);
}

TEST(Uaa, InexactAndThirdOrderConverge) {
  const auto f = logistic_l2_oracle(make_synthetic_classification(60, 5, 7), 1e-3);
  UaaConfig c = p2();
  c.variant = ModelVariant::InexactHessian;
  const auto a = uaa::uaa(CompositeProblem(f), Vector::Ones(5), c);
  EXPECT_EQ(a.status, Status::Converged);
  for (const auto& r : a.trace.records) EXPECT_TRUE(r.fd_h.has_value());
  c.p = 3;
  c.variant = ModelVariant::TaylorP;
  const auto b = uaa::uaa(CompositeProblem(f), Vector::Ones(5), c);
  EXPECT_EQ(b.status, Status::Converged);
  EXPECT_GE(b.trace.convexity_checks, 1);
  EXPECT_LE(f->gradient(b.x).norm(), 1e-9);
}

TEST(Uaa, CompositeFirstAndSecondOrder) {
  const auto data = make_synthetic_classification(60, 5, 8);
  const auto prob = logistic_l1_problem(data, 1e-2);
  for (int p : {1, 2}) {
    UaaConfig c;
    c.p = p;
    c.variant = p == 1 ? ModelVariant::FirstOrder : ModelVariant::ExactHessian;
    const auto sol = uaa::uaa(prob, Vector::Ones(5), c);
    EXPECT_EQ(sol.status, Status::Converged) << p;
    EXPECT_LE(gradient_mapping_norm(prob, sol.x, 1.0), 1e-8);
  }
}

TEST(Hybrid, NoSwitchMatchesUaa) {
  const auto f = logistic_l2_oracle(make_synthetic_classification(60, 5, 9), 1e-4);
  UaaConfig c = p2();
  c.hybrid.enabled = true;
  c.hybrid.rel_progress = -1.0;  // never fires
  const auto h = aarc_hybrid(CompositeProblem(f), Vector::Ones(5), c);
  const auto u = uaa::uaa(CompositeProblem(f), Vector::Ones(5), p2());
  ASSERT_EQ(h.trace.records.size(), u.trace.records.size());
  for (std::size_t k = 0; k < u.trace.records.size(); ++k) {
    EXPECT_EQ(h.trace.records[k].F, u.trace.records[k].F);
    EXPECT_EQ(h.trace.records[k].phase, u.trace.records[k].phase);
  }
}

TEST(Hybrid, SwitchTagsRemainingRecords) {
  const auto f = logistic_l2_oracle(make_synthetic_classification(60, 5, 10), 1e-4);
  UaaConfig c = p2();
  c.hybrid.enabled = true;
  c.hybrid.rel_progress = 10.0;  // fires at the first opportunity
  c.hybrid.min_success = 2;
  const auto h = aarc_hybrid(CompositeProblem(f), Vector::Constant(5, 3.0), c);
  bool switched = false;
  int aas = 0;
  for (const auto& r : h.trace.records) {
    if (r.phase == "ARC-hybrid") switched = true;
    if (switched) EXPECT_EQ(r.phase, "ARC-hybrid");
    aas += r.phase == "AAS" && r.success;
  }
  EXPECT_TRUE(switched);
  EXPECT_EQ(aas, 2);
  EXPECT_LE(f->gradient(h.x).norm(), 1e-9);
}

TEST(Arc, QuadraticAcceptsEveryStep) {
  const auto q = make_random_quadratic(6, 0.1, 1.0, 11);
  ArcParams ap;
  ap.sigma0 = 1e-3;
  const auto sol = arc_baseline(CompositeProblem(q), Vector::Ones(6), ap);
  for (const auto& r : sol.trace.records) {
    EXPECT_TRUE(r.success);
    EXPECT_GE(*r.sigma, ap.sigma_min);
  }
  EXPECT_EQ(sol.status, Status::Converged);
}

TEST(Arc, LogisticConverges) {
  const auto f = logistic_l2_oracle(make_synthetic_classification(200, 20, 12), 1e-5);
  std::mt19937_64 rng(13);
  const auto sol = arc_baseline(CompositeProblem(f), randn(rng, 20), {});
  EXPECT_EQ(sol.status, Status::Converged);
  EXPECT_LE(f->gradient(sol.x).norm(), 1e-9);
  EXPECT_LE(sol.trace.records.size(), 500u);
  for (const auto& r : sol.trace.records) EXPECT_GE(*r.sigma, 1e-8);
}

TEST(Arc, RejectsComposite) {
  const auto prob = logistic_l1_problem(make_synthetic_classification(20, 3, 14), 0.1);
  EXPECT_THROW(arc_baseline(prob, Vector::Ones(3), {}), ConfigError);
}

TEST(Agd, ClassicalBoundOnQuadratic) {
  const auto q = make_random_quadratic(10, 1e-3, 1.0, 15);
  const Vector x0 = Vector::Ones(10);
  AgdParams ap;
  ap.fixed_L = 1.0;
  ap.grad_map_tol = 0.0;
  ap.max_iters = 300;
  const auto sol = agd_baseline(CompositeProblem(q), x0, ap);
  const double fstar = q->value(q->minimizer());
  const double r2 = (x0 - q->minimizer()).squaredNorm();
  int k = 0;
  for (const auto& r : sol.trace.records) {
    ++k;
    EXPECT_LE(r.F - fstar, 2.0 * r2 / ((k + 1.0) * (k + 1.0)) + 1e-12) << k;
  }
  EXPECT_EQ(k, 300);
}

TEST(Agd, LassoToyMatchesSoftThreshold) {
  auto q = std::make_shared<QuadraticOracle>(Matrix::Identity(2, 2), Vector{{-1.5, 0.1}});
  CompositeProblem prob(q, std::make_shared<L1Regularizer>(0.4));
  const auto sol = agd_baseline(prob, Vector{{-3.0, 2.0}}, {});
  EXPECT_NEAR(sol.x[0], 1.1, 1e-9);
  EXPECT_NEAR(sol.x[1], 0.0, 1e-9);
  EXPECT_EQ(sol.trace.records.front().phase, "FISTA");
}

TEST(Agd, StationaryStart) {
  const auto q = make_random_quadratic(3, 0.1, 1.0, 16);
  const auto sol = agd_baseline(CompositeProblem(q), q->minimizer(), {});
  EXPECT_EQ(sol.status, Status::Converged);
  EXPECT_LE(sol.trace.records.size(), 1u);
}

}  // namespace
}  // namespace uaa
