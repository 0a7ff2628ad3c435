#include "uaa/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "uaa/errors.hpp"

namespace uaa {

namespace {

// max |d^3/dm^3 ln(1 + e^-m)| = max_s s(1-s)(1-2s) over s in (0,1)
const double kLogisticThirdBound = 1.0 / (6.0 * std::sqrt(3.0));

}  // namespace

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Dataset::Dataset(std::vector<SparseRow> rows, std::vector<double> labels, int d)
    : rows_(std::move(rows)), labels_(std::move(labels)), d_(d) {
  if (d_ < 0) {
    throw DomainError("dataset dimension must be non-negative");
  }
  if (rows_.size() != labels_.size()) {
    throw DomainError("dataset rows and labels differ in length");
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      throw DomainError("label of row " + std::to_string(i) + " is not +1 or -1");
    }
    int prev = -1;
    for (const auto& [idx, val] : rows_[i]) {
      (void)val;
      if (idx < 0 || idx >= d_) {
        throw DomainError("feature index out of range in row " + std::to_string(i));
      }
      if (idx <= prev) {
        throw DomainError("feature indices not strictly increasing in row " + std::to_string(i));
      }
      prev = idx;
    }
  }
}

Eigen::SparseMatrix<double, Eigen::RowMajor> Dataset::design_matrix() const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < n(); ++i) {
    for (const auto& [idx, val] : rows_[i]) {
      triplets.emplace_back(i, idx, val);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(n(), d_);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Dataset make_synthetic_classification(int n, int d, std::uint64_t seed, double label_noise) {
  if (n <= 0 || d <= 0) {
    throw DomainError("synthetic dataset needs n > 0 and d > 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vector w(d);
  for (int k = 0; k < d; ++k) {
    w[k] = normal(rng) / std::sqrt(static_cast<double>(d));
  }
  std::vector<SparseRow> rows(n);
  std::vector<double> labels(n);
  for (int i = 0; i < n; ++i) {
    double margin = 0.0;
    rows[i].reserve(d);
    for (int k = 0; k < d; ++k) {
      const double v = normal(rng);
      rows[i].emplace_back(k, v);
      margin += v * w[k];
    }
    double label = margin > 0 ? 1.0 : -1.0;
    if (unif(rng) < label_noise) {
      label = -label;
    }
    labels[i] = label;
  }
  return Dataset(std::move(rows), std::move(labels), d);
}

// ---------------------------------------------------------------------------

Matrix SmoothOracle::full_hessian(const Vector&) const {
  throw ConfigError("oracle does not provide a full Hessian");
}

Vector SmoothOracle::third_order_contract(const Vector&, const Vector&) const {
  throw ConfigError("oracle does not provide third-order derivatives");
}

Vector SmoothOracle::tensor_contract(const Vector& x, const Vector& s, int k) const {
  switch (k) {
    case 1:
      return gradient(x);
    case 2:
      return hessian_vec(x, s);
    case 3:
      return third_order_contract(x, s);
    default:
      throw ConfigError("oracle does not provide derivatives of order " + std::to_string(k));
  }
}

// ---------------------------------------------------------------------------

LogisticOracle::LogisticOracle(const Dataset& data, double lambda)
    : lambda_(lambda), n_(data.n()), d_(data.d()) {
  if (!(lambda >= 0.0)) {
    throw DomainError("logistic regularization lambda must be >= 0");
  }
  if (data.n() == 0) {
    throw EmptyDatasetError();
  }
  a_ = data.design_matrix();
  for (int i = 0; i < n_; ++i) {
    a_.row(i) *= data.labels()[i];
  }
}

Vector LogisticOracle::margins(const Vector& x) const { return a_ * x; }

double LogisticOracle::value(const Vector& x) const {
  const Vector m = margins(x);
  double loss = 0.0;
  for (int i = 0; i < n_; ++i) {
    loss += softplus(-m[i]);
  }
  return loss / n_ + 0.5 * lambda_ * x.squaredNorm();
}

Vector LogisticOracle::gradient(const Vector& x) const {
  const Vector m = margins(x);
  Vector coeff(n_);
  for (int i = 0; i < n_; ++i) {
    coeff[i] = -sigmoid(-m[i]);
  }
  Vector g = a_.transpose() * coeff;
  g /= n_;
  g += lambda_ * x;
  return g;
}

Vector LogisticOracle::hessian_vec(const Vector& x, const Vector& v) const {
  const Vector m = margins(x);
  Vector av = a_ * v;
  for (int i = 0; i < n_; ++i) {
    const double s = sigmoid(m[i]);
    av[i] *= s * (1.0 - s);
  }
  Vector hv = a_.transpose() * av;
  hv /= n_;
  hv += lambda_ * v;
  return hv;
}

Matrix LogisticOracle::full_hessian(const Vector& x) const {
  const Vector m = margins(x);
  Vector w(n_);
  for (int i = 0; i < n_; ++i) {
    const double s = sigmoid(m[i]);
    w[i] = s * (1.0 - s) / n_;
  }
  const Matrix dense = Matrix(a_);
  Matrix h = dense.transpose() * w.asDiagonal() * dense;
  h = 0.5 * (h + h.transpose());
  h.diagonal().array() += lambda_;
  return h;
}

Vector LogisticOracle::third_order_contract(const Vector& x, const Vector& v) const {
  const Vector m = margins(x);
  Vector av = a_ * v;
  for (int i = 0; i < n_; ++i) {
    const double s = sigmoid(m[i]);
    av[i] = s * (1.0 - s) * (1.0 - 2.0 * s) * av[i] * av[i];
  }
  Vector t = a_.transpose() * av;
  t /= n_;
  return t;
}

double LogisticOracle::hessian_lipschitz_bound() const {
  double sum = 0.0;
  for (int i = 0; i < n_; ++i) {
    sum += std::pow(a_.row(i).norm(), 3);
  }
  return kLogisticThirdBound * sum / n_;
}

double LogisticOracle::gradient_lipschitz_bound() const {
  const Matrix dense = Matrix(a_);
  const Matrix gram = dense.transpose() * dense;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return lambda_ + eig.eigenvalues().maxCoeff() / (4.0 * n_);
}

std::shared_ptr<LogisticOracle> logistic_l2_oracle(const Dataset& data, double lambda) {
  return std::make_shared<LogisticOracle>(data, lambda);
}

CompositeProblem logistic_l1_problem(const Dataset& data, double lambda) {
  if (!(lambda >= 0.0)) {
    throw DomainError("l1 weight lambda must be >= 0");
  }
  return CompositeProblem(std::make_shared<LogisticOracle>(data, 0.0),
                          std::make_shared<L1Regularizer>(lambda));
}

// ---------------------------------------------------------------------------

QuadraticOracle::QuadraticOracle(Matrix q, Vector c, double c0)
    : q_(std::move(q)), c_(std::move(c)), c0_(c0) {
  if (q_.rows() != q_.cols() || q_.rows() != c_.size()) {
    throw DomainError("quadratic oracle: inconsistent dimensions");
  }
  q_ = 0.5 * (q_ + q_.transpose());
}

double QuadraticOracle::value(const Vector& x) const { return 0.5 * x.dot(q_ * x) + c_.dot(x) + c0_; }

Vector QuadraticOracle::gradient(const Vector& x) const { return q_ * x + c_; }

Vector QuadraticOracle::hessian_vec(const Vector&, const Vector& v) const { return q_ * v; }

Matrix QuadraticOracle::full_hessian(const Vector&) const { return q_; }

Vector QuadraticOracle::third_order_contract(const Vector&, const Vector& v) const {
  return Vector::Zero(v.size());
}

Vector QuadraticOracle::minimizer() const { return q_.ldlt().solve(-c_); }

std::shared_ptr<QuadraticOracle> make_random_quadratic(int d, double mu, double lipschitz,
                                                       std::uint64_t seed) {
  if (d <= 0 || !(mu > 0.0) || !(lipschitz >= mu)) {
    throw DomainError("random quadratic needs d > 0 and 0 < mu <= L");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      g(i, j) = normal(rng);
    }
  }
  const Matrix u = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector eig(d);
  for (int i = 0; i < d; ++i) {
    const double t = d == 1 ? 1.0 : static_cast<double>(i) / (d - 1);
    eig[i] = mu * std::pow(lipschitz / mu, t);
  }
  Vector c(d);
  for (int i = 0; i < d; ++i) {
    c[i] = normal(rng);
  }
  return std::make_shared<QuadraticOracle>(u * eig.asDiagonal() * u.transpose(), c);
}

// ---------------------------------------------------------------------------

LogSumExpOracle::LogSumExpOracle(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != b_.size() || a_.rows() == 0) {
    throw DomainError("log-sum-exp oracle: inconsistent dimensions");
  }
  const Eigen::RowVectorXd mean = a_.colwise().mean();
  a_.rowwise() -= mean;
}

Vector LogSumExpOracle::softmax(const Vector& x) const {
  Vector u = a_ * x - b_;
  u.array() -= u.maxCoeff();
  u = u.array().exp();
  return u / u.sum();
}

double LogSumExpOracle::value(const Vector& x) const {
  const Vector u = a_ * x - b_;
  const double top = u.maxCoeff();
  return top + std::log((u.array() - top).exp().sum());
}

Vector LogSumExpOracle::gradient(const Vector& x) const { return a_.transpose() * softmax(x); }

Vector LogSumExpOracle::hessian_vec(const Vector& x, const Vector& v) const {
  const Vector p = softmax(x);
  const Vector w = a_ * v;
  const Vector inner = p.cwiseProduct(w) - p * p.dot(w);
  return a_.transpose() * inner;
}

Matrix LogSumExpOracle::full_hessian(const Vector& x) const {
  const Vector p = softmax(x);
  Matrix mid = -p * p.transpose();
  mid.diagonal() += p;
  Matrix h = a_.transpose() * mid * a_;
  return 0.5 * (h + h.transpose());
}

Vector LogSumExpOracle::third_order_contract(const Vector& x, const Vector& v) const {
  const Vector p = softmax(x);
  const Vector w = a_ * v;
  const Vector centered = w.array() - p.dot(w);
  const Vector sq = centered.cwiseAbs2();
  const double var = p.dot(sq);
  const Vector inner = p.cwiseProduct((sq.array() - var).matrix());
  return a_.transpose() * inner;
}

std::shared_ptr<LogSumExpOracle> make_random_logsumexp(int rows, int d, std::uint64_t seed) {
  if (rows <= d || d <= 0) {
    throw DomainError("log-sum-exp instance needs rows > d > 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(rows, d);
  Vector b(rows);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < d; ++k) {
      a(i, k) = normal(rng);
    }
    b[i] = normal(rng);
  }
  return std::make_shared<LogSumExpOracle>(std::move(a), std::move(b));
}

// ---------------------------------------------------------------------------

L1Regularizer::L1Regularizer(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0)) {
    throw DomainError("l1 weight lambda must be >= 0");
  }
}

double L1Regularizer::value(const Vector& x) const { return lambda_ * x.lpNorm<1>(); }

Vector L1Regularizer::prox(const Vector& v, double t) const {
  const double level = t * lambda_;
  Vector out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double mag = std::abs(v[k]) - level;
    out[k] = mag > 0 ? std::copysign(mag, v[k]) : 0.0;
  }
  return out;
}

CompositeProblem::CompositeProblem(OraclePtr smooth, std::shared_ptr<const Regularizer> r)
    : smooth_(std::move(smooth)), r_(std::move(r)) {
  if (!smooth_ || !r_) {
    throw ConfigError("composite problem needs a smooth oracle and a regularizer");
  }
}

Vector subgradient_from_prox(const Vector& v_pre, const Vector& x_post, double alpha) {
  if (!(alpha > 0.0)) {
    throw DomainError("subgradient_from_prox: alpha must be > 0");
  }
  return alpha * (v_pre - x_post);
}

double gradient_mapping_norm(const CompositeProblem& problem, const Vector& x, const Vector& grad,
                             double alpha) {
  if (!(alpha > 0.0)) {
    throw DomainError("gradient mapping: alpha must be > 0");
  }
  if (!problem.has_nonsmooth()) {
    return grad.norm();
  }
  const Vector p = problem.prox(x - grad / alpha, 1.0 / alpha);
  return (alpha * (x - p)).norm();
}

double gradient_mapping_norm(const CompositeProblem& problem, const Vector& x, double alpha) {
  return gradient_mapping_norm(problem, x, problem.smooth().gradient(x), alpha);
}

}  // namespace uaa
