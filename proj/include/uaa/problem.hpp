#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "uaa/types.hpp"

namespace uaa {

// One sparse feature vector: (0-based index, value) pairs, strictly increasing
// by index.
using SparseRow = std::vector<std::pair<int, double>>;

// Binary classification samples. Immutable once built.
class Dataset {
 public:
  // Validates the invariants (labels in {-1,+1}, indices in [0, d), strictly
  // increasing per row) and throws DomainError otherwise.
  Dataset(std::vector<SparseRow> rows, std::vector<double> labels, int d);

  int n() const { return static_cast<int>(rows_.size()); }
  int d() const { return d_; }
  const std::vector<SparseRow>& rows() const { return rows_; }
  const std::vector<double>& labels() const { return labels_; }

  // Row-major n x d design matrix.
  Eigen::SparseMatrix<double, Eigen::RowMajor> design_matrix() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<SparseRow> rows_;
  std::vector<double> labels_;
  int d_;
};

// Parses LIBSVM text ("label idx:val idx:val ..." with 1-based ascending
// indices). Labels > 0 map to +1, everything else to -1. When `d_override` is
// set it fixes the feature dimension (it must cover every index seen).
Dataset parse_libsvm(std::istream& in, std::optional<int> d_override = std::nullopt);
Dataset load_libsvm(const std::string& path, std::optional<int> d_override = std::nullopt);

// Writes LIBSVM text that parse_libsvm reads back to an identical Dataset.
void write_libsvm(std::ostream& out, const Dataset& data);

// Gaussian features with labels from a noisy random hyperplane; deterministic
// given the seed.
Dataset make_synthetic_classification(int n, int d, std::uint64_t seed, double label_noise = 0.1);

// Evaluator of a smooth convex f and its derivatives.
//
// tensor_contract(x, s, k) returns the vector nabla^k f(x)[s]^(k-1): the
// gradient for k = 1, the Hessian-vector product for k = 2 and the third-order
// contraction for k = 3. Oracles that support k > 3 override it and raise
// max_order().
class SmoothOracle {
 public:
  virtual ~SmoothOracle() = default;

  virtual int dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Vector hessian_vec(const Vector& x, const Vector& v) const = 0;

  virtual bool has_full_hessian() const { return false; }
  virtual Matrix full_hessian(const Vector& x) const;

  virtual bool has_third_order() const { return false; }
  // nabla^3 f(x)[v, v]
  virtual Vector third_order_contract(const Vector& x, const Vector& v) const;

  // Highest k accepted by tensor_contract.
  virtual int max_order() const { return has_third_order() ? 3 : 2; }
  virtual Vector tensor_contract(const Vector& x, const Vector& s, int k) const;
};

using OraclePtr = std::shared_ptr<const SmoothOracle>;

// f(x) = (1/n) sum ln(1 + exp(-b_i a_i^T x)) + (lambda/2) ||x||^2
class LogisticOracle final : public SmoothOracle {
 public:
  LogisticOracle(const Dataset& data, double lambda);

  int dimension() const override { return d_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& v) const override;
  bool has_full_hessian() const override { return true; }
  Matrix full_hessian(const Vector& x) const override;
  bool has_third_order() const override { return true; }
  Vector third_order_contract(const Vector& x, const Vector& v) const override;

  double lambda() const { return lambda_; }
  int samples() const { return n_; }
  // (1/n) sum ||a_i||^3 / (6 sqrt 3): a global Lipschitz constant of the
  // Hessian, since |d^3/dm^3 ln(1 + e^-m)| <= 1 / (6 sqrt 3).
  double hessian_lipschitz_bound() const;
  // lambda + (1/(4n)) ||A||_2^2 upper-bounds the gradient Lipschitz constant.
  double gradient_lipschitz_bound() const;

 private:
  // margins b_i a_i^T x
  Vector margins(const Vector& x) const;

  Eigen::SparseMatrix<double, Eigen::RowMajor> a_;  // rows pre-multiplied by b_i
  double lambda_;
  int n_;
  int d_;
};

// f(x) = 0.5 x^T Q x + c^T x + c0 with Q symmetric PSD.
class QuadraticOracle final : public SmoothOracle {
 public:
  QuadraticOracle(Matrix q, Vector c, double c0 = 0.0);

  int dimension() const override { return static_cast<int>(c_.size()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& v) const override;
  bool has_full_hessian() const override { return true; }
  Matrix full_hessian(const Vector& x) const override;
  bool has_third_order() const override { return true; }
  Vector third_order_contract(const Vector& x, const Vector& v) const override;

  const Matrix& q() const { return q_; }
  const Vector& c() const { return c_; }
  // argmin, assuming Q is positive definite.
  Vector minimizer() const;

 private:
  Matrix q_;
  Vector c_;
  double c0_;
};

// Random strongly convex quadratic with eigenvalues log-spaced in
// [mu, lipschitz] and a random linear term.
std::shared_ptr<QuadraticOracle> make_random_quadratic(int d, double mu, double lipschitz,
                                                       std::uint64_t seed);

// f(x) = ln sum_i exp(a_i^T x - b_i), with the rows of A centered so that f is
// bounded below and coercive whenever they span R^d.
class LogSumExpOracle final : public SmoothOracle {
 public:
  LogSumExpOracle(Matrix a, Vector b);

  int dimension() const override { return static_cast<int>(a_.cols()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& v) const override;
  bool has_full_hessian() const override { return true; }
  Matrix full_hessian(const Vector& x) const override;
  bool has_third_order() const override { return true; }
  Vector third_order_contract(const Vector& x, const Vector& v) const override;

 private:
  Vector softmax(const Vector& x) const;

  Matrix a_;
  Vector b_;
};

std::shared_ptr<LogSumExpOracle> make_random_logsumexp(int rows, int d, std::uint64_t seed);

// Convex nonsmooth term r with a cheap proximal mapping.
class Regularizer {
 public:
  virtual ~Regularizer() = default;
  virtual double value(const Vector& x) const = 0;
  // argmin_z r(z) + ||z - v||^2 / (2t)
  virtual Vector prox(const Vector& v, double t) const = 0;
  virtual bool is_zero() const { return false; }
};

class ZeroRegularizer final : public Regularizer {
 public:
  double value(const Vector&) const override { return 0.0; }
  Vector prox(const Vector& v, double) const override { return v; }
  bool is_zero() const override { return true; }
};

// r(x) = lambda ||x||_1; prox is soft-thresholding at level t * lambda.
class L1Regularizer final : public Regularizer {
 public:
  explicit L1Regularizer(double lambda);
  double value(const Vector& x) const override;
  Vector prox(const Vector& v, double t) const override;
  double lambda() const { return lambda_; }

 private:
  double lambda_;
};

// F = f + r.
class CompositeProblem {
 public:
  explicit CompositeProblem(OraclePtr smooth,
                            std::shared_ptr<const Regularizer> r = std::make_shared<ZeroRegularizer>());

  const SmoothOracle& smooth() const { return *smooth_; }
  const OraclePtr& smooth_ptr() const { return smooth_; }
  const Regularizer& regularizer() const { return *r_; }
  bool has_nonsmooth() const { return !r_->is_zero(); }
  int dimension() const { return smooth_->dimension(); }

  double r_eval(const Vector& x) const { return r_->value(x); }
  Vector prox(const Vector& v, double t) const { return r_->prox(v, t); }
  double objective(const Vector& x) const { return smooth_->value(x) + r_->value(x); }

 private:
  OraclePtr smooth_;
  std::shared_ptr<const Regularizer> r_;
};

std::shared_ptr<LogisticOracle> logistic_l2_oracle(const Dataset& data, double lambda);
// Mean logistic loss plus lambda ||x||_1.
CompositeProblem logistic_l1_problem(const Dataset& data, double lambda);

// xi = alpha (v_pre - x_post); an element of dr(x_post) when
// x_post = prox(v_pre, 1/alpha).
Vector subgradient_from_prox(const Vector& v_pre, const Vector& x_post, double alpha);

// || alpha (x - prox(x - grad f(x)/alpha, 1/alpha)) ||
double gradient_mapping_norm(const CompositeProblem& problem, const Vector& x, double alpha);
// Same, with a precomputed gradient at x.
double gradient_mapping_norm(const CompositeProblem& problem, const Vector& x,
                             const Vector& grad, double alpha);

// Numerically stable ln(1 + exp(z)).
double softplus(double z);
double sigmoid(double z);

}  // namespace uaa
