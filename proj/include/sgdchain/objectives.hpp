#pragma once

// Concrete objectives with analytic gradients, Hessians where available, and
// their regularity constants.

#include "sgdchain/core.hpp"
#include "sgdchain/noise.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace sgdchain {

/// f(t) = 1/2 |t - c|^2.
class Quadratic final : public Objective {
 public:
  explicit Quadratic(Point center);

  std::string name() const override { return "quadratic"; }
  std::size_t dim() const override { return center_.dim(); }
  double value(const Vector& theta) const override;
  using Objective::gradient;
  void gradient(const Vector& theta, Vector& out) const override;
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta) const override;

 private:
  Point center_;
};

/// f(x) = x^2 + 10 sin x, a one-dimensional non-convex (1, 25)-dissipative
/// function.
class QuadSine final : public Objective {
 public:
  QuadSine();

  std::string name() const override { return "quadsine"; }
  std::size_t dim() const override { return 1; }
  double value(const Vector& theta) const override;
  using Objective::gradient;
  void gradient(const Vector& theta, Vector& out) const override;
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta) const override;
};

/// f(t) = 1/2 log(1 + |t|^2) + lambda/2 |t|^2, minimized at 0.
class SimplifiedCauchy final : public Objective {
 public:
  SimplifiedCauchy(std::size_t dim, double lambda);

  std::string name() const override { return "simplified-cauchy"; }
  std::size_t dim() const override { return dim_; }
  double lambda() const { return lambda_; }
  double value(const Vector& theta) const override;
  using Objective::gradient;
  void gradient(const Vector& theta, Vector& out) const override;
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta) const override;

 private:
  std::size_t dim_;
  double lambda_;
};

/// f(t) = -1/2 log(nu + exp(-|t|^2)) + lambda/2 |t|^2, minimized at 0.
/// `R` is the radius of the local-growth region.
class SimplifiedBZ final : public Objective {
 public:
  SimplifiedBZ(std::size_t dim, double lambda, double nu, double R = 2.0);

  std::string name() const override { return "simplified-bz"; }
  std::size_t dim() const override { return dim_; }
  double lambda() const { return lambda_; }
  double nu() const { return nu_; }
  double value(const Vector& theta) const override;
  using Objective::gradient;
  void gradient(const Vector& theta, Vector& out) const override;
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta) const override;

 private:
  std::size_t dim_;
  double lambda_;
  double nu_;
};

/// Regularized Cauchy-likelihood regression,
/// f(t) = (1/2m) sum_i log(1 + (y_i - <x_i, t>)^2) + lambda/2 |t|^2.
class CauchyRegMLE final : public FiniteSumObjective {
 public:
  CauchyRegMLE(Matrix X, Vector y, double lambda);

  std::string name() const override { return "cauchy-mle"; }
  std::size_t dim() const override { return static_cast<std::size_t>(X_.cols()); }
  std::size_t sample_count() const override { return static_cast<std::size_t>(X_.rows()); }
  double lambda() const { return lambda_; }
  const Matrix& X() const { return X_; }
  const Vector& y() const { return y_; }

  double value(const Vector& theta) const override;
  using Objective::gradient;
  void gradient(const Vector& theta, Vector& out) const override;
  void sample_gradient(const Vector& theta, std::size_t i, Vector& out) const override;
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& theta) const override;

  /// |(1/m) X^T y|
  double xty_norm() const { return xty_norm_; }
  /// lambda_max((1/m) X^T X)
  double gram_max_eig() const { return gram_max_eig_; }

 private:
  Matrix X_;
  Vector y_;
  double lambda_;
  double xty_norm_ = 0.0;
  double gram_max_eig_ = 0.0;
};

/// Regularized Blake-Zisserman regression,
/// f(t) = -(1/2m) sum_i log(nu + exp(-(y_i - <x_i, t>)^2)) + lambda/2 |t|^2.
class BlakeZissermanMLE final : public FiniteSumObjective {
 public:
  BlakeZissermanMLE(Matrix X, Vector y, double lambda, double nu);

  std::string name() const override { return "bz-mle"; }
  std::size_t dim() const override { return static_cast<std::size_t>(X_.cols()); }
  std::size_t sample_count() const override { return static_cast<std::size_t>(X_.rows()); }
  double lambda() const { return lambda_; }
  double nu() const { return nu_; }

  double value(const Vector& theta) const override;
  using Objective::gradient;
  void gradient(const Vector& theta, Vector& out) const override;
  void sample_gradient(const Vector& theta, std::size_t i, Vector& out) const override;

  double xty_norm() const { return xty_norm_; }
  double gram_max_eig() const { return gram_max_eig_; }

 private:
  Matrix X_;
  Vector y_;
  double lambda_;
  double nu_;
  double xty_norm_ = 0.0;
  double gram_max_eig_ = 0.0;
};

/// Named objective with its parameters. Dataset objectives either read
/// `data_path` or generate data from (data_m, dim, data_df, data_seed).
struct ObjectiveSpec {
  std::string name = "quadratic";
  std::size_t dim = 1;
  double lambda = 0.1;
  double nu = 1.0;
  double R = 2.0;
  std::optional<Point> center;  // quadratic only; origin by default
  std::string data_path;
  std::size_t data_m = 500;
  double data_df = 10.0;
  std::uint64_t data_seed = 1;

  bool operator==(const ObjectiveSpec&) const = default;
};

/// Names accepted by make_objective.
const std::vector<std::string>& objective_names();

ObjectivePtr make_objective(const ObjectiveSpec& spec);
/// Dataset objectives from an in-memory dataset.
ObjectivePtr make_objective(const ObjectiveSpec& spec, const RegressionDataset& data);

struct NegativityWitness {
  Point theta;
  Point direction;
  double value;  // <u, hess f(theta) u>, negative
  double band_lo;  // smallest grid radius with a negative value
  double band_hi;  // largest grid radius with a negative value
};

/// Scans theta = theta* + r u, u = (1,...,1)/sqrt(d), r in [r_lo, r_hi] with
/// the given step and returns the most negative curvature along u.
/// Throws NotFoundError when the quadratic form is non-negative on the grid.
NegativityWitness hessian_negativity_witness(const Objective& objective, double r_lo = 0.5,
                                             double r_hi = 3.0, double step = 0.01);

}  // namespace sgdchain
