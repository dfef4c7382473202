#pragma once

// Domain types shared by every part of the library: points, objectives,
// regularity constants, test functions, run configuration and trajectories.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdchain {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input (unknown names, non-positive parameters, shape mismatch).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A documented precondition does not hold (step size above a cap, too few
/// samples for an estimator, empty recording window).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An objective, gradient or test function returned a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// A search (e.g. for a non-convexity witness) came back empty.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// The SGD chain left the finite region (or the divergence guard tripped).
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, double norm, const std::string& context = {});

  std::size_t iteration() const { return iteration_; }
  double norm() const { return norm_; }

 private:
  std::size_t iteration_;
  double norm_;
};

bool all_finite(const Vector& v);

// ---------------------------------------------------------------------------
// Point
// ---------------------------------------------------------------------------

/// A parameter vector with finite coordinates.
class Point {
 public:
  explicit Point(Vector coords);
  Point(std::initializer_list<double> coords);

  static Point zeros(std::size_t dim);
  static Point filled(std::size_t dim, double value);

  const Vector& coords() const { return coords_; }
  std::size_t dim() const { return static_cast<std::size_t>(coords_.size()); }
  double norm() const { return coords_.norm(); }
  double operator[](std::size_t i) const { return coords_[static_cast<Eigen::Index>(i)]; }

  bool operator==(const Point& other) const { return coords_ == other.coords_; }

 private:
  Vector coords_;
};

// ---------------------------------------------------------------------------
// Local growth functions g(x) used by the localized-dissipativity and
// Lojasiewicz conditions.
// ---------------------------------------------------------------------------

class LocalGrowthFn {
 public:
  enum class Kind { linear, power, custom };

  /// g(x) = c x
  static LocalGrowthFn linear(double coefficient);
  /// g(x) = c x^p, p >= 1
  static LocalGrowthFn power(double coefficient, double exponent);
  /// User-supplied convex, strictly increasing g with g(0) = 0. The inverse is
  /// computed by bisection when not supplied.
  static LocalGrowthFn custom(std::function<double(double)> g,
                              std::function<double(double)> g_inv = {});

  Kind kind() const { return kind_; }
  double coefficient() const { return coefficient_; }
  double exponent() const { return exponent_; }

  double operator()(double x) const;
  double inverse(double y) const;

  std::string describe() const;

 private:
  LocalGrowthFn() = default;

  Kind kind_ = Kind::linear;
  double coefficient_ = 1.0;
  double exponent_ = 1.0;
  std::function<double(double)> fn_;
  std::function<double(double)> inv_;
};

// ---------------------------------------------------------------------------
// Regularity constants
// ---------------------------------------------------------------------------

struct RegularityConstants {
  double L = 0.0;      // linear growth: |grad f(t)| <= L (1 + |t|)
  double alpha = 0.0;  // dissipativity: <t, grad f(t)> >= alpha |t|^2 - beta
  double beta = 0.0;
  std::optional<double> L_xi;     // noise moment constant
  std::optional<double> L_tilde;  // Hessian growth |hess f(t)| <= L_tilde (1 + |t|)
  std::optional<double> gamma;    // Lojasiewicz tail constant
  std::optional<LocalGrowthFn> g_spec;
  std::optional<double> R_local;
  std::optional<double> delta;

  /// Throws InvalidArgument on non-positive or inconsistent values.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual void gradient(const Vector& theta, Vector& out) const = 0;

  Vector gradient(const Vector& theta) const;

  virtual bool has_hessian() const { return false; }
  /// Throws PreconditionError if has_hessian() is false.
  virtual Matrix hessian(const Vector& theta) const;

  const std::optional<Point>& known_min() const { return known_min_; }
  /// f at the known minimizer, if there is one.
  std::optional<double> min_value() const;

  const RegularityConstants& constants() const { return constants_; }

 protected:
  std::optional<Point> known_min_;
  RegularityConstants constants_;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// Objective of the form f = (1/m) sum_i F_i, exposing per-sample gradients so
/// that mini-batch noise can be realized.
class FiniteSumObjective : public Objective {
 public:
  virtual std::size_t sample_count() const = 0;
  virtual void sample_gradient(const Vector& theta, std::size_t i, Vector& out) const = 0;
};

/// Central differences with step h: ((f(t + h e_i) - f(t - h e_i)) / 2h)_i.
Vector finite_diff_grad(const Objective& objective, const Vector& theta, double h);

/// Relative step used for gradient verification: 1e-5 (1 + |theta|).
double default_fd_step(const Vector& theta);

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

class TestFunction {
 public:
  enum class Kind { norm, coordinate, sigmoid_of_f, square_norm, custom };

  static TestFunction norm();
  static TestFunction coordinate(std::size_t index);
  /// phi(theta) = 1 / (1 + exp(-f(theta))). Lipschitz in f with constant 1/4.
  static TestFunction sigmoid_of_f(ObjectivePtr objective);
  /// phi(theta) = |theta|^2; not Lipschitz, used for moment diagnostics.
  static TestFunction square_norm();
  static TestFunction custom(std::string label, std::function<double(const Vector&)> fn,
                             std::optional<double> lipschitz = std::nullopt,
                             std::optional<double> growth = std::nullopt);

  Kind kind() const { return kind_; }
  std::size_t index() const { return index_; }
  const std::string& label() const { return label_; }

  /// Lipschitz constant in theta (norm, coordinate) or in f (sigmoid_of_f).
  std::optional<double> lipschitz_const() const { return lipschitz_; }
  /// Constant L_phi in |phi(theta)| <= L_phi (1 + |theta|), where known.
  std::optional<double> growth_const() const { return growth_; }

  double operator()(const Vector& theta) const;

 private:
  TestFunction() = default;

  Kind kind_ = Kind::norm;
  std::size_t index_ = 0;
  std::string label_;
  std::optional<double> lipschitz_;
  std::optional<double> growth_;
  ObjectivePtr objective_;
  std::function<double(const Vector&)> fn_;
};

// ---------------------------------------------------------------------------
// Run configuration and trajectories
// ---------------------------------------------------------------------------

struct SgdConfig {
  double eta = 0.1;
  std::size_t n_iters = 1000;
  std::size_t burn_in = 0;
  Point theta0 = Point::zeros(1);
  std::uint64_t seed = 0;
  std::size_t batch_size = 1;

  void validate() const;
  std::size_t n_recorded() const { return n_iters - burn_in; }
};

/// Running sums for one test function over the recording window.
struct TestAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::size_t n_recorded = 0;

  std::vector<TestAccumulator> test_sums;
  double sum_norm2 = 0.0;
  double sum_norm4 = 0.0;
  Vector sum_theta;  // for Polyak-Ruppert averaging
  Vector last_theta;

  /// Post burn-in iterates, only when requested.
  std::vector<Vector> iterates;
  /// Post burn-in values phi_j(theta_k), one series per test function, only
  /// when requested.
  std::vector<std::vector<double>> test_values;
  std::vector<double> trace;  // first test function at the requested trace iterations

  double mean(std::size_t test_index) const;
  double mean_norm2() const;
  double mean_norm4() const;
};

}  // namespace sgdchain
