#include "sgdchain/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace sgdchain {

DivergenceError::DivergenceError(std::size_t iteration, double norm, const std::string& context)
    : Error([&] {
        std::ostringstream os;
        os << "SGD diverged at iteration " << iteration << " (|theta| = " << norm << ")";
        if (!context.empty()) os << ": " << context;
        return os.str();
      }()),
      iteration_(iteration),
      norm_(norm) {}

bool all_finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Point::Point(Vector coords) : coords_(std::move(coords)) {
  if (coords_.size() < 1) throw InvalidArgument("Point: dimension must be at least 1");
  if (!all_finite(coords_)) throw InvalidArgument("Point: coordinates must be finite");
}

Point::Point(std::initializer_list<double> coords)
    : Point(Eigen::Map<const Vector>(coords.begin(), static_cast<Eigen::Index>(coords.size()))) {}

Point Point::zeros(std::size_t dim) { return Point(Vector::Zero(static_cast<Eigen::Index>(dim))); }

Point Point::filled(std::size_t dim, double value) {
  return Point(Vector::Constant(static_cast<Eigen::Index>(dim), value));
}

// ---------------------------------------------------------------------------

LocalGrowthFn LocalGrowthFn::linear(double coefficient) {
  return power(coefficient, 1.0);
}

LocalGrowthFn LocalGrowthFn::power(double coefficient, double exponent) {
  if (!(coefficient > 0.0)) throw InvalidArgument("LocalGrowthFn: coefficient must be positive");
  if (!(exponent >= 1.0)) throw InvalidArgument("LocalGrowthFn: exponent must be >= 1");
  LocalGrowthFn g;
  g.kind_ = exponent == 1.0 ? Kind::linear : Kind::power;
  g.coefficient_ = coefficient;
  g.exponent_ = exponent;
  return g;
}

LocalGrowthFn LocalGrowthFn::custom(std::function<double(double)> fn,
                                    std::function<double(double)> g_inv) {
  if (!fn) throw InvalidArgument("LocalGrowthFn: custom function is empty");
  LocalGrowthFn g;
  g.kind_ = Kind::custom;
  g.fn_ = std::move(fn);
  g.inv_ = std::move(g_inv);
  return g;
}

double LocalGrowthFn::operator()(double x) const {
  if (kind_ == Kind::custom) return fn_(x);
  if (kind_ == Kind::linear) return coefficient_ * x;
  return coefficient_ * std::pow(x, exponent_);
}

double LocalGrowthFn::inverse(double y) const {
  if (y < 0.0) throw InvalidArgument("LocalGrowthFn: inverse of a negative value");
  switch (kind_) {
    case Kind::linear:
      return y / coefficient_;
    case Kind::power:
      return std::pow(y / coefficient_, 1.0 / exponent_);
    case Kind::custom:
      break;
  }
  if (inv_) return inv_(y);
  // Bisection on the strictly increasing g.
  double lo = 0.0;
  double hi = 1.0;
  while (fn_(hi) < y) {
    hi *= 2.0;
    if (!std::isfinite(hi)) throw EvaluationError("LocalGrowthFn: inverse out of range");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (fn_(mid) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::string LocalGrowthFn::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::linear:
      os << coefficient_ << "*x";
      break;
    case Kind::power:
      os << coefficient_ << "*x^" << exponent_;
      break;
    case Kind::custom:
      os << "custom";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

void RegularityConstants::validate() const {
  auto positive = [](const char* what, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("RegularityConstants: ") + what + " must be positive");
    }
  };
  positive("L", L);
  positive("alpha", alpha);
  // beta = 0 is admissible (objectives with a critical point at the origin).
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("RegularityConstants: beta must be non-negative");
  }
  if (L_xi) positive("L_xi", *L_xi);
  if (L_tilde) positive("L_tilde", *L_tilde);
  if (gamma) positive("gamma", *gamma);
  if (R_local) positive("R_local", *R_local);
  if (delta) positive("delta", *delta);
  if (alpha > L) {
    throw InvalidArgument("RegularityConstants: alpha must not exceed L");
  }
}

// ---------------------------------------------------------------------------

Vector Objective::gradient(const Vector& theta) const {
  Vector out(theta.size());
  gradient(theta, out);
  return out;
}

Matrix Objective::hessian(const Vector&) const {
  throw PreconditionError("objective '" + name() + "' has no Hessian oracle");
}

std::optional<double> Objective::min_value() const {
  if (!known_min_) return std::nullopt;
  return value(known_min_->coords());
}

double default_fd_step(const Vector& theta) { return 1e-5 * (1.0 + theta.norm()); }

Vector finite_diff_grad(const Objective& objective, const Vector& theta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_grad: step must be positive");
  Vector grad(theta.size());
  Vector probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = objective.value(probe);
    probe[i] = theta[i] - h;
    const double down = objective.value(probe);
    probe[i] = theta[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw EvaluationError("finite_diff_grad: non-finite objective value");
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// ---------------------------------------------------------------------------

TestFunction TestFunction::norm() {
  TestFunction t;
  t.kind_ = Kind::norm;
  t.label_ = "norm";
  t.lipschitz_ = 1.0;
  t.growth_ = 1.0;
  return t;
}

TestFunction TestFunction::coordinate(std::size_t index) {
  TestFunction t;
  t.kind_ = Kind::coordinate;
  t.index_ = index;
  t.label_ = "coord:" + std::to_string(index);
  t.lipschitz_ = 1.0;
  t.growth_ = 1.0;
  return t;
}

TestFunction TestFunction::sigmoid_of_f(ObjectivePtr objective) {
  if (!objective) throw InvalidArgument("sigmoid_of_f: objective is null");
  TestFunction t;
  t.kind_ = Kind::sigmoid_of_f;
  t.label_ = "sigmoid_f";
  t.lipschitz_ = 0.25;
  t.growth_ = 1.0;
  t.objective_ = std::move(objective);
  return t;
}

TestFunction TestFunction::square_norm() {
  TestFunction t;
  t.kind_ = Kind::square_norm;
  t.label_ = "norm2";
  return t;
}

TestFunction TestFunction::custom(std::string label, std::function<double(const Vector&)> fn,
                                  std::optional<double> lipschitz, std::optional<double> growth) {
  if (!fn) throw InvalidArgument("custom test function is empty");
  TestFunction t;
  t.kind_ = Kind::custom;
  t.label_ = std::move(label);
  t.fn_ = std::move(fn);
  t.lipschitz_ = lipschitz;
  t.growth_ = growth;
  return t;
}

double TestFunction::operator()(const Vector& theta) const {
  switch (kind_) {
    case Kind::norm:
      return theta.norm();
    case Kind::coordinate:
      if (index_ >= static_cast<std::size_t>(theta.size())) {
        throw InvalidArgument("coordinate test function: index out of range");
      }
      return theta[static_cast<Eigen::Index>(index_)];
    case Kind::sigmoid_of_f:
      return 1.0 / (1.0 + std::exp(-objective_->value(theta)));
    case Kind::square_norm:
      return theta.squaredNorm();
    case Kind::custom:
      return fn_(theta);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

void SgdConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("SgdConfig: eta must be positive");
  if (batch_size < 1) throw InvalidArgument("SgdConfig: batch_size must be positive");
  if (burn_in >= n_iters) {
    throw PreconditionError("SgdConfig: empty recording window (burn_in >= n_iters)");
  }
}

double Trajectory::mean(std::size_t test_index) const {
  if (n_recorded == 0) throw PreconditionError("Trajectory: empty recording window");
  return test_sums.at(test_index).sum / static_cast<double>(n_recorded);
}

double Trajectory::mean_norm2() const {
  if (n_recorded == 0) throw PreconditionError("Trajectory: empty recording window");
  return sum_norm2 / static_cast<double>(n_recorded);
}

double Trajectory::mean_norm4() const {
  if (n_recorded == 0) throw PreconditionError("Trajectory: empty recording window");
  return sum_norm4 / static_cast<double>(n_recorded);
}

}  // namespace sgdchain
