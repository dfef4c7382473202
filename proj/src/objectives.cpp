#include "sgdchain/objectives.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace sgdchain {

namespace {

void require_positive(const char* what, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + " must be positive");
  }
}

void check_dim(const Vector& theta, std::size_t dim, const std::string& name) {
  if (static_cast<std::size_t>(theta.size()) != dim) {
    throw InvalidArgument(name + ": expected dimension " + std::to_string(dim) + ", got " +
                          std::to_string(theta.size()));
  }
}

double max_eig_gram(const Matrix& X) {
  const Matrix gram = X.transpose() * X / static_cast<double>(X.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void check_data(const Matrix& X, const Vector& y) {
  if (X.rows() == 0 || X.cols() == 0) throw InvalidArgument("design matrix is empty");
  if (X.rows() != y.size()) {
    throw InvalidArgument("design matrix has " + std::to_string(X.rows()) +
                          " rows but the response has " + std::to_string(y.size()) + " entries");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Quadratic::Quadratic(Point center) : center_(std::move(center)) {
  known_min_ = center_;
  const double c = center_.norm();
  constants_.L = std::max(1.0, c);
  if (c == 0.0) {
    constants_.alpha = 1.0;
    constants_.beta = 0.0;
  } else {
    // <t, t - c> >= |t|^2/2 - |c|^2/2
    constants_.alpha = 0.5;
    constants_.beta = 0.5 * c * c;
  }
  constants_.L_tilde = 1.0;
  constants_.gamma = 2.0;
  constants_.g_spec = LocalGrowthFn::power(1.0, 2.0);
}

double Quadratic::value(const Vector& theta) const {
  check_dim(theta, dim(), name());
  return 0.5 * (theta - center_.coords()).squaredNorm();
}

void Quadratic::gradient(const Vector& theta, Vector& out) const {
  check_dim(theta, dim(), name());
  out = theta - center_.coords();
}

Matrix Quadratic::hessian(const Vector& theta) const {
  check_dim(theta, dim(), name());
  return Matrix::Identity(theta.size(), theta.size());
}

// ---------------------------------------------------------------------------

QuadSine::QuadSine() {
  // |2x + 10 cos x| <= 10 (1 + |x|), attained at x = 0.
  constants_.L = 10.0;
  constants_.alpha = 1.0;
  constants_.beta = 25.0;
  constants_.L_tilde = 12.0;
  // Global minimizer: root of 2x + 10 cos x near -1.3 (Newton).
  double x = -1.3;
  for (int it = 0; it < 50; ++it) {
    const double step = (2.0 * x + 10.0 * std::cos(x)) / (2.0 - 10.0 * std::sin(x));
    x -= step;
    if (std::abs(step) < 1e-16) break;
  }
  known_min_ = Point{x};
}

double QuadSine::value(const Vector& theta) const {
  check_dim(theta, 1, name());
  const double x = theta[0];
  return x * x + 10.0 * std::sin(x);
}

void QuadSine::gradient(const Vector& theta, Vector& out) const {
  check_dim(theta, 1, name());
  out.resize(1);
  out[0] = 2.0 * theta[0] + 10.0 * std::cos(theta[0]);
}

Matrix QuadSine::hessian(const Vector& theta) const {
  check_dim(theta, 1, name());
  Matrix h(1, 1);
  h(0, 0) = 2.0 - 10.0 * std::sin(theta[0]);
  return h;
}

// ---------------------------------------------------------------------------

SimplifiedCauchy::SimplifiedCauchy(std::size_t dim, double lambda) : dim_(dim), lambda_(lambda) {
  if (dim < 1) throw InvalidArgument("simplified-cauchy: dimension must be >= 1");
  require_positive("lambda", lambda);
  known_min_ = Point::zeros(dim);
  // |grad f| = r (lambda + 1/(1+r^2)) <= 1/2 + lambda r <= max(1/2, lambda) (1 + r)
  constants_.L = std::max(0.5, lambda);
  constants_.alpha = std::min(lambda, constants_.L);
  constants_.beta = 0.0;
  // Hessian eigenvalues: 1/(1+r^2) + lambda and (1-r^2)/(1+r^2)^2 + lambda.
  constants_.L_tilde = 1.0 + lambda;
  const double gamma = 2.0 * lambda * lambda / (1.0 + lambda);
  constants_.gamma = gamma;
  constants_.g_spec = LocalGrowthFn::linear(gamma);
}

double SimplifiedCauchy::value(const Vector& theta) const {
  check_dim(theta, dim_, name());
  const double r2 = theta.squaredNorm();
  return 0.5 * std::log1p(r2) + 0.5 * lambda_ * r2;
}

void SimplifiedCauchy::gradient(const Vector& theta, Vector& out) const {
  check_dim(theta, dim_, name());
  const double r2 = theta.squaredNorm();
  out = (1.0 / (1.0 + r2) + lambda_) * theta;
}

Matrix SimplifiedCauchy::hessian(const Vector& theta) const {
  check_dim(theta, dim_, name());
  const double r2 = theta.squaredNorm();
  const double a = 1.0 + r2;
  const auto n = theta.size();
  Matrix h = (1.0 / a + lambda_) * Matrix::Identity(n, n);
  h.noalias() -= (2.0 / (a * a)) * theta * theta.transpose();
  return h;
}

// ---------------------------------------------------------------------------

SimplifiedBZ::SimplifiedBZ(std::size_t dim, double lambda, double nu, double R)
    : dim_(dim), lambda_(lambda), nu_(nu) {
  if (dim < 1) throw InvalidArgument("simplified-bz: dimension must be >= 1");
  require_positive("lambda", lambda);
  require_positive("nu", nu);
  require_positive("R", R);
  known_min_ = Point::zeros(dim);
  constants_.L = 1.0 / (1.0 + nu) + lambda;
  constants_.alpha = lambda;
  constants_.beta = 0.0;
  constants_.R_local = R;
  // With beta = 0, R = delta/alpha gives delta = alpha R.
  constants_.delta = lambda * R;
  constants_.g_spec = LocalGrowthFn::power(lambda + 1.0 / (1.0 + nu * std::exp(R * R)), 2.0);
  // Hessian growth: radial profile sup over r of |eigenvalue| / (1 + r).
  double lt = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double r = 0.001 * i;
    const double e = nu * std::exp(std::min(r * r, 700.0));
    const double tangential = 1.0 / (1.0 + e) + lambda;
    const double radial = tangential - 2.0 * r * r * e / ((1.0 + e) * (1.0 + e));
    lt = std::max(lt, std::max(std::abs(tangential), std::abs(radial)) / (1.0 + r));
  }
  constants_.L_tilde = 1.01 * lt;
}

double SimplifiedBZ::value(const Vector& theta) const {
  check_dim(theta, dim_, name());
  const double r2 = theta.squaredNorm();
  return -0.5 * std::log(nu_ + std::exp(-r2)) + 0.5 * lambda_ * r2;
}

void SimplifiedBZ::gradient(const Vector& theta, Vector& out) const {
  check_dim(theta, dim_, name());
  const double r2 = theta.squaredNorm();
  // 1/(1 + nu e^{r^2}) written as e^{-r^2}/(e^{-r^2} + nu) to avoid overflow.
  const double em = std::exp(-r2);
  out = (em / (em + nu_) + lambda_) * theta;
}

Matrix SimplifiedBZ::hessian(const Vector& theta) const {
  check_dim(theta, dim_, name());
  const double r2 = theta.squaredNorm();
  const double em = std::exp(-r2);
  const double w = em / (em + nu_);               // 1/(1 + nu e^{r^2})
  const double c = 2.0 * nu_ * em / ((em + nu_) * (em + nu_));  // 2 nu e^{r^2}/(1 + nu e^{r^2})^2
  const auto n = theta.size();
  Matrix h = (w + lambda_) * Matrix::Identity(n, n);
  h.noalias() -= c * theta * theta.transpose();
  return h;
}

// ---------------------------------------------------------------------------

CauchyRegMLE::CauchyRegMLE(Matrix X, Vector y, double lambda)
    : X_(std::move(X)), y_(std::move(y)), lambda_(lambda) {
  check_data(X_, y_);
  require_positive("lambda", lambda);
  const double m = static_cast<double>(X_.rows());
  xty_norm_ = (X_.transpose() * y_ / m).norm();
  gram_max_eig_ = max_eig_gram(X_);
  // |grad f| <= (lambda_max + lambda) |t| + |X^T y / m|
  constants_.L = std::max(gram_max_eig_ + lambda, xty_norm_);
  constants_.alpha = lambda / 4.0;
  constants_.beta = xty_norm_ * xty_norm_ / lambda;
  constants_.L_tilde = gram_max_eig_ + lambda;
}

double CauchyRegMLE::value(const Vector& theta) const {
  check_dim(theta, dim(), name());
  const Vector r = y_ - X_ * theta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += std::log1p(r[i] * r[i]);
  return s / (2.0 * static_cast<double>(r.size())) + 0.5 * lambda_ * theta.squaredNorm();
}

void CauchyRegMLE::gradient(const Vector& theta, Vector& out) const {
  check_dim(theta, dim(), name());
  Vector w = X_ * theta - y_;  // <x_i, t> - y_i
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = w[i] / (1.0 + w[i] * w[i]);
  out.noalias() = X_.transpose() * w;
  out /= static_cast<double>(w.size());
  out += lambda_ * theta;
}

void CauchyRegMLE::sample_gradient(const Vector& theta, std::size_t i, Vector& out) const {
  const auto row = X_.row(static_cast<Eigen::Index>(i));
  const double s = row.dot(theta) - y_[static_cast<Eigen::Index>(i)];
  out = (s / (1.0 + s * s)) * row.transpose() + lambda_ * theta;
}

Matrix CauchyRegMLE::hessian(const Vector& theta) const {
  check_dim(theta, dim(), name());
  const Vector s = X_ * theta - y_;
  Vector w(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double a = 1.0 + s[i] * s[i];
    w[i] = (1.0 - s[i] * s[i]) / (a * a);
  }
  Matrix h = X_.transpose() * w.asDiagonal() * X_ / static_cast<double>(s.size());
  h.diagonal().array() += lambda_;
  return h;
}

// ---------------------------------------------------------------------------

BlakeZissermanMLE::BlakeZissermanMLE(Matrix X, Vector y, double lambda, double nu)
    : X_(std::move(X)), y_(std::move(y)), lambda_(lambda), nu_(nu) {
  check_data(X_, y_);
  require_positive("lambda", lambda);
  require_positive("nu", nu);
  const double m = static_cast<double>(X_.rows());
  xty_norm_ = (X_.transpose() * y_ / m).norm();
  gram_max_eig_ = max_eig_gram(X_);
  constants_.L = std::max(gram_max_eig_ / (1.0 + nu) + lambda, xty_norm_ / (1.0 + nu));
  constants_.alpha = lambda / 2.0;
  constants_.beta = xty_norm_ * xty_norm_ / (2.0 * lambda * (1.0 + nu) * (1.0 + nu));
}

double BlakeZissermanMLE::value(const Vector& theta) const {
  check_dim(theta, dim(), name());
  const Vector r = y_ - X_ * theta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += std::log(nu_ + std::exp(-r[i] * r[i]));
  return -s / (2.0 * static_cast<double>(r.size())) + 0.5 * lambda_ * theta.squaredNorm();
}

void BlakeZissermanMLE::gradient(const Vector& theta, Vector& out) const {
  check_dim(theta, dim(), name());
  Vector w = y_ - X_ * theta;  // residuals
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double e = std::exp(-w[i] * w[i]);
    w[i] = w[i] * e / (nu_ + e);
  }
  out.noalias() = X_.transpose() * w;
  out /= -static_cast<double>(w.size());
  out += lambda_ * theta;
}

void BlakeZissermanMLE::sample_gradient(const Vector& theta, std::size_t i, Vector& out) const {
  const auto row = X_.row(static_cast<Eigen::Index>(i));
  const double r = y_[static_cast<Eigen::Index>(i)] - row.dot(theta);
  const double e = std::exp(-r * r);
  out = (-r * e / (nu_ + e)) * row.transpose() + lambda_ * theta;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& objective_names() {
  static const std::vector<std::string> names = {"quadratic",     "quadsine",   "simplified-cauchy",
                                                 "simplified-bz", "cauchy-mle", "bz-mle"};
  return names;
}

ObjectivePtr make_objective(const ObjectiveSpec& spec, const RegressionDataset& data) {
  if (spec.name == "cauchy-mle") {
    return std::make_shared<CauchyRegMLE>(data.X, data.y, spec.lambda);
  }
  if (spec.name == "bz-mle") {
    return std::make_shared<BlakeZissermanMLE>(data.X, data.y, spec.lambda, spec.nu);
  }
  throw InvalidArgument("objective '" + spec.name + "' does not take a dataset");
}

ObjectivePtr make_objective(const ObjectiveSpec& spec) {
  if (spec.name == "quadratic") {
    if (spec.center) return std::make_shared<Quadratic>(*spec.center);
    return std::make_shared<Quadratic>(Point::zeros(spec.dim));
  }
  if (spec.name == "quadsine") {
    if (spec.dim != 1) throw InvalidArgument("quadsine is one-dimensional");
    return std::make_shared<QuadSine>();
  }
  if (spec.name == "simplified-cauchy") return std::make_shared<SimplifiedCauchy>(spec.dim, spec.lambda);
  if (spec.name == "simplified-bz") {
    return std::make_shared<SimplifiedBZ>(spec.dim, spec.lambda, spec.nu, spec.R);
  }
  if (spec.name == "cauchy-mle" || spec.name == "bz-mle") {
    require_positive("lambda", spec.lambda);
    if (spec.name == "bz-mle") require_positive("nu", spec.nu);
    RegressionDataset data;
    if (!spec.data_path.empty()) {
      data = read_regression_data(spec.data_path);
    } else {
      RngStream stream(spec.data_seed, 0);
      data = gen_regression_data(spec.data_m, spec.dim, spec.data_df, stream);
    }
    if (data.cols() != spec.dim) {
      throw InvalidArgument("dataset has " + std::to_string(data.cols()) +
                            " features but the objective dimension is " + std::to_string(spec.dim));
    }
    return make_objective(spec, data);
  }
  throw InvalidArgument("unknown objective '" + spec.name + "'");
}

// ---------------------------------------------------------------------------

NegativityWitness hessian_negativity_witness(const Objective& objective, double r_lo, double r_hi,
                                             double step) {
  if (!objective.has_hessian()) {
    throw PreconditionError("objective '" + objective.name() + "' has no Hessian oracle");
  }
  const auto d = static_cast<Eigen::Index>(objective.dim());
  const Vector u = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  const Vector center = objective.known_min() ? objective.known_min()->coords() : Vector::Zero(d);

  std::optional<NegativityWitness> best;
  const auto steps = static_cast<long>(std::floor((r_hi - r_lo) / step + 1e-9));
  for (long i = 0; i <= steps; ++i) {
    const double r = r_lo + static_cast<double>(i) * step;
    const Vector theta = center + r * u;
    const double q = u.dot(objective.hessian(theta) * u);
    if (!(q < 0.0)) continue;
    if (!best) {
      best = NegativityWitness{Point(theta), Point(u), q, r, r};
    } else {
      best->band_hi = r;
      if (q < best->value) {
        best->theta = Point(theta);
        best->value = q;
      }
    }
  }
  if (!best) {
    throw NotFoundError("no negative curvature along the diagonal direction for radius in [" +
                        std::to_string(r_lo) + ", " + std::to_string(r_hi) + "]");
  }
  return *best;
}

}  // namespace sgdchain
