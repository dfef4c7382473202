#pragma once

// Closed-form step-size caps, moment bounds and bias constants, plus
// sampling-based certificates for the growth, dissipativity and local-growth
// conditions.

#include "sgdchain/core.hpp"
#include "sgdchain/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sgdchain {

// ---------------------------------------------------------------------------
// Step-size caps
// ---------------------------------------------------------------------------

/// [alpha - sqrt(max(alpha^2 - (3L^2 + L_xi), 0))] / (3L^2 + L_xi).
/// Below this step size the chain has a unique stationary law.
double max_step_size(double L, double alpha, double L_xi);

/// L_dagger = L_bar^2 + 16 max(L_xi^{3/4}(1+q^3), L_xi^{1/2}(1+q^2), L_xi(1+q^4)), q = beta/alpha.
double l_dagger(double L_bar, double L_xi, double beta_over_alpha);

/// [alpha - sqrt(max(alpha^2 - 16 L_dagger, 0))] / (64 L_dagger).
double c_dagger(double L_bar, double alpha, double L_xi, double beta_over_alpha);

struct StepSizeBounds {
  double c_L_alpha = 0.0;
  double c_dagger = 0.0;
  double L_bar = 0.0;
  double L_dagger = 0.0;
  double overall_max = 0.0;  // min(1, 1/(10 L_bar), c_L_alpha, c_dagger)
  std::string binding;       // which of the four caps attains overall_max
};

StepSizeBounds step_size_bounds(double L, double alpha, double beta, double L_xi,
                                double theta_star_norm);

// ---------------------------------------------------------------------------
// Moments and bias constants
// ---------------------------------------------------------------------------

/// Stationary second-moment bound 3 + 2 beta / alpha.
double mu2_bound(double alpha, double beta);

/// Stationary fourth-moment bound
/// (8/(7 alpha)) [(beta + 6L^2 + 3 L_xi^{1/2} + 16) mu2 + 16L^4 + 2L_xi + 128L^6 + 8 L_xi^{3/2}]
/// with mu2 = mu2_bound(alpha, beta).
double mu4_bound(double L, double alpha, double beta, double L_xi);

/// sqrt(1 - 2 alpha eta + 32 L_dagger eta^2), without any cap check.
double contraction_rate(double alpha, double L_dagger, double eta);

struct Proposition3Constants {
  double D = 0.0;
  double rho = 0.0;
  double D_first = 0.0;   // (64/alpha)(...)^{1/2} branch
  double D_second = 0.0;  // (8/alpha)(...) branch
  StepSizeBounds caps;

  /// Fourth-moment distance bound rho^k |theta_0 - theta*|^2 + D.
  double nonasymptotic_bound(std::size_t k, double init_dist) const;
  /// L_phi sqrt(D).
  double bias_bound(double L_phi) const;
};

/// Throws PreconditionError naming the binding cap when eta is not below
/// min(1, 1/(10 L_bar), c_L_alpha, c_dagger).
Proposition3Constants proposition3_constants(double L, double alpha, double beta, double L_xi,
                                             double theta_star_norm, double eta);

/// C = 2(3L^2 + 3 L_xi^{1/2}(1+q^2))(mu2 + |t*|^2) + 3L^2 |t*|^2 + 5L^2 + 2 L_xi^{1/2}(1+q^2).
double theorem4_C(double L, double L_xi, double alpha, double beta, double mu2,
                  double theta_star_norm);

/// L_phi (C eta / delta + g^{-1}(C eta)).
double theorem4_bias_bound(double C, double eta, double delta, const LocalGrowthFn& g,
                           double L_phi = 1.0);

/// Convex case: L_phi C eta.
double convex_bias_bound(double C, double eta, double L_phi = 1.0);

struct Theorem5Constants {
  double m = 0.0;
  double M = 0.0;
  double bias_bound = 0.0;  // g^{-1}(2M eta/(2 - L_tilde eta)) + 2M eta/(2 - L_tilde eta)
};

/// m and M alone (no step size involved).
Theorem5Constants theorem5_moments(double L, double L_tilde, double L_xi, double alpha, double beta,
                                   double mu2);

/// m and M from the displayed formulas (mu2 may be empirical or the bound).
/// Throws PreconditionError when eta >= 2 / L_tilde, or eta >= step_cap when a
/// cap is supplied.
Theorem5Constants theorem5_constants(double L, double L_tilde, double L_xi, double alpha,
                                     double beta, double mu2, double eta, const LocalGrowthFn& g,
                                     std::optional<double> step_cap = std::nullopt);

/// g^{-1}(u) + u with u = 2 M eta / (2 - L_tilde eta); only eta < 2/L_tilde is checked.
double theorem5_bias_bound(double M, double L_tilde, double eta, const LocalGrowthFn& g);

/// Everything the constants calculator reports for one parameter set.
struct BiasConstants {
  StepSizeBounds caps;
  double mu2 = 0.0;
  double mu4 = 0.0;
  std::optional<double> D;
  std::optional<double> rho;
  double C = 0.0;
  std::optional<double> M;
  std::optional<double> m;
};

// ---------------------------------------------------------------------------
// Sampling-based certificates
// ---------------------------------------------------------------------------

struct Violation {
  Vector theta;
  double lhs;
  double rhs;
};

struct LinearGrowthCertificate {
  double L_hat = 0.0;
  Vector argmax;
  std::size_t n_samples = 0;
  double radius = 0.0;
};

/// L_hat = max |grad f(t)| / (1 + |t|) over uniform samples in the ball of the
/// given radius plus a log-spaced shell out to 10 radius. An empirical lower
/// certificate for L.
LinearGrowthCertificate check_linear_growth(const Objective& objective, double radius,
                                            std::size_t n_samples, RngStream& stream);

struct DissipativityCertificate {
  double alpha = 0.0;
  double beta = 0.0;
  bool certified = false;
  Vector worst_theta;  // sample attaining beta (or the worst tail offender)
  std::size_t n_samples = 0;
  double radius = 0.0;
};

/// Fits beta_hat = max over samples of (alpha |t|^2 - <t, grad f(t)>)_+.
/// A candidate alpha is certified when the slack does not grow into the far
/// shell. With `candidate_alpha` only that value is tested; otherwise the
/// declared alpha and a log grid on [1e-4, 1e2] are scanned and the largest
/// certified value is returned.
DissipativityCertificate check_dissipativity(const Objective& objective, double radius,
                                             std::size_t n_samples, RngStream& stream,
                                             std::optional<double> candidate_alpha = std::nullopt);

/// Number of points violating <t, grad f(t)> >= alpha |t|^2 - beta.
std::size_t count_dissipativity_violations(const Objective& objective, double alpha, double beta,
                                           double radius, std::size_t n_samples, RngStream& stream);

enum class LocalCondition { localized_dissipativity, lojasiewicz };

struct LocalGrowthCertificate {
  LocalCondition condition = LocalCondition::localized_dissipativity;
  std::string g_description;
  double R = 0.0;
  std::size_t n_samples = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // first few offenders
  bool certified = false;
};

/// Checks the local condition inside |t - t*| < R and its tail counterpart
/// outside (alpha/beta for localized dissipativity, gamma for Lojasiewicz;
/// taken from the objective's constants unless overridden).
LocalGrowthCertificate check_local_growth(const Objective& objective, LocalCondition condition,
                                          const LocalGrowthFn& g, double R, std::size_t n_samples,
                                          RngStream& stream,
                                          std::optional<double> tail_constant = std::nullopt);

/// Uniform sample in the ball of radius r around `center`.
Vector sample_ball(const Vector& center, double r, RngStream& stream);

}  // namespace sgdchain
