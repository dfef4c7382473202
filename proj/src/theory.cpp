#include "sgdchain/theory.hpp"

#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgdchain {

namespace {

void require_positive(const char* what, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive");
}

void require_non_negative(const char* what, double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + " must be non-negative");
  }
}

}  // namespace

double max_step_size(double L, double alpha, double L_xi) {
  require_positive("L", L);
  require_positive("alpha", alpha);
  require_non_negative("L_xi", L_xi);
  const double a = 3.0 * L * L + L_xi;
  return (alpha - std::sqrt(std::max(alpha * alpha - a, 0.0))) / a;
}

double l_dagger(double L_bar, double L_xi, double beta_over_alpha) {
  require_positive("L_bar", L_bar);
  require_non_negative("L_xi", L_xi);
  require_non_negative("beta/alpha", beta_over_alpha);
  const double q = beta_over_alpha;
  const double t1 = std::pow(L_xi, 0.75) * (1.0 + q * q * q);
  const double t2 = std::sqrt(L_xi) * (1.0 + q * q);
  const double t3 = L_xi * (1.0 + q * q * q * q);
  return L_bar * L_bar + 16.0 * std::max({t1, t2, t3});
}

double c_dagger(double L_bar, double alpha, double L_xi, double beta_over_alpha) {
  require_positive("alpha", alpha);
  const double ld = l_dagger(L_bar, L_xi, beta_over_alpha);
  return (alpha - std::sqrt(std::max(alpha * alpha - 16.0 * ld, 0.0))) / (64.0 * ld);
}

StepSizeBounds step_size_bounds(double L, double alpha, double beta, double L_xi,
                                double theta_star_norm) {
  require_non_negative("beta", beta);
  require_non_negative("|theta*|", theta_star_norm);
  StepSizeBounds b;
  b.c_L_alpha = max_step_size(L, alpha, L_xi);
  b.L_bar = L * (1.0 + theta_star_norm);
  b.L_dagger = l_dagger(b.L_bar, L_xi, beta / alpha);
  b.c_dagger = c_dagger(b.L_bar, alpha, L_xi, beta / alpha);

  const std::pair<double, const char*> caps[] = {{1.0, "1"},
                                                 {1.0 / (10.0 * b.L_bar), "1/(10 L_bar)"},
                                                 {b.c_L_alpha, "c_L_alpha"},
                                                 {b.c_dagger, "c_dagger"}};
  const auto* best = std::min_element(std::begin(caps), std::end(caps),
                                      [](const auto& x, const auto& y) { return x.first < y.first; });
  b.overall_max = best->first;
  b.binding = best->second;
  return b;
}

// ---------------------------------------------------------------------------

double mu2_bound(double alpha, double beta) {
  require_positive("alpha", alpha);
  require_non_negative("beta", beta);
  return 3.0 + 2.0 * beta / alpha;
}

double mu4_bound(double L, double alpha, double beta, double L_xi) {
  require_positive("L", L);
  require_non_negative("L_xi", L_xi);
  const double mu2 = mu2_bound(alpha, beta);
  const double L2 = L * L;
  const double bracket = (beta + 6.0 * L2 + 3.0 * std::sqrt(L_xi) + 16.0) * mu2 + 16.0 * L2 * L2 +
                         2.0 * L_xi + 128.0 * L2 * L2 * L2 + 8.0 * std::pow(L_xi, 1.5);
  return 8.0 / (7.0 * alpha) * bracket;
}

double contraction_rate(double alpha, double L_dagger, double eta) {
  const double r2 = 1.0 - 2.0 * alpha * eta + 32.0 * L_dagger * eta * eta;
  return std::sqrt(std::max(r2, 0.0));
}

double Proposition3Constants::nonasymptotic_bound(std::size_t k, double init_dist) const {
  return std::pow(rho, static_cast<double>(k)) * init_dist * init_dist + D;
}

double Proposition3Constants::bias_bound(double L_phi) const { return L_phi * std::sqrt(D); }

Proposition3Constants proposition3_constants(double L, double alpha, double beta, double L_xi,
                                             double theta_star_norm, double eta) {
  require_positive("eta", eta);
  Proposition3Constants out;
  out.caps = step_size_bounds(L, alpha, beta, L_xi, theta_star_norm);
  if (!(eta < out.caps.overall_max)) {
    throw PreconditionError("eta = " + text::format_double(eta) + " is not below the step-size cap " +
                            text::format_double(out.caps.overall_max) + " (binding: " +
                            out.caps.binding + ")");
  }

  const double q = beta / alpha;
  const double Lb = out.caps.L_bar;
  const double ts = theta_star_norm;

  const double first_inner = std::pow(Lb, 4) + L_xi * (1.0 + std::pow(q, 4)) + 512.0 * std::pow(Lb, 6) +
                             23.0 * std::pow(L_xi, 1.5) * (1.0 + std::pow(q, 6));
  out.D_first = 64.0 / alpha * std::sqrt(first_inner);

  const double sa = std::sqrt(alpha);
  const double coupling = sa + 2.0 * L / sa;
  const double second_inner = beta + coupling * coupling * ts + L * ts + 6.0 * Lb * Lb +
                              9.0 * std::sqrt(L_xi) * (1.0 + q * q) + 16.0;
  out.D_second = 8.0 / alpha * second_inner;
  out.D = std::max(out.D_first, out.D_second);

  out.rho = contraction_rate(alpha, out.caps.L_dagger, eta);
  if (!(out.rho > 0.0 && out.rho < 1.0)) {
    throw PreconditionError("contraction rate rho = " + text::format_double(out.rho) +
                            " is outside (0, 1)");
  }
  return out;
}

double theorem4_C(double L, double L_xi, double alpha, double beta, double mu2,
                  double theta_star_norm) {
  require_positive("L", L);
  require_positive("alpha", alpha);
  require_non_negative("L_xi", L_xi);
  require_non_negative("beta", beta);
  require_non_negative("mu2", mu2);
  require_non_negative("|theta*|", theta_star_norm);
  const double q = beta / alpha;
  const double noise = std::sqrt(L_xi) * (1.0 + q * q);
  const double L2 = L * L;
  const double ts2 = theta_star_norm * theta_star_norm;
  return 2.0 * (3.0 * L2 + 3.0 * noise) * (mu2 + ts2) + 3.0 * L2 * ts2 + 5.0 * L2 + 2.0 * noise;
}

double theorem4_bias_bound(double C, double eta, double delta, const LocalGrowthFn& g,
                           double L_phi) {
  require_positive("delta", delta);
  require_positive("eta", eta);
  return L_phi * (C * eta / delta + g.inverse(C * eta));
}

double convex_bias_bound(double C, double eta, double L_phi) {
  require_positive("eta", eta);
  return L_phi * C * eta;
}

double theorem5_bias_bound(double M, double L_tilde, double eta, const LocalGrowthFn& g) {
  require_positive("L_tilde", L_tilde);
  require_positive("eta", eta);
  if (!(eta < 2.0 / L_tilde)) {
    throw PreconditionError("eta = " + text::format_double(eta) + " is not below 2/L_tilde = " +
                            text::format_double(2.0 / L_tilde));
  }
  const double u = 2.0 * M * eta / (2.0 - L_tilde * eta);
  return g.inverse(u) + u;
}

Theorem5Constants theorem5_moments(double L, double L_tilde, double L_xi, double alpha, double beta,
                                   double mu2) {
  require_positive("L", L);
  require_positive("L_tilde", L_tilde);
  require_positive("alpha", alpha);
  require_non_negative("L_xi", L_xi);
  require_non_negative("beta", beta);
  require_non_negative("mu2", mu2);
  Theorem5Constants out;
  const double L2 = L * L;
  out.m = 8.0 / (7.0 * alpha) *
          ((beta + 6.0 * L2 + 3.0 * std::sqrt(L_xi) + 16.0) * mu2 + 16.0 * L2 * L2 + 2.0 * L_xi +
           128.0 * L2 * L2 * L2 + 8.0 * std::pow(L_xi, 1.5));
  const double lsum = L + std::sqrt(L_xi) + std::pow(L_xi, 0.25);
  out.M = 12.0 * L_tilde * lsum * lsum * (1.0 + out.m + std::pow(out.m, 0.75) + mu2);
  return out;
}

Theorem5Constants theorem5_constants(double L, double L_tilde, double L_xi, double alpha,
                                     double beta, double mu2, double eta, const LocalGrowthFn& g,
                                     std::optional<double> step_cap) {
  if (step_cap && !(eta < *step_cap)) {
    throw PreconditionError("eta = " + text::format_double(eta) + " is not below the step-size cap " +
                            text::format_double(*step_cap));
  }
  auto out = theorem5_moments(L, L_tilde, L_xi, alpha, beta, mu2);
  out.bias_bound = theorem5_bias_bound(out.M, L_tilde, eta, g);
  return out;
}

// ---------------------------------------------------------------------------

Vector sample_ball(const Vector& center, double r, RngStream& stream) {
  const auto d = center.size();
  Vector dir(d);
  double n = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = stream.normal();
    n = dir.norm();
  } while (n == 0.0);
  const double radius = r * std::pow(stream.uniform(), 1.0 / static_cast<double>(d));
  return center + (radius / n) * dir;
}

namespace {

Vector sample_sphere(const Vector& center, double r, RngStream& stream) {
  const auto d = center.size();
  Vector dir(d);
  double n = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = stream.normal();
    n = dir.norm();
  } while (n == 0.0);
  return center + (r / n) * dir;
}

// n_ball points uniform in the ball of radius R plus n_shell points with
// radii log-spaced on [R, 10 R].
std::vector<Vector> ball_and_shell(const Vector& center, double R, std::size_t n_ball,
                                   std::size_t n_shell, RngStream& stream) {
  std::vector<Vector> pts;
  pts.reserve(n_ball + n_shell);
  // Volume-uniform draws concentrate near the boundary when d is large, so
  // every second draw takes a radius uniform on [0, R] to probe the interior.
  for (std::size_t i = 0; i < n_ball; ++i) {
    pts.push_back(i % 2 == 0 ? sample_ball(center, R, stream)
                             : sample_sphere(center, R * stream.uniform(), stream));
  }
  for (std::size_t i = 0; i < n_shell; ++i) {
    const double t = n_shell == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n_shell - 1);
    pts.push_back(sample_sphere(center, R * std::pow(10.0, t), stream));
  }
  return pts;
}

std::size_t shell_count(std::size_t n_samples) { return std::max<std::size_t>(1, n_samples / 4); }

}  // namespace

LinearGrowthCertificate check_linear_growth(const Objective& objective, double radius,
                                            std::size_t n_samples, RngStream& stream) {
  require_positive("radius", radius);
  if (n_samples < 1) throw InvalidArgument("check_linear_growth: need at least one sample");
  const Vector origin = Vector::Zero(static_cast<Eigen::Index>(objective.dim()));
  const auto pts = ball_and_shell(origin, radius, n_samples, shell_count(n_samples), stream);

  LinearGrowthCertificate cert;
  cert.n_samples = pts.size();
  cert.radius = radius;
  Vector g(origin.size());
  for (const auto& p : pts) {
    objective.gradient(p, g);
    const double ratio = g.norm() / (1.0 + p.norm());
    if (!std::isfinite(ratio)) throw EvaluationError("check_linear_growth: non-finite gradient");
    if (ratio > cert.L_hat || cert.argmax.size() == 0) {
      cert.L_hat = ratio;
      cert.argmax = p;
    }
  }
  return cert;
}

namespace {

struct SlackSample {
  double r2;
  double inner;  // <t, grad f(t)>
  bool far;      // in the outer half of the shell
};

std::vector<SlackSample> dissipativity_samples(const Objective& objective, double radius,
                                               std::size_t n_samples, RngStream& stream,
                                               std::vector<Vector>& pts) {
  const Vector origin = Vector::Zero(static_cast<Eigen::Index>(objective.dim()));
  pts = ball_and_shell(origin, radius, n_samples, shell_count(n_samples), stream);
  const double far_radius = radius * std::sqrt(10.0);
  std::vector<SlackSample> out;
  out.reserve(pts.size());
  Vector g(origin.size());
  for (const auto& p : pts) {
    objective.gradient(p, g);
    const double inner = p.dot(g);
    if (!std::isfinite(inner)) throw EvaluationError("check_dissipativity: non-finite gradient");
    out.push_back({p.squaredNorm(), inner, p.norm() >= far_radius});
  }
  return out;
}

}  // namespace

DissipativityCertificate check_dissipativity(const Objective& objective, double radius,
                                             std::size_t n_samples, RngStream& stream,
                                             std::optional<double> candidate_alpha) {
  require_positive("radius", radius);
  if (n_samples < 1) throw InvalidArgument("check_dissipativity: need at least one sample");
  std::vector<Vector> pts;
  const auto samples = dissipativity_samples(objective, radius, n_samples, stream, pts);

  std::vector<double> candidates;
  if (candidate_alpha) {
    require_positive("candidate alpha", *candidate_alpha);
    candidates.push_back(*candidate_alpha);
  } else {
    if (objective.constants().alpha > 0.0) candidates.push_back(objective.constants().alpha);
    for (int i = 0; i <= 60; ++i) candidates.push_back(std::pow(10.0, -4.0 + i / 10.0));
  }

  auto evaluate = [&](double alpha) {
    DissipativityCertificate c;
    c.alpha = alpha;
    c.n_samples = samples.size();
    c.radius = radius;
    double near_max = -std::numeric_limits<double>::infinity();
    double far_max = -std::numeric_limits<double>::infinity();
    std::size_t near_arg = 0;
    std::size_t far_arg = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double slack = alpha * samples[i].r2 - samples[i].inner;
      if (samples[i].far) {
        if (slack > far_max) far_max = slack, far_arg = i;
      } else if (slack > near_max) {
        near_max = slack, near_arg = i;
      }
    }
    // The tail condition holds on the sample when the far shell never needs a
    // larger offset than the bulk does.
    c.certified = far_max <= std::max(near_max, 0.0);
    c.beta = std::max({near_max, far_max, 0.0});
    c.worst_theta = pts[far_max > near_max ? far_arg : near_arg];
    return c;
  };

  std::optional<DissipativityCertificate> best;
  DissipativityCertificate last;
  for (double a : candidates) {
    auto c = evaluate(a);
    if (c.certified && (!best || c.alpha > best->alpha)) best = c;
    last = c;
  }
  if (best) return *best;
  // Nothing certified: report the smallest candidate's offender.
  return candidate_alpha ? last : evaluate(*std::min_element(candidates.begin(), candidates.end()));
}

std::size_t count_dissipativity_violations(const Objective& objective, double alpha, double beta,
                                           double radius, std::size_t n_samples, RngStream& stream) {
  std::vector<Vector> pts;
  const auto samples = dissipativity_samples(objective, radius, n_samples, stream, pts);
  std::size_t count = 0;
  for (const auto& s : samples) {
    const double rhs = alpha * s.r2 - beta;
    if (s.inner < rhs - 1e-10 * std::max(1.0, std::abs(rhs))) ++count;
  }
  return count;
}

LocalGrowthCertificate check_local_growth(const Objective& objective, LocalCondition condition,
                                          const LocalGrowthFn& g, double R, std::size_t n_samples,
                                          RngStream& stream, std::optional<double> tail_constant) {
  require_positive("R", R);
  if (!objective.known_min()) {
    throw PreconditionError("objective '" + objective.name() +
                            "' has no known minimizer; local growth cannot be checked");
  }
  const Vector center = objective.known_min()->coords();
  const double f_star = objective.value(center);
  const auto& k = objective.constants();

  double alpha = k.alpha;
  double beta = k.beta;
  double gamma = 0.0;
  if (condition == LocalCondition::localized_dissipativity) {
    if (tail_constant) alpha = *tail_constant;
  } else {
    if (tail_constant) {
      gamma = *tail_constant;
    } else if (k.gamma) {
      gamma = *k.gamma;
    } else {
      throw PreconditionError("objective '" + objective.name() + "' declares no Lojasiewicz constant");
    }
  }

  LocalGrowthCertificate cert;
  cert.condition = condition;
  cert.g_description = g.describe();
  cert.R = R;

  const std::size_t n_in = std::max<std::size_t>(1, n_samples / 2);
  const std::size_t n_out = std::max<std::size_t>(1, n_samples - n_in);
  const auto pts = ball_and_shell(center, R, n_in, n_out, stream);
  cert.n_samples = pts.size();

  Vector grad(center.size());
  for (const auto& p : pts) {
    objective.gradient(p, grad);
    const Vector diff = p - center;
    const double dist = diff.norm();
    const bool inside = dist < R;
    double lhs = 0.0;
    double rhs = 0.0;
    if (condition == LocalCondition::localized_dissipativity) {
      lhs = grad.dot(diff);
      rhs = inside ? g(dist) : alpha * dist * dist - beta;
    } else {
      const double gap = std::max(objective.value(p) - f_star, 0.0);
      lhs = grad.squaredNorm();
      rhs = inside ? g(gap) : gamma * gap;
    }
    if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
      throw EvaluationError("check_local_growth: non-finite evaluation");
    }
    if (lhs < rhs - 1e-10 * std::max(1.0, std::abs(rhs))) {
      ++cert.violation_count;
      if (cert.violations.size() < 20) cert.violations.push_back({p, lhs, rhs});
    }
  }
  cert.certified = cert.violation_count == 0;
  return cert;
}

}  // namespace sgdchain
