#pragma once

// Monte Carlo ensembles, normality diagnostics, asymptotic-variance
// estimators, confidence intervals and bias sweeps.

#include "sgdchain/core.hpp"
#include "sgdchain/noise.hpp"
#include "sgdchain/sgd.hpp"
#include "sgdchain/theory.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sgdchain {

/// One or more replications failed. Carries every failing stream id.
class EnsembleError : public Error {
 public:
  explicit EnsembleError(std::vector<ReplicationFailure> failures);
  const std::vector<ReplicationFailure>& failures() const { return failures_; }
  bool any_divergence() const;

 private:
  std::vector<ReplicationFailure> failures_;
};

/// Step-size caps for running `objective` under `noise`. L_xi comes from the
/// noise model, falling back to the objective's declared value and then to 0
/// (the largest cap compatible with an unknown L_xi). |theta*| defaults to the
/// known minimizer's norm, or 0.
StepSizeBounds chain_step_size_bounds(const Objective& objective, const NoiseModel& noise,
                                      std::optional<double> theta_star_norm = std::nullopt);

// ---------------------------------------------------------------------------
// Ensembles and normality
// ---------------------------------------------------------------------------

struct EnsembleSnapshot {
  std::string objective;
  std::string noise;
  std::string test_function;
  double eta = 0.0;
  std::size_t n_iters = 0;
  std::size_t burn_in = 0;
  Point theta0 = Point::zeros(1);
  std::uint64_t base_seed = 0;
};

struct McEnsemble {
  std::vector<double> values;  // n^{-1/2} sum phi(theta_k), one per replication
  std::vector<double> trajectory_means;
  std::vector<std::uint64_t> stream_ids;
  EnsembleSnapshot config;

  std::size_t size() const { return values.size(); }
  double mean() const;
  double sd() const;  // sample standard deviation (N - 1 denominator)
};

struct ExperimentOptions {
  std::size_t workers = 1;
};

/// N independent trajectories with RngStream(base_seed, i), i = 0..N-1.
/// config.seed is ignored. Throws EnsembleError listing failing streams.
McEnsemble clt_experiment(const Objective& objective, const NoiseModel& noise,
                          const SgdConfig& config, const TestFunction& phi, std::size_t N,
                          std::uint64_t base_seed, const ExperimentOptions& options = {});

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

/// Freedman-Diaconis bin width 2 IQR N^{-1/3} (Scott's rule when IQR = 0).
Histogram freedman_diaconis_histogram(std::span<const double> values);

struct NormalityReport {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_stat = 0.0;
  double mc_critical_value = 0.0;
  double level = 0.05;
  double skew_tol = 0.15;
  double kurt_tol = 0.3;
  bool pass = false;
  Histogram histogram;
};

/// Sample skewness m3 / m2^{3/2} (biased central moments).
double sample_skewness(std::span<const double> values);
/// Sample excess kurtosis m4 / m2^2 - 3 (biased central moments).
double sample_excess_kurtosis(std::span<const double> values);

/// sup |F_N - Phi((x - mean)/sd)| with mean and sd fitted from the sample.
double ks_normal_fitted(std::span<const double> values);

/// 1 - level quantile of the fitted-parameter KS statistic under normality,
/// from `reps` simulated samples of size n. Deterministic; cached per
/// (n, level, reps).
double lilliefors_critical_value(std::size_t n, double level = 0.05, std::size_t reps = 2000);

NormalityReport normality_test(std::span<const double> values, double skew_tol = 0.15,
                               double kurt_tol = 0.3, double level = 0.05);
inline NormalityReport normality_test(const McEnsemble& ensemble, double skew_tol = 0.15,
                                      double kurt_tol = 0.3, double level = 0.05) {
  return normality_test(ensemble.values, skew_tol, kurt_tol, level);
}

struct TwoSampleKs {
  double statistic = 0.0;
  double critical_value = 0.0;
  double level = 0.05;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool pass = false;  // statistic below the critical value
};

/// Two-sample KS with the asymptotic critical value
/// sqrt(-ln(level/2)/2) sqrt((n1 + n2)/(n1 n2)).
TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b,
                          double level = 0.05);

// ---------------------------------------------------------------------------
// Means, variances, intervals
// ---------------------------------------------------------------------------

/// Power of two nearest to sqrt(n).
std::size_t default_batch_len(std::size_t n);

/// batch_len times the sample variance of floor(n / batch_len) batch means.
/// Requires at least 10 whole batches.
double asymp_var_batch_means(std::span<const double> series, std::size_t batch_len);
/// Uses the stored values of test function `test_index`.
double asymp_var_batch_means(const Trajectory& trajectory, std::size_t test_index,
                             std::size_t batch_len);

/// Sample variance of N >= 30 scaled partial sums.
double asymp_var_replication(std::span<const double> scaled_sums);

/// mean -/+ z_{(1+level)/2} sqrt(sigma2 / n).
std::pair<double, double> confidence_interval(double mean, double sigma2, std::size_t n,
                                              double level);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  double sigma2 = 0.0;
  std::size_t batch_len = 0;
  std::size_t n = 0;
};

/// Long-run average of phi over the recording window of one chain, with a
/// batch-means standard error. Needs n_recorded >= 1000.
MeanEstimate estimate_mean(const Objective& objective, const NoiseModel& noise,
                           const SgdConfig& config, const TestFunction& phi,
                           std::optional<std::size_t> batch_len = std::nullopt);

// ---------------------------------------------------------------------------
// Bias sweeps
// ---------------------------------------------------------------------------

enum class Comparison { increasing, inconclusive, decreasing };
std::string to_string(Comparison c);

struct BiasTrace {
  double eta = 0.0;
  std::vector<std::size_t> iterations;
  std::vector<double> abs_bias;  // |ensemble mean of phi(theta_k) - phi(theta*)|
};

struct BiasCurve {
  std::vector<double> etas;
  std::vector<double> pi_hat;
  std::vector<double> bias_estimates;  // pi_hat - phi(theta*)
  std::vector<double> standard_errors;
  double phi_star = 0.0;
  double fitted_exponent = 0.0;
  double intercept = 0.0;
  std::size_t fit_points = 0;
  bool convex_in_loglog = false;
  std::vector<Comparison> comparisons;  // adjacent pairs at 2 combined SE
  std::size_t n_iters = 0;
  std::size_t burn_in = 0;
  std::size_t replications = 0;
  std::uint64_t base_seed = 0;
  std::string objective;
  std::string noise;
  std::string test_function;
  std::vector<BiasTrace> traces;

  bool strictly_increasing() const;
};

struct BiasSweepOptions {
  std::size_t workers = 1;
  bool force = false;               // allow etas above the step-size cap
  std::size_t trace_points = 100;   // log-spaced iterations per eta; 0 disables
  std::optional<Point> theta0;      // default: the origin
};

/// Least-squares fit of log|bias| = intercept + p log(eta). With four or more
/// points and a convex log-log curve only the three smallest etas are used.
struct LogLogFit {
  double exponent = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  bool convex = false;
};
LogLogFit fit_loglog(std::span<const double> etas, std::span<const double> bias);

/// For each eta, N replications of n_iters steps (stream ids 0..N-1 under
/// mix_seed(base_seed, eta index)); pi_hat is the average of the trajectory
/// means and the SE their sd / sqrt(N).
BiasCurve bias_sweep(const Objective& objective, const NoiseModel& noise, const TestFunction& phi,
                     std::span<const double> etas, std::size_t n_iters, std::size_t burn_in,
                     std::size_t N, std::uint64_t base_seed, const BiasSweepOptions& options = {});

// ---------------------------------------------------------------------------
// Forgetting of the initial condition
// ---------------------------------------------------------------------------

struct ForgettingReport {
  std::size_t horizon = 0;
  double sigma2 = 0.0;  // long-run variance of phi used for the SE scale
  std::vector<double> running_gap;  // |mean_k phi(theta) - mean_k phi(theta')|, k = 1..horizon
  std::vector<double> threshold;    // factor * sqrt(sigma2 / k)
  std::optional<std::size_t> crossing;  // first k with gap below threshold
  double final_path_distance = 0.0;     // |theta_horizon - theta'_horizon|
};

/// Runs two chains from theta0 and theta0_alt driven by the same random
/// stream and compares running means of phi against factor Monte Carlo SEs.
/// sigma2 is estimated by batch means on a separate chain of
/// `variance_run_length` steps.
ForgettingReport matched_forgetting(const Objective& objective, const NoiseModel& noise,
                                    double eta, const Point& theta0, const Point& theta0_alt,
                                    const TestFunction& phi, std::size_t horizon,
                                    std::uint64_t seed, double factor = 10.0,
                                    std::size_t variance_run_length = 1u << 18);

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

void write_ensemble_csv(const McEnsemble& ensemble, const std::filesystem::path& path);
void write_bias_trace_csv(const BiasCurve& curve, const std::filesystem::path& path);

std::string normality_json(const NormalityReport& report);
std::string two_sample_json(const TwoSampleKs& ks, const std::string& label_a,
                            const std::string& label_b);
std::string bias_curve_json(const BiasCurve& curve);

/// Writes `text` followed by a newline, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sgdchain
