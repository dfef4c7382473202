#include "sgdchain/stats.hpp"

#include "text.hpp"

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

namespace sgdchain {

namespace {

using nlohmann::json;

// Null ensembles for the Lilliefors critical value come from this fixed seed
// so every report with the same N quotes the same threshold.
constexpr std::uint64_t kLillieforsSeed = 0x4c696c6c69656672ULL;

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

// Biased central moments m2, m3, m4.
std::tuple<double, double, double> central_moments(std::span<const double> v) {
  const double m = mean_of(v);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double c = x - m;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  const double n = static_cast<double>(v.size());
  return {m2 / n, m3 / n, m4 / n};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_sorted_fitted(const std::vector<double>& sorted) {
  const std::span<const double> s(sorted);
  const double m = mean_of(s);
  const double sd = std::sqrt(variance_of(s));
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = normal_cdf((sorted[i] - m) / sd);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

void require_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("level must lie in (0, 1), got " + text::format_double(level));
  }
}

std::string trajectory_description(const TestFunction& phi) { return phi.label(); }

json histogram_json(const Histogram& h) {
  return json{{"edges", h.edges}, {"counts", h.counts}};
}

}  // namespace

EnsembleError::EnsembleError(std::vector<ReplicationFailure> failures)
    : Error([&] {
        std::string msg = std::to_string(failures.size()) + " replication(s) failed; stream ids:";
        for (const auto& f : failures) msg += " " + std::to_string(f.index);
        if (!failures.empty()) msg += " (first: " + failures.front().message + ")";
        return msg;
      }()),
      failures_(std::move(failures)) {}

bool EnsembleError::any_divergence() const {
  return std::any_of(failures_.begin(), failures_.end(), [](const auto& f) { return f.divergence; });
}

StepSizeBounds chain_step_size_bounds(const Objective& objective, const NoiseModel& noise,
                                      std::optional<double> theta_star_norm) {
  const auto& k = objective.constants();
  double L_xi = 0.0;
  if (const auto from_noise = noise.moment_constant(objective.dim())) {
    L_xi = *from_noise;
  } else if (k.L_xi) {
    L_xi = *k.L_xi;
  }
  double ts = 0.0;
  if (theta_star_norm) {
    ts = *theta_star_norm;
  } else if (objective.known_min()) {
    ts = objective.known_min()->norm();
  }
  return step_size_bounds(k.L, k.alpha, k.beta, L_xi, ts);
}

// ---------------------------------------------------------------------------

double McEnsemble::mean() const {
  if (values.empty()) throw PreconditionError("empty ensemble");
  return mean_of(values);
}

double McEnsemble::sd() const {
  if (values.size() < 2) throw PreconditionError("ensemble needs at least two values");
  return std::sqrt(variance_of(values));
}

McEnsemble clt_experiment(const Objective& objective, const NoiseModel& noise,
                          const SgdConfig& config, const TestFunction& phi, std::size_t N,
                          std::uint64_t base_seed, const ExperimentOptions& options) {
  if (N < 2) throw InvalidArgument("an ensemble needs N >= 2 replications, got " + std::to_string(N));
  SgdConfig cfg = config;
  cfg.seed = base_seed;
  cfg.validate();

  McEnsemble out;
  out.values.assign(N, 0.0);
  out.trajectory_means.assign(N, 0.0);
  out.stream_ids.resize(N);
  std::iota(out.stream_ids.begin(), out.stream_ids.end(), std::uint64_t{0});
  out.config = {objective.name(), noise.describe(), trajectory_description(phi), cfg.eta,
                cfg.n_iters,      cfg.burn_in,      cfg.theta0,                 base_seed};

  const TestFunction fns[] = {phi};
  auto failures = parallel_for_indices(N, options.workers, [&](std::size_t i) {
    TrajectoryOptions topt;
    topt.stream_id = i;
    const auto traj = run_trajectory(objective, noise, cfg, fns, topt);
    out.values[i] = scaled_partial_sum(traj, 0);
    out.trajectory_means[i] = traj.mean(0);
  });
  if (!failures.empty()) throw EnsembleError(std::move(failures));
  return out;
}

// ---------------------------------------------------------------------------

double sample_skewness(std::span<const double> values) {
  if (values.size() < 3) throw PreconditionError("skewness needs at least three values");
  const auto [m2, m3, m4] = central_moments(values);
  (void)m4;
  if (m2 == 0.0) throw PreconditionError("skewness of a constant sample is undefined");
  return m3 / std::pow(m2, 1.5);
}

double sample_excess_kurtosis(std::span<const double> values) {
  if (values.size() < 4) throw PreconditionError("kurtosis needs at least four values");
  const auto [m2, m3, m4] = central_moments(values);
  (void)m3;
  if (m2 == 0.0) throw PreconditionError("kurtosis of a constant sample is undefined");
  return m4 / (m2 * m2) - 3.0;
}

double ks_normal_fitted(std::span<const double> values) {
  if (values.size() < 2) throw PreconditionError("KS statistic needs at least two values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw PreconditionError("KS statistic of a constant sample");
  return ks_sorted_fitted(sorted);
}

double lilliefors_critical_value(std::size_t n, double level, std::size_t reps) {
  require_level(level);
  if (n < 2 || reps < 10) throw InvalidArgument("lilliefors_critical_value: n >= 2 and reps >= 10");

  static std::mutex mutex;
  static std::map<std::tuple<std::size_t, double, std::size_t>, double> cache;
  const auto key = std::make_tuple(n, level, reps);
  {
    std::lock_guard lock(mutex);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
  }

  std::vector<double> stats(reps);
  std::vector<double> sample(n);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream stream(mix_seed(kLillieforsSeed, n), r);
    for (auto& x : sample) x = stream.normal();
    std::sort(sample.begin(), sample.end());
    stats[r] = ks_sorted_fitted(sample);
  }
  std::sort(stats.begin(), stats.end());
  // Empirical (1 - level) quantile, type 1.
  const auto idx = static_cast<std::size_t>(
      std::ceil((1.0 - level) * static_cast<double>(reps)) - 1.0);
  const double crit = stats[std::min(idx, reps - 1)];

  std::lock_guard lock(mutex);
  cache.emplace(key, crit);
  return crit;
}

Histogram freedman_diaconis_histogram(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("histogram of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const double n = static_cast<double>(sorted.size());

  Histogram h;
  if (lo == hi) {
    h.edges = {lo, hi};
    h.counts = {sorted.size()};
    return h;
  }
  auto quantile = [&](double p) {
    const double pos = p * (n - 1.0);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] + frac * (sorted[i + 1] - sorted[i]) : sorted[i];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double width = 2.0 * iqr / std::cbrt(n);
  if (!(width > 0.0)) width = 3.49 * std::sqrt(variance_of(sorted)) / std::cbrt(n);
  const auto bins = static_cast<std::size_t>(
      std::clamp(std::ceil((hi - lo) / width), 1.0, 100000.0));
  width = (hi - lo) / static_cast<double>(bins);

  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double x : sorted) {
    const auto b = static_cast<std::size_t>((x - lo) / width);
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

NormalityReport normality_test(std::span<const double> values, double skew_tol, double kurt_tol,
                               double level) {
  if (values.size() < 100) {
    throw PreconditionError("normality_test needs N >= 100, got " + std::to_string(values.size()));
  }
  if (!(skew_tol > 0.0) || !(kurt_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
  require_level(level);

  NormalityReport r;
  r.n = values.size();
  r.mean = mean_of(values);
  r.sd = std::sqrt(variance_of(values));
  if (!(r.sd > 0.0)) throw PreconditionError("normality_test: degenerate ensemble (zero variance)");
  r.skewness = sample_skewness(values);
  r.excess_kurtosis = sample_excess_kurtosis(values);
  r.ks_stat = ks_normal_fitted(values);
  r.mc_critical_value = lilliefors_critical_value(r.n, level);
  r.level = level;
  r.skew_tol = skew_tol;
  r.kurt_tol = kurt_tol;
  r.pass = r.ks_stat < r.mc_critical_value && std::abs(r.skewness) < skew_tol &&
           std::abs(r.excess_kurtosis) < kurt_tol;
  r.histogram = freedman_diaconis_histogram(values);
  return r;
}

TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b, double level) {
  if (a.empty() || b.empty()) throw PreconditionError("two_sample_ks: both samples must be non-empty");
  require_level(level);
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());

  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }

  TwoSampleKs out;
  out.statistic = d;
  out.level = level;
  out.n1 = x.size();
  out.n2 = y.size();
  out.critical_value = std::sqrt(-std::log(level / 2.0) / 2.0) * std::sqrt((nx + ny) / (nx * ny));
  out.pass = d < out.critical_value;
  return out;
}

// ---------------------------------------------------------------------------

std::size_t default_batch_len(std::size_t n) {
  if (n < 4) return 1;
  const double target = std::log2(std::sqrt(static_cast<double>(n)));
  return std::size_t{1} << static_cast<unsigned>(std::lround(target));
}

double asymp_var_batch_means(std::span<const double> series, std::size_t batch_len) {
  if (batch_len == 0) throw InvalidArgument("batch_len must be positive");
  const std::size_t batches = series.size() / batch_len;
  if (batches < 10) {
    throw PreconditionError("batch means needs at least 10 whole batches; n = " +
                            std::to_string(series.size()) + ", batch_len = " +
                            std::to_string(batch_len));
  }
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto chunk = series.subspan(b * batch_len, batch_len);
    means[b] = mean_of(chunk);
  }
  return static_cast<double>(batch_len) * variance_of(means);
}

double asymp_var_batch_means(const Trajectory& trajectory, std::size_t test_index,
                             std::size_t batch_len) {
  if (test_index >= trajectory.test_values.size()) {
    throw PreconditionError("trajectory was run without stored test values");
  }
  return asymp_var_batch_means(trajectory.test_values[test_index], batch_len);
}

double asymp_var_replication(std::span<const double> scaled_sums) {
  if (scaled_sums.size() < 30) {
    throw PreconditionError("replication variance needs N >= 30, got " +
                            std::to_string(scaled_sums.size()));
  }
  return variance_of(scaled_sums);
}

std::pair<double, double> confidence_interval(double mean, double sigma2, std::size_t n,
                                              double level) {
  require_level(level);
  if (!(sigma2 >= 0.0)) throw InvalidArgument("sigma2 must be non-negative");
  if (n == 0) throw InvalidArgument("n must be positive");
  const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 0.5 * (1.0 + level));
  const double half = z * std::sqrt(sigma2 / static_cast<double>(n));
  return {mean - half, mean + half};
}

MeanEstimate estimate_mean(const Objective& objective, const NoiseModel& noise,
                           const SgdConfig& config, const TestFunction& phi,
                           std::optional<std::size_t> batch_len) {
  config.validate();
  if (config.n_recorded() < 1000) {
    throw PreconditionError("estimate_mean needs at least 1000 recorded iterates, got " +
                            std::to_string(config.n_recorded()));
  }
  const TestFunction fns[] = {phi};
  TrajectoryOptions topt;
  topt.store_test_values = true;
  const auto traj = run_trajectory(objective, noise, config, fns, topt);

  MeanEstimate est;
  est.n = traj.n_recorded;
  est.mean = traj.mean(0);
  est.batch_len = batch_len.value_or(default_batch_len(est.n));
  est.sigma2 = asymp_var_batch_means(traj, 0, est.batch_len);
  est.se = std::sqrt(est.sigma2 / static_cast<double>(est.n));
  return est;
}

// ---------------------------------------------------------------------------

std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::increasing: return "increasing";
    case Comparison::inconclusive: return "inconclusive";
    case Comparison::decreasing: return "decreasing";
  }
  return "inconclusive";
}

bool BiasCurve::strictly_increasing() const {
  return !comparisons.empty() && std::all_of(comparisons.begin(), comparisons.end(), [](Comparison c) {
    return c == Comparison::increasing;
  });
}

LogLogFit fit_loglog(std::span<const double> etas, std::span<const double> bias) {
  if (etas.size() != bias.size()) throw InvalidArgument("fit_loglog: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (etas[i] > 0.0 && std::abs(bias[i]) > 0.0) {
      lx.push_back(std::log(etas[i]));
      ly.push_back(std::log(std::abs(bias[i])));
    }
  }
  if (lx.size() < 2) throw PreconditionError("fit_loglog needs two points with non-zero bias");

  LogLogFit fit;
  if (lx.size() >= 4) {
    const double first = (ly[1] - ly[0]) / (lx[1] - lx[0]);
    const double last = (ly.back() - ly[ly.size() - 2]) / (lx.back() - lx[lx.size() - 2]);
    fit.convex = last > first;
  }
  const std::size_t use = fit.convex ? 3 : lx.size();
  const std::span<const double> x(lx.data(), use), y(ly.data(), use);
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < use; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  fit.points = use;
  return fit;
}

namespace {

std::vector<std::size_t> log_spaced_iterations(std::size_t n_iters, std::size_t points) {
  std::vector<std::size_t> out;
  if (points == 0 || n_iters == 0) return out;
  const double top = std::log(static_cast<double>(n_iters));
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back(static_cast<std::size_t>(std::llround(std::exp(t * top))));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

BiasCurve bias_sweep(const Objective& objective, const NoiseModel& noise, const TestFunction& phi,
                     std::span<const double> etas, std::size_t n_iters, std::size_t burn_in,
                     std::size_t N, std::uint64_t base_seed, const BiasSweepOptions& options) {
  if (!objective.known_min()) {
    throw PreconditionError("objective '" + objective.name() +
                            "' has no known minimizer; bias mode supports quadratic, "
                            "simplified-cauchy and simplified-bz");
  }
  if (etas.empty()) throw InvalidArgument("bias_sweep needs at least one step size");
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0)) throw InvalidArgument("step sizes must be positive");
    if (i > 0 && !(etas[i] > etas[i - 1])) throw InvalidArgument("step sizes must be strictly increasing");
  }
  if (N < 2) throw InvalidArgument("bias_sweep needs N >= 2 replications");
  if (!options.force) {
    const auto caps = chain_step_size_bounds(objective, noise);
    if (!(etas.back() < caps.overall_max)) {
      throw PreconditionError("eta = " + text::format_double(etas.back()) +
                              " is not below the step-size cap " +
                              text::format_double(caps.overall_max) + " (binding: " + caps.binding +
                              ")");
    }
  }

  const Point theta0 = options.theta0.value_or(Point::zeros(objective.dim()));
  const Vector& theta_star = objective.known_min()->coords();

  BiasCurve curve;
  curve.phi_star = phi(theta_star);
  curve.n_iters = n_iters;
  curve.burn_in = burn_in;
  curve.replications = N;
  curve.base_seed = base_seed;
  curve.objective = objective.name();
  curve.noise = noise.describe();
  curve.test_function = phi.label();

  const auto trace_at = log_spaced_iterations(n_iters, options.trace_points);
  const TestFunction fns[] = {phi};

  for (std::size_t e = 0; e < etas.size(); ++e) {
    SgdConfig cfg;
    cfg.eta = etas[e];
    cfg.n_iters = n_iters;
    cfg.burn_in = burn_in;
    cfg.theta0 = theta0;
    cfg.seed = mix_seed(base_seed, e);
    cfg.validate();

    std::vector<double> means(N, 0.0);
    std::vector<std::vector<double>> traces(N);
    auto failures = parallel_for_indices(N, options.workers, [&](std::size_t i) {
      TrajectoryOptions topt;
      topt.stream_id = i;
      topt.trace_iterations = trace_at;
      auto traj = run_trajectory(objective, noise, cfg, fns, topt);
      means[i] = traj.mean(0);
      traces[i] = std::move(traj.trace);
    });
    if (!failures.empty()) throw EnsembleError(std::move(failures));

    const double pi = mean_of(means);
    curve.etas.push_back(etas[e]);
    curve.pi_hat.push_back(pi);
    curve.bias_estimates.push_back(pi - curve.phi_star);
    curve.standard_errors.push_back(std::sqrt(variance_of(means) / static_cast<double>(N)));

    BiasTrace tr;
    tr.eta = etas[e];
    tr.iterations = trace_at;
    tr.abs_bias.assign(trace_at.size(), 0.0);
    for (std::size_t t = 0; t < trace_at.size(); ++t) {
      double s = 0.0;
      for (std::size_t i = 0; i < N; ++i) s += traces[i][t];
      tr.abs_bias[t] = std::abs(s / static_cast<double>(N) - curve.phi_star);
    }
    curve.traces.push_back(std::move(tr));
  }

  for (std::size_t i = 0; i + 1 < curve.etas.size(); ++i) {
    const double diff = curve.bias_estimates[i + 1] - curve.bias_estimates[i];
    const double se = std::hypot(curve.standard_errors[i], curve.standard_errors[i + 1]);
    curve.comparisons.push_back(diff > 2.0 * se    ? Comparison::increasing
                                : diff < -2.0 * se ? Comparison::decreasing
                                                   : Comparison::inconclusive);
  }

  if (curve.etas.size() >= 2) {
    try {
      const auto fit = fit_loglog(curve.etas, curve.bias_estimates);
      curve.fitted_exponent = fit.exponent;
      curve.intercept = fit.intercept;
      curve.fit_points = fit.points;
      curve.convex_in_loglog = fit.convex;
    } catch (const PreconditionError&) {
      // All biases are exactly zero: leave the fit empty.
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------

ForgettingReport matched_forgetting(const Objective& objective, const NoiseModel& noise,
                                    double eta, const Point& theta0, const Point& theta0_alt,
                                    const TestFunction& phi, std::size_t horizon,
                                    std::uint64_t seed, double factor,
                                    std::size_t variance_run_length) {
  if (horizon == 0) throw InvalidArgument("horizon must be positive");
  if (theta0.dim() != objective.dim() || theta0_alt.dim() != objective.dim()) {
    throw InvalidArgument("initial points must match the objective dimension");
  }

  ForgettingReport rep;
  rep.horizon = horizon;

  {
    SgdConfig cfg;
    cfg.eta = eta;
    cfg.n_iters = variance_run_length;
    cfg.burn_in = variance_run_length / 8;
    cfg.theta0 = theta0;
    cfg.seed = mix_seed(seed, 1);
    cfg.validate();
    const TestFunction fns[] = {phi};
    TrajectoryOptions topt;
    topt.store_test_values = true;
    const auto traj = run_trajectory(objective, noise, cfg, fns, topt);
    rep.sigma2 = asymp_var_batch_means(traj, 0, default_batch_len(traj.n_recorded));
  }

  // Two copies of the same stream give both chains identical randomness.
  RngStream stream_a(seed, 0), stream_b(seed, 0);
  SgdState a{theta0.coords(), 0}, b{theta0_alt.coords(), 0};
  double sum_a = 0.0, sum_b = 0.0;
  rep.running_gap.reserve(horizon);
  rep.threshold.reserve(horizon);
  for (std::size_t k = 1; k <= horizon; ++k) {
    a = sgd_step(a, objective, noise, eta, stream_a);
    b = sgd_step(b, objective, noise, eta, stream_b);
    sum_a += phi(a.theta);
    sum_b += phi(b.theta);
    const double kd = static_cast<double>(k);
    const double gap = std::abs(sum_a - sum_b) / kd;
    const double thr = factor * std::sqrt(rep.sigma2 / kd);
    rep.running_gap.push_back(gap);
    rep.threshold.push_back(thr);
    if (!rep.crossing && gap < thr) rep.crossing = k;
  }
  rep.final_path_distance = (a.theta - b.theta).norm();
  return rep;
}

// ---------------------------------------------------------------------------

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

void write_ensemble_csv(const McEnsemble& ensemble, const std::filesystem::path& path) {
  std::string body = "stream_id,value";
  for (std::size_t i = 0; i < ensemble.values.size(); ++i) {
    body += '\n' + std::to_string(ensemble.stream_ids[i]) + ',' +
            text::format_double(ensemble.values[i]);
  }
  write_text_file(path, body);
}

void write_bias_trace_csv(const BiasCurve& curve, const std::filesystem::path& path) {
  std::string body = "eta,iteration,abs_bias";
  for (const auto& tr : curve.traces) {
    for (std::size_t t = 0; t < tr.iterations.size(); ++t) {
      body += '\n' + text::format_double(tr.eta) + ',' + std::to_string(tr.iterations[t]) + ',' +
              text::format_double(tr.abs_bias[t]);
    }
  }
  write_text_file(path, body);
}

std::string normality_json(const NormalityReport& r) {
  const json j{{"n", r.n},
               {"mean", r.mean},
               {"sd", r.sd},
               {"skewness", r.skewness},
               {"excess_kurtosis", r.excess_kurtosis},
               {"ks_stat", r.ks_stat},
               {"mc_critical_value", r.mc_critical_value},
               {"level", r.level},
               {"skew_tol", r.skew_tol},
               {"kurt_tol", r.kurt_tol},
               {"pass", r.pass},
               {"histogram", histogram_json(r.histogram)}};
  return j.dump(2);
}

std::string two_sample_json(const TwoSampleKs& ks, const std::string& label_a,
                            const std::string& label_b) {
  const json j{{"sample_a", label_a},        {"sample_b", label_b},   {"n1", ks.n1},
               {"n2", ks.n2},                {"statistic", ks.statistic},
               {"critical_value", ks.critical_value}, {"level", ks.level}, {"pass", ks.pass}};
  return j.dump(2);
}

std::string bias_curve_json(const BiasCurve& c) {
  std::vector<std::string> comparisons;
  for (auto cmp : c.comparisons) comparisons.push_back(to_string(cmp));
  const json j{{"objective", c.objective},
               {"noise", c.noise},
               {"test_function", c.test_function},
               {"n_iters", c.n_iters},
               {"burn_in", c.burn_in},
               {"replications", c.replications},
               {"base_seed", c.base_seed},
               {"phi_star", c.phi_star},
               {"etas", c.etas},
               {"pi_hat", c.pi_hat},
               {"bias_estimates", c.bias_estimates},
               {"standard_errors", c.standard_errors},
               {"fitted_exponent", c.fitted_exponent},
               {"intercept", c.intercept},
               {"fit_points", c.fit_points},
               {"convex_in_loglog", c.convex_in_loglog},
               {"comparisons", comparisons},
               {"strictly_increasing", c.strictly_increasing()}};
  return j.dump(2);
}

}  // namespace sgdchain
