// Acceptance suite: one PASS/FAIL line per criterion. The process exits
// non-zero when any criterion fails.

#include "sgdchain/cli.hpp"
#include "sgdchain/objectives.hpp"
#include "sgdchain/sgd.hpp"
#include "sgdchain/stats.hpp"
#include "sgdchain/theory.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace sgdchain;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seeds are fixed here so every run (and the determinism rerun) is identical.
constexpr std::uint64_t kDataSeed = 20240501;
constexpr std::uint64_t kCltSeed = 11;
constexpr std::uint64_t kCltShiftSeed = 12;
constexpr std::uint64_t kBiasSeed = 21;
constexpr std::uint64_t kOracleSeed = 22;
constexpr std::uint64_t kCertSeed = 31;
constexpr std::uint64_t kMomentSeed = 41;
constexpr std::uint64_t kVarianceSeed = 51;
constexpr std::uint64_t kForgetSeed = 61;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string repeat_point(double v, int d) {
  std::string s;
  for (int i = 0; i < d; ++i) s += (i ? "," : "") + num(v);
  return s;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing output " + p.string());
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sgdchain");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, std::cerr);
  if (code != kExitOk) throw std::runtime_error("sgdchain " + args[1] + " exited with " + std::to_string(code));
  return code;
}

// The CLI runs behind criteria 3, 4 and 5. Criterion 10 replays them into a
// second directory.
void run_clt_cells(const fs::path& dir) {
  const std::vector<std::string> common = {
      "clt", "--objective", "cauchy-mle", "--dim", "10", "--data-m", "500", "--data-df", "10",
      "--data-seed", std::to_string(kDataSeed), "--noise", "student-t", "--df", "5",
      "-N", "1000", "--n-iters", "21000", "--burn-in", "1000", "--test", "norm", "--force"};
  auto main = common;
  main.insert(main.end(), {"--etas", "0.3", "--inits", repeat_point(1.0, 10) + ";" + repeat_point(1.5, 10),
                           "--seed", std::to_string(kCltSeed), "--out", (dir / "clt").string()});
  cli(main);
  auto shift = common;
  shift.insert(shift.end(), {"--etas", "0.2", "--theta0", repeat_point(1.0, 10), "--seed",
                             std::to_string(kCltShiftSeed), "--out", (dir / "clt_eta0.2").string()});
  cli(shift);
}

void run_bias_sweeps(const fs::path& dir) {
  const std::vector<std::string> common = {"bias", "--etas", "0.05,0.1,0.2,0.3", "-N", "200", "--n-iters",
                                           "55000", "--burn-in", "5000", "--force"};
  auto bz = common;
  bz.insert(bz.end(), {"--objective", "simplified-bz", "--dim", "10", "--lambda", "0.1", "--nu", "1", "--noise",
                       "student-t", "--df", "6", "--test", "sigmoid_f", "--seed", std::to_string(kBiasSeed),
                       "--out", (dir / "bias_bz").string()});
  cli(bz);
  auto quad = common;
  quad.insert(quad.end(), {"--objective", "quadratic", "--dim", "1", "--noise", "gaussian", "--sigma", "1",
                           "--test", "norm2", "--seed", std::to_string(kOracleSeed), "--out",
                           (dir / "bias_quadratic").string()});
  cli(quad);
}

Outcome step_size_constant() {
  const double a = max_step_size(1.0, 1.0, 1.0);
  const double b = max_step_size(1.0, 3.0, 0.0);
  const double b_exact = (3.0 - std::sqrt(6.0)) / 3.0;
  return {a == 0.25 && std::abs(b - b_exact) <= 1e-12,
          "max_step_size(1,1,1)=" + num(a) + ", |max_step_size(1,3,0)-(3-sqrt6)/3|=" + num(std::abs(b - b_exact))};
}

Outcome dissipativity_certificates() {
  const QuadSine qs;
  RngStream s1(kCertSeed, 0);
  const auto c1 = check_dissipativity(qs, 50.0, 10000, s1, 1.0);
  const bool ok1 = c1.certified && c1.alpha == 1.0 && c1.beta <= 25.0;

  RngStream ds(kDataSeed, 0);
  const auto data = gen_regression_data(500, 10, 10.0, ds);
  const double lambda = 0.1;
  const CauchyRegMLE f(data.X, data.y, lambda);
  const double beta_cap = f.xty_norm() * f.xty_norm() / lambda;
  RngStream s2(kCertSeed, 1);
  const auto c2 = check_dissipativity(f, 50.0, 10000, s2, lambda / 4.0);
  const bool ok2 = c2.certified && c2.alpha == lambda / 4.0 && c2.beta <= beta_cap;
  return {ok1 && ok2, "quadsine beta_hat=" + num(c1.beta) + " (<=25); cauchy-mle alpha=" + num(c2.alpha) +
                          " beta_hat=" + num(c2.beta) + " (<=" + num(beta_cap) + ")"};
}

Outcome clt_normality(const fs::path& dir) {
  const auto rep = read_json(dir / "clt" / "clt_cell0_normality.json");
  const auto other = read_json(dir / "clt" / "clt_cell1_normality.json");
  const auto ks = read_json(dir / "clt" / "clt_ks_eta0_init0_vs_init1.json");
  const bool pass = rep["pass"].get<bool>() && ks["pass"].get<bool>();
  return {pass, "skew=" + num(rep["skewness"]) + " exkurt=" + num(rep["excess_kurtosis"]) + " ks=" +
                    num(rep["ks_stat"]) + " (crit " + num(rep["mc_critical_value"]) + "); init 1.5 normality " +
                    (other["pass"].get<bool>() ? "pass" : "fail") + "; two-sample ks=" + num(ks["statistic"]) +
                    " (crit " + num(ks["critical_value"]) + ")"};
}

Outcome step_size_mean_shift(const fs::path& dir) {
  const auto a = read_json(dir / "clt" / "clt_summary.json")["cells"][0];
  const auto b = read_json(dir / "clt_eta0.2" / "clt_summary.json")["cells"][0];
  const double diff = a["mean"].get<double>() - b["mean"].get<double>();
  const double se = std::hypot(a["se"].get<double>(), b["se"].get<double>());
  return {std::abs(diff) > 2.0 * se,
          "mean(eta=0.3)-mean(eta=0.2)=" + num(diff) + ", combined SE=" + num(se) + ", ratio=" + num(diff / se)};
}

Outcome bias_monotone_and_scaling(const fs::path& dir) {
  const auto bz = read_json(dir / "bias_bz" / "bias_curve.json");
  const auto quad = read_json(dir / "bias_quadratic" / "bias_curve.json");
  const bool increasing = bz["strictly_increasing"].get<bool>();
  const double p = quad["fitted_exponent"].get<double>();

  // Closed form of the quadratic bias: the AR(1) stationary variance.
  const auto etas = quad["etas"].get<std::vector<double>>();
  const auto est = quad["bias_estimates"].get<std::vector<double>>();
  const auto se = quad["standard_errors"].get<std::vector<double>>();
  std::vector<double> exact;
  double worst_z = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    exact.push_back(etas[i] / (2.0 - etas[i]));
    worst_z = std::max(worst_z, std::abs(est[i] - exact.back()) / se[i]);
  }
  const double p_exact = fit_loglog(etas, exact).exponent;
  const bool scaling = std::abs(p - 1.0) <= 0.1 && std::abs(p - p_exact) <= 0.05;

  std::string bz_bias;
  for (const auto& v : bz["bias_estimates"]) bz_bias += (bz_bias.empty() ? "" : ",") + num(v);
  return {increasing && scaling, "bz bias [" + bz_bias + "] strictly increasing=" + (increasing ? "yes" : "no") +
                                     "; quadratic exponent=" + num(p) + " (closed form " + num(p_exact) +
                                     ", worst |z|=" + num(worst_z) + ")"};
}

Outcome moment_bounds() {
  const QuadSine f;
  const auto noise = NoiseModel::gaussian(1.0);
  const auto& k = f.constants();
  const double L_xi = *noise.moment_constant(1);
  // The second-moment bound holds below the stationarity cap.
  SgdConfig cfg;
  cfg.eta = 0.5 * max_step_size(k.L, k.alpha, L_xi);
  cfg.n_iters = 1000000;
  cfg.burn_in = 0;
  cfg.theta0 = Point::zeros(1);
  cfg.seed = kMomentSeed;
  const TestFunction fns[] = {TestFunction::norm()};
  const auto t = run_trajectory(f, noise, cfg, fns);
  const double mu2 = mu2_bound(k.alpha, k.beta);
  const double mu4 = mu4_bound(k.L, k.alpha, k.beta, L_xi);
  return {t.mean_norm2() <= mu2 && t.mean_norm4() <= mu4,
          "eta=" + num(cfg.eta) + " E|theta|^2=" + num(t.mean_norm2()) + " (<=" + num(mu2) + ") E|theta|^4=" +
              num(t.mean_norm4()) + " (<=" + num(mu4) + ")"};
}

Outcome variance_agreement() {
  // d = 1 quadratic, eta = 0.1, sigma = 1: theta is AR(1) with coefficient 0.9
  // and long-run variance 1.
  const Quadratic q(Point::zeros(1));
  const auto noise = NoiseModel::gaussian(1.0);
  const auto phi = TestFunction::coordinate(0);
  auto make = [](std::size_t n, std::uint64_t seed) {
    SgdConfig c;
    c.eta = 0.1;
    c.n_iters = n + 1000;
    c.burn_in = 1000;
    c.theta0 = Point::zeros(1);
    c.seed = seed;
    return c;
  };

  const TestFunction fns[] = {phi};
  TrajectoryOptions topt;
  topt.store_test_values = true;
  const auto traj = run_trajectory(q, noise, make(1000000, kVarianceSeed), fns, topt);
  const double bm = asymp_var_batch_means(traj, 0, 10000);

  const auto ens = clt_experiment(q, noise, make(10000, 0), phi, 1000, mix_seed(kVarianceSeed, 1),
                                  {default_worker_count()});
  const double rep = asymp_var_replication(ens.values);

  const std::size_t experiments = 100;
  std::vector<int> covered(experiments, 0);
  const auto failures = parallel_for_indices(experiments, default_worker_count(), [&](std::size_t i) {
    const auto est = estimate_mean(q, noise, make(1000000, mix_seed(kVarianceSeed, 100 + i)), phi, 10000);
    const auto [lo, hi] = confidence_interval(est.mean, est.sigma2, est.n, 0.95);
    covered[i] = lo <= 0.0 && 0.0 <= hi;
  });
  if (!failures.empty()) throw std::runtime_error("coverage replication failed");
  int cover = 0;
  for (int c : covered) cover += c;

  const bool ok = std::abs(bm - 1.0) <= 0.25 && std::abs(rep - 1.0) <= 0.25 &&
                  std::abs(bm - rep) <= 0.25 * std::min(bm, rep) && cover >= 90;
  return {ok, "batch-means=" + num(bm) + " replication=" + num(rep) + " coverage=" + std::to_string(cover) + "/100"};
}

Outcome geometric_forgetting() {
  const SimplifiedCauchy f(10, 0.1);
  const auto r = matched_forgetting(f, NoiseModel::student_t(5.0), 0.2, Point::filled(10, 1.0),
                                    Point::filled(10, 1.5), TestFunction::norm(), 1000, kForgetSeed, 10.0);
  return {r.crossing.has_value() && *r.crossing <= 1000,
          "sigma2=" + num(r.sigma2) + " crossing=" + (r.crossing ? std::to_string(*r.crossing) : "none") +
              " gap(1000)=" + num(r.running_gap.back()) + " threshold(1000)=" + num(r.threshold.back())};
}

Outcome negativity_witnesses() {
  const auto sc = hessian_negativity_witness(SimplifiedCauchy(10, 0.1));
  const auto bz = hessian_negativity_witness(SimplifiedBZ(10, 0.1, 1.0));
  bool quad_none = false;
  try {
    hessian_negativity_witness(Quadratic(Point::zeros(10)));
  } catch (const NotFoundError&) {
    quad_none = true;
  }
  const bool ok = sc.value < 0.0 && sc.band_lo <= 1.5 && sc.band_hi >= 2.0 && bz.value < 0.0 &&
                  bz.band_lo * bz.band_lo <= 1.0 && bz.band_hi * bz.band_hi >= 2.0 && quad_none;
  return {ok, "cauchy band |theta| in [" + num(sc.band_lo) + "," + num(sc.band_hi) + "]; bz band |theta|^2 in [" +
                  num(bz.band_lo * bz.band_lo) + "," + num(bz.band_hi * bz.band_hi) + "]; quadratic witness " +
                  (quad_none ? "absent" : "found")};
}

Outcome determinism(const fs::path& first, const fs::path& second) {
  run_clt_cells(second);
  run_bias_sweeps(second);
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  for (const auto& e : fs::recursive_directory_iterator(first)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), first);
    ++files;
    const auto other = second / rel;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) mismatched.push_back(rel.string());
  }
  std::size_t second_files = 0;
  for (const auto& e : fs::recursive_directory_iterator(second)) second_files += e.is_regular_file();
  std::string detail = std::to_string(files) + " files compared";
  if (!mismatched.empty()) detail += ", differing: " + mismatched.front();
  if (second_files != files) detail += ", file count " + std::to_string(second_files) + " vs " + std::to_string(files);
  return {files > 0 && mismatched.empty() && second_files == files, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::remove_all(root);
  const auto first = root / "run1";
  const auto second = root / "run2";

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"step-size constant", step_size_constant},
      {"dissipativity certificates", dissipativity_certificates},
      {"clt normality at desk scale",
       [&] {
         run_clt_cells(first);
         return clt_normality(first);
       }},
      {"step-size mean shift", [&] { return step_size_mean_shift(first); }},
      {"bias monotonicity and scaling",
       [&] {
         run_bias_sweeps(first);
         return bias_monotone_and_scaling(first);
       }},
      {"moment bounds", moment_bounds},
      {"variance estimator agreement", variance_agreement},
      {"geometric forgetting", geometric_forgetting},
      {"non-convexity witnesses", negativity_witnesses},
      {"full determinism", [&] { return determinism(first, second); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
