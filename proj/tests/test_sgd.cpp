#include "sgdchain/objectives.hpp"
#include "sgdchain/sgd.hpp"
#include "sgdchain/theory.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace sgdchain;

namespace {

const TestFunction kNorm[] = {TestFunction::norm()};

SgdConfig config(double eta, std::size_t n, std::size_t burn, Point theta0, std::uint64_t seed = 1) {
  SgdConfig c;
  c.eta = eta;
  c.n_iters = n;
  c.burn_in = burn;
  c.theta0 = std::move(theta0);
  c.seed = seed;
  return c;
}

}  // namespace

TEST(SgdStep, FixedPointWithoutNoise) {
  const Quadratic q(Point::zeros(2));
  RngStream s(1, 0);
  const SgdState st{Vector::Zero(2), 4};
  const auto next = sgd_step(st, q, NoiseModel::none(), 0.3, s);
  EXPECT_EQ(next.theta, Vector::Zero(2));
  EXPECT_EQ(next.k, 5u);
}

TEST(SgdStep, GeometricContraction) {
  const Quadratic q(Point::zeros(2));
  RngStream s(1, 0);
  SgdState st{Vector::Unit(2, 0), 0};
  st = sgd_step(st, q, NoiseModel::none(), 0.1, s);
  EXPECT_DOUBLE_EQ(st.theta[0], 0.9);
  for (int i = 1; i < 50; ++i) st = sgd_step(st, q, NoiseModel::none(), 0.1, s);
  EXPECT_NEAR(st.theta[0], std::pow(0.9, 50), 1e-15);
  EXPECT_NEAR(st.theta[0], 5.15e-3, 1e-5);
  EXPECT_EQ(st.theta[1], 0.0);
  EXPECT_THROW(sgd_step(st, q, NoiseModel::none(), 0.0, s), InvalidArgument);
}

TEST(SgdStep, DivergenceCarriesIteration) {
  const Quadratic q(Point::zeros(1));
  const auto cfg = config(3.5, 1000, 0, Point{1.0});  // |1 - eta| = 2.5 per step
  try {
    run_trajectory(q, NoiseModel::none(), cfg, kNorm);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.iteration(), 20u);
    EXPECT_LT(e.iteration(), 40u);
    EXPECT_GT(e.norm(), kDivergenceNorm);
  }
}

TEST(RunTrajectory, EmptyWindowRejected) {
  const Quadratic q(Point::zeros(1));
  EXPECT_THROW(run_trajectory(q, NoiseModel::none(), config(0.1, 100, 100, Point{0.0}), kNorm),
               PreconditionError);
  EXPECT_THROW(run_trajectory(q, NoiseModel::none(), config(0.1, 100, 0, Point{0.0, 0.0}), kNorm),
               InvalidArgument);
}

TEST(RunTrajectory, ZeroAtFixedPoint) {
  const Quadratic q(Point::zeros(3));
  const auto t = run_trajectory(q, NoiseModel::none(), config(0.1, 500, 10, Point::zeros(3)), kNorm);
  EXPECT_EQ(t.n_recorded, 490u);
  EXPECT_EQ(t.test_sums[0].sum, 0.0);
  EXPECT_EQ(t.test_sums[0].sum_sq, 0.0);
  EXPECT_EQ(t.sum_norm2, 0.0);
  EXPECT_EQ(t.sum_norm4, 0.0);
}

TEST(RunTrajectory, DeterministicAccumulators) {
  const SimplifiedCauchy f(4, 0.1);
  const auto noise = NoiseModel::student_t(5.0);
  const auto cfg = config(0.05, 5000, 100, Point::filled(4, 1.0), 77);
  TrajectoryOptions opt;
  opt.stream_id = 3;
  const auto a = run_trajectory(f, noise, cfg, kNorm, opt);
  const auto b = run_trajectory(f, noise, cfg, kNorm, opt);
  EXPECT_EQ(a.test_sums[0].sum, b.test_sums[0].sum);
  EXPECT_EQ(a.sum_norm4, b.sum_norm4);
  EXPECT_EQ(a.last_theta, b.last_theta);
  opt.stream_id = 4;
  const auto c = run_trajectory(f, noise, cfg, kNorm, opt);
  EXPECT_NE(a.test_sums[0].sum, c.test_sums[0].sum);
}

TEST(RunTrajectory, QuadSineSecondMomentBelowBound) {
  const QuadSine f;
  const auto t =
      run_trajectory(f, NoiseModel::gaussian(1.0), config(0.1, 100000, 1000, Point{0.0}, 5), kNorm);
  EXPECT_LE(t.mean_norm2(), mu2_bound(1.0, 25.0));
  EXPECT_DOUBLE_EQ(mu2_bound(1.0, 25.0), 53.0);
}

TEST(RunTrajectory, TraceRecordsRequestedIterations) {
  const Quadratic q(Point::zeros(1));
  TrajectoryOptions opt;
  opt.trace_iterations = {1, 2, 10};
  const auto t = run_trajectory(q, NoiseModel::none(), config(0.5, 10, 5, Point{1.0}), kNorm, opt);
  ASSERT_EQ(t.trace.size(), 3u);
  EXPECT_DOUBLE_EQ(t.trace[0], 0.5);
  EXPECT_DOUBLE_EQ(t.trace[1], 0.25);
  EXPECT_DOUBLE_EQ(t.trace[2], std::pow(0.5, 10));
}

// Empirical stationarity: the running mean of |theta|^2 settles when eta is
// below the unique-stationary-law cap.
TEST(RunTrajectory, MomentStabilityBelowCap) {
  RngStream ds(8, 0);
  const auto data = gen_regression_data(100, 3, 10.0, ds);
  const std::vector<ObjectivePtr> objectives = {
      std::make_shared<Quadratic>(Point({1.0, -1.0, 0.5})),
      std::make_shared<QuadSine>(),
      std::make_shared<SimplifiedCauchy>(3, 0.5),
      std::make_shared<SimplifiedBZ>(3, 0.5, 1.0),
      std::make_shared<CauchyRegMLE>(data.X, data.y, 0.5),
      std::make_shared<BlakeZissermanMLE>(data.X, data.y, 0.5, 1.0)};
  for (const auto& obj : objectives) {
    const auto& k = obj->constants();
    const auto noise = NoiseModel::gaussian(1.0);
    const double cap = max_step_size(k.L, k.alpha, *noise.moment_constant(obj->dim()));
    const double eta = 0.5 * cap;
    const std::size_t n = 400000;
    TrajectoryOptions opt;
    opt.store_iterates = false;
    const auto theta0 = Point::zeros(obj->dim());
    // Quarter means from four consecutive runs would restart the chain, so
    // record per-iterate |theta|^2 through a custom test function.
    const TestFunction sq[] = {TestFunction::square_norm()};
    opt.store_test_values = true;
    const auto t = run_trajectory(*obj, noise, config(eta, n, 0, theta0, 9), sq, opt);
    const auto& v = t.test_values[0];
    double q2 = 0, q4 = 0;
    for (std::size_t i = n / 4; i < n / 2; ++i) q2 += v[i];
    for (std::size_t i = 3 * n / 4; i < n; ++i) q4 += v[i];
    EXPECT_NEAR(q4 / q2, 1.0, 0.05) << obj->name() << " eta=" << eta;
  }
}

TEST(ScaledPartialSum, ConstantAndSelfCentered) {
  const Quadratic q(Point::zeros(1));
  const TestFunction c[] = {TestFunction::custom("one", [](const Vector&) { return 1.0; })};
  const auto t = run_trajectory(q, NoiseModel::gaussian(1.0), config(0.1, 400, 0, Point{0.0}), c);
  EXPECT_DOUBLE_EQ(scaled_partial_sum(t, 0), 20.0);  // 1 * sqrt(400)

  const auto u = run_trajectory(q, NoiseModel::gaussian(1.0), config(0.1, 400, 0, Point{0.0}), kNorm);
  EXPECT_NEAR(scaled_partial_sum(u, 0, u.mean(0)), 0.0, 1e-12);
}

// AR(1) oracle: theta_{k+1} = 0.9 theta_k - 0.1 xi. Long-run variance of
// theta is 0.01 / (1 - 0.9)^2 = 1.
TEST(ScaledPartialSum, Ar1LongRunVariance) {
  const Quadratic q(Point::zeros(1));
  const TestFunction id[] = {TestFunction::coordinate(0)};
  const int N = 2000;
  std::vector<double> sums(N);
  const auto cfg = config(0.1, 5000, 200, Point{0.0}, 31);
  const auto failures = parallel_for_indices(N, 2, [&](std::size_t i) {
    TrajectoryOptions opt;
    opt.stream_id = i;
    sums[i] = scaled_partial_sum(run_trajectory(q, NoiseModel::gaussian(1.0), cfg, id, opt), 0);
  });
  ASSERT_TRUE(failures.empty());
  double m = 0, v = 0;
  for (double x : sums) m += x;
  m /= N;
  for (double x : sums) v += (x - m) * (x - m);
  v /= N - 1;
  // Sample-variance SE for normal data: sqrt(2/(N-1)); finite-n correction
  // is O(1/(n(1-rho))) = 2e-3.
  EXPECT_NEAR(v, 1.0, 4.0 * std::sqrt(2.0 / (N - 1)));
}

TEST(PolyakRuppert, Averages) {
  std::vector<Vector> pts = {Vector::Constant(2, 1.0), Vector::Constant(2, 3.0)};
  EXPECT_EQ(polyak_ruppert_average(pts), Point({2.0, 2.0}));
  EXPECT_THROW(polyak_ruppert_average(std::vector<Vector>{}), PreconditionError);

  const Quadratic q(Point({2.0, -1.0}));
  const auto t = run_trajectory(q, NoiseModel::none(), config(0.1, 20000, 1000, Point::zeros(2)), kNorm);
  EXPECT_LE((polyak_ruppert_average(t).coords() - Vector(q.known_min()->coords())).norm(), 0.1);
}

TEST(IteratesCsv, WritesPostBurnInRows) {
  const Quadratic q(Point::zeros(2));
  TrajectoryOptions opt;
  opt.store_iterates = true;
  const auto t = run_trajectory(q, NoiseModel::none(), config(0.5, 5, 2, Point::filled(2, 1.0)), kNorm, opt);
  const auto path = std::filesystem::temp_directory_path() / "sgdchain_test_sgd" / "it.csv";
  write_iterates_csv(t, 2, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,theta_1,theta_2");
  std::getline(in, line);
  EXPECT_EQ(line, "3,0.125,0.125");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(ParallelFor, ResultsIndependentOfWorkerCount) {
  const SimplifiedBZ f(2, 0.1, 1.0);
  const auto cfg = config(0.05, 2000, 0, Point::filled(2, 1.0), 12);
  auto run = [&](std::size_t workers) {
    std::vector<double> out(64);
    parallel_for_indices(64, workers, [&](std::size_t i) {
      TrajectoryOptions opt;
      opt.stream_id = i;
      out[i] = run_trajectory(f, NoiseModel::student_t(6.0), cfg, kNorm, opt).test_sums[0].sum;
    });
    return out;
  };
  EXPECT_EQ(run(1), run(4));
}

TEST(ParallelFor, CollectsFailuresInIndexOrder) {
  const auto failures = parallel_for_indices(10, 3, [](std::size_t i) {
    if (i % 4 == 1) throw DivergenceError(i, 1e13);
    if (i == 6) throw InvalidArgument("bad");
  });
  ASSERT_EQ(failures.size(), 4u);
  EXPECT_EQ(failures[0].index, 1u);
  EXPECT_TRUE(failures[0].divergence);
  EXPECT_EQ(failures[1].index, 5u);
  EXPECT_EQ(failures[2].index, 6u);
  EXPECT_FALSE(failures[2].divergence);
  EXPECT_EQ(failures[3].index, 9u);
}
