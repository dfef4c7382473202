#include "sgdchain/sgd.hpp"

#include "text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

namespace sgdchain {

namespace {

// One update in place; `grad` is scratch space.
inline void step_in_place(Vector& theta, std::size_t k, const Objective& objective,
                          const NoiseModel& noise, double eta, RngStream& stream, Vector& grad) {
  noise.stochastic_gradient(objective, theta, stream, grad);
  theta.noalias() -= eta * grad;
  const double norm = theta.norm();
  if (!std::isfinite(norm) || norm > kDivergenceNorm) {
    throw DivergenceError(k, norm, objective.name() + " with eta=" + text::format_double(eta));
  }
}

}  // namespace

SgdState sgd_step(const SgdState& state, const Objective& objective, const NoiseModel& noise,
                  double eta, RngStream& stream) {
  if (!(eta > 0.0)) throw InvalidArgument("sgd_step: eta must be positive");
  SgdState next{state.theta, state.k + 1};
  Vector grad(state.theta.size());
  step_in_place(next.theta, next.k, objective, noise, eta, stream, grad);
  return next;
}

Trajectory run_trajectory(const Objective& objective, const NoiseModel& noise,
                          const SgdConfig& config, std::span<const TestFunction> test_fns,
                          const TrajectoryOptions& options) {
  config.validate();
  if (config.theta0.dim() != objective.dim()) {
    throw InvalidArgument("theta0 has dimension " + std::to_string(config.theta0.dim()) +
                          " but the objective has dimension " + std::to_string(objective.dim()));
  }

  Trajectory traj;
  traj.seed = config.seed;
  traj.stream_id = options.stream_id;
  traj.test_sums.assign(test_fns.size(), {});
  traj.sum_theta = Vector::Zero(static_cast<Eigen::Index>(objective.dim()));
  if (options.store_test_values) {
    traj.test_values.assign(test_fns.size(), {});
    for (auto& v : traj.test_values) v.reserve(config.n_recorded());
  }
  if (options.store_iterates) traj.iterates.reserve(config.n_recorded());

  RngStream stream(config.seed, options.stream_id);
  Vector theta = config.theta0.coords();
  Vector grad(theta.size());

  const auto& trace_at = options.trace_iterations;
  if (!trace_at.empty()) {
    if (test_fns.empty()) throw InvalidArgument("a trace needs at least one test function");
    if (!std::is_sorted(trace_at.begin(), trace_at.end())) {
      throw InvalidArgument("trace iterations must be sorted");
    }
    traj.trace.reserve(trace_at.size());
  }
  std::size_t next_trace = 0;

  for (std::size_t k = 1; k <= config.n_iters; ++k) {
    step_in_place(theta, k, objective, noise, config.eta, stream, grad);
    while (next_trace < trace_at.size() && trace_at[next_trace] == k) {
      traj.trace.push_back(test_fns[0](theta));
      ++next_trace;
    }
    if (k <= config.burn_in) continue;

    const double n2 = theta.squaredNorm();
    traj.sum_norm2 += n2;
    traj.sum_norm4 += n2 * n2;
    traj.sum_theta += theta;
    for (std::size_t j = 0; j < test_fns.size(); ++j) {
      const double v = test_fns[j](theta);
      if (!std::isfinite(v)) throw EvaluationError("test function '" + test_fns[j].label() + "' is not finite");
      traj.test_sums[j].sum += v;
      traj.test_sums[j].sum_sq += v * v;
      if (options.store_test_values) traj.test_values[j].push_back(v);
    }
    if (options.store_iterates) traj.iterates.push_back(theta);
  }
  traj.n_recorded = config.n_recorded();
  traj.last_theta = theta;
  return traj;
}

double scaled_partial_sum(const Trajectory& trajectory, std::size_t test_index,
                          std::optional<double> center) {
  if (trajectory.n_recorded == 0) throw PreconditionError("scaled_partial_sum: empty recording window");
  const double n = static_cast<double>(trajectory.n_recorded);
  double s = trajectory.test_sums.at(test_index).sum;
  if (center) s -= n * *center;
  return s / std::sqrt(n);
}

Point polyak_ruppert_average(const Trajectory& trajectory) {
  if (trajectory.n_recorded == 0) throw PreconditionError("polyak_ruppert_average: empty recording window");
  return Point(trajectory.sum_theta / static_cast<double>(trajectory.n_recorded));
}

Point polyak_ruppert_average(std::span<const Vector> iterates) {
  if (iterates.empty()) throw PreconditionError("polyak_ruppert_average: empty recording window");
  Vector sum = Vector::Zero(iterates.front().size());
  for (const auto& it : iterates) sum += it;
  return Point(sum / static_cast<double>(iterates.size()));
}

void write_iterates_csv(const Trajectory& trajectory, std::size_t burn_in,
                        const std::filesystem::path& path) {
  if (trajectory.iterates.empty()) {
    throw PreconditionError("write_iterates_csv: trajectory was run without iterate storage");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto d = trajectory.iterates.front().size();
  out << "k";
  for (Eigen::Index j = 0; j < d; ++j) out << ",theta_" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < trajectory.iterates.size(); ++i) {
    out << (burn_in + i + 1);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << text::format_double(trajectory.iterates[i][j]);
    out << '\n';
  }
}

std::vector<ReplicationFailure> parallel_for_indices(std::size_t count, std::size_t workers,
                                                     const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::mutex failures_mutex;
  std::vector<ReplicationFailure> failures;

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (const DivergenceError& e) {
        std::lock_guard lock(failures_mutex);
        failures.push_back({i, e.what(), true});
      } catch (const std::exception& e) {
        std::lock_guard lock(failures_mutex);
        failures.push_back({i, e.what(), false});
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(failures.begin(), failures.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return failures;
}

std::size_t default_worker_count() {
  if (const char* env = std::getenv("SGDCHAIN_WORKERS")) {
    try {
      const auto n = text::parse_u64(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const Error&) {
    }
  }
  const auto hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace sgdchain
