#pragma once

// The constant step size SGD Markov chain
//   theta_{k+1} = theta_k - eta (grad f(theta_k) + xi_{k+1}(theta_k)).

#include "sgdchain/core.hpp"
#include "sgdchain/noise.hpp"
#include "sgdchain/rng.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sgdchain {

/// Iterates with |theta| above this bound are treated as divergence.
inline constexpr double kDivergenceNorm = 1e12;

struct SgdState {
  Vector theta;
  std::size_t k = 0;
};

/// One SGD step. Throws DivergenceError carrying k and |theta_k| when the
/// update is non-finite or exceeds the divergence guard.
SgdState sgd_step(const SgdState& state, const Objective& objective, const NoiseModel& noise,
                  double eta, RngStream& stream);

struct TrajectoryOptions {
  std::uint64_t stream_id = 0;
  bool store_iterates = false;
  bool store_test_values = false;
  /// Sorted iteration indices (burn-in included) at which the first test
  /// function is recorded into Trajectory::trace.
  std::vector<std::size_t> trace_iterations;
};

/// Runs n_iters steps from theta0 using RngStream(config.seed, stream_id) and
/// accumulates over the iterates theta_{burn_in+1}, ..., theta_{n_iters}.
Trajectory run_trajectory(const Objective& objective, const NoiseModel& noise,
                          const SgdConfig& config, std::span<const TestFunction> test_fns,
                          const TrajectoryOptions& options = {});

/// n^{-1/2} sum_k phi(theta_k) over the recording window. With `center`,
/// returns n^{-1/2} sum_k (phi(theta_k) - center).
double scaled_partial_sum(const Trajectory& trajectory, std::size_t test_index,
                          std::optional<double> center = std::nullopt);

/// (1/n) sum_k theta_k over the recording window.
Point polyak_ruppert_average(const Trajectory& trajectory);
/// Average of an explicit sequence of iterates.
Point polyak_ruppert_average(std::span<const Vector> iterates);

/// Writes `k,theta_1,...,theta_d` rows for the stored post burn-in iterates.
void write_iterates_csv(const Trajectory& trajectory, std::size_t burn_in,
                        const std::filesystem::path& path);

/// Runs `count` independent jobs on `workers` threads; job i receives index i.
/// Results land in slot i, so downstream reductions in index order are
/// independent of the worker count. Exceptions are collected per index.
struct ReplicationFailure {
  std::size_t index;
  std::string message;
  bool divergence;
};

std::vector<ReplicationFailure> parallel_for_indices(std::size_t count, std::size_t workers,
                                                     const std::function<void(std::size_t)>& job);

/// Worker count: SGDCHAIN_WORKERS if set, otherwise hardware concurrency.
std::size_t default_worker_count();

}  // namespace sgdchain
