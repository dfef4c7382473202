#pragma once

// Command-line front end: the RunSpec config format and the subcommands
// generate-data, run, clt, bias, variance, check and constants.

#include "sgdchain/core.hpp"
#include "sgdchain/noise.hpp"
#include "sgdchain/objectives.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sgdchain {

struct NoiseSpec {
  std::string kind = "gaussian";  // none | gaussian | student-t | minibatch
  double sigma = 1.0;
  double df = 5.0;
  double scale = 1.0;
  bool with_replacement = true;
  bool operator==(const NoiseSpec&) const = default;
};

struct SgdSpec {
  double eta = 0.1;
  std::size_t n_iters = 1000;
  std::size_t burn_in = 0;
  std::optional<Point> theta0;  // origin when unset
  std::uint64_t seed = 1;
  std::size_t batch_size = 1;
  bool operator==(const SgdSpec&) const = default;
};

struct ExperimentSpec {
  std::size_t N = 1000;
  std::vector<double> etas;   // empty: use sgd.eta
  std::vector<Point> inits;   // empty: use sgd.theta0
  double skew_tol = 0.15;
  double kurt_tol = 0.3;
  double level = 0.95;        // confidence level for intervals
  std::string strategy = "batch-means";  // or replication
  std::size_t batch_len = 0;  // 0: power of two nearest sqrt(n)
  std::size_t trace_points = 100;
  bool force = false;
  bool operator==(const ExperimentSpec&) const = default;
};

struct RunSpec {
  ObjectiveSpec objective;
  NoiseSpec noise;
  SgdSpec sgd;
  std::vector<std::string> test_functions{"norm"};
  ExperimentSpec experiment;
  std::string output_dir = "out";
  bool operator==(const RunSpec&) const = default;
};

/// Flat `key = value` lines with dotted section prefixes. Blank lines and
/// lines starting with '#' are ignored.
std::string serialize_run_spec(const RunSpec& spec);
RunSpec parse_run_spec(std::string_view text);

/// Applies one `key = value` (or `key=value`) assignment; unknown keys throw.
void apply_setting(RunSpec& spec, std::string_view key, std::string_view value);
std::vector<std::string> run_spec_keys();

/// Builds the pieces a RunSpec describes.
ObjectivePtr build_objective(const RunSpec& spec);
NoiseModel build_noise(const RunSpec& spec, const ObjectivePtr& objective);
TestFunction build_test_function(std::string_view name, const ObjectivePtr& objective);
SgdConfig build_sgd_config(const RunSpec& spec, std::size_t dim);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitCertification = 3;

/// Entry point used by the executable; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sgdchain
