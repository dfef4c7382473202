#pragma once

// Gradient-noise models and synthetic regression data.

#include "sgdchain/core.hpp"
#include "sgdchain/rng.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace sgdchain {

struct RegressionDataset {
  Matrix X;  // m x d
  Vector y;  // m
  std::optional<Point> theta_true;

  struct Meta {
    std::size_t m = 0;
    std::size_t d = 0;
    double noise_df = 0.0;
    std::uint64_t seed = 0;
  } meta;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
};

/// X_ij = +-1/sqrt(d) with probability 1/2 each, (theta_true)_i ~ Unif(0,1),
/// y = X theta_true + t(noise_df) noise.
RegressionDataset gen_regression_data(std::size_t m, std::size_t d, double noise_df,
                                      RngStream& stream);

/// Writes `<stem>.csv` (header y,x1,...,xd) and the `<stem>.json` sidecar.
/// Returns the two paths written.
std::pair<std::filesystem::path, std::filesystem::path> write_regression_data(
    const RegressionDataset& data, const std::filesystem::path& stem);

/// Reads the CSV; picks up the sidecar JSON next to it when present.
RegressionDataset read_regression_data(const std::filesystem::path& csv_path);

/// One draw of scale * t(df).
double sample_student_t(RngStream& stream, double df, double scale);

class NoiseModel {
 public:
  enum class Kind { none, gaussian_iid, student_t_iid, minibatch };

  static NoiseModel none();
  static NoiseModel gaussian(double sigma);
  static NoiseModel student_t(double df, double scale = 1.0);
  /// Centered mini-batch gradient (1/b) sum_j [grad F_j - grad f]. Indices are
  /// drawn uniformly with replacement unless `with_replacement` is false.
  static NoiseModel minibatch(std::shared_ptr<const FiniteSumObjective> objective,
                              std::size_t batch_size, bool with_replacement = true);

  Kind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double df() const { return df_; }
  double scale() const { return scale_; }
  std::size_t batch_size() const { return batch_size_; }
  bool with_replacement() const { return with_replacement_; }

  /// One realization of xi(theta), written to `out`.
  void draw(const Vector& theta, RngStream& stream, Vector& out) const;
  Vector draw(const Vector& theta, RngStream& stream) const;

  /// grad f(theta) + xi(theta). For mini-batches only the batch gradient is
  /// computed. `objective` supplies grad f for the additive kinds.
  void stochastic_gradient(const Objective& objective, const Vector& theta, RngStream& stream,
                           Vector& out) const;

  /// Smallest L_xi with E^{1/2}|xi|^2 <= L_xi (1+|t|) and
  /// E|xi|^4 <= L_xi (1+|t|^4) in dimension d, for the additive kinds.
  /// nullopt for mini-batch noise (depends on the data).
  std::optional<double> moment_constant(std::size_t dim) const;

  std::string describe() const;

 private:
  NoiseModel() = default;

  void minibatch_mean_gradient(const Vector& theta, RngStream& stream, Vector& out) const;

  Kind kind_ = Kind::none;
  double sigma_ = 0.0;
  double df_ = 0.0;
  double scale_ = 1.0;
  std::size_t batch_size_ = 0;
  bool with_replacement_ = true;
  std::shared_ptr<const FiniteSumObjective> data_objective_;
};

}  // namespace sgdchain
