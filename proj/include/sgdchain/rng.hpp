#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace sgdchain {

/// Counter-based random stream (Philox4x32-10). The 64-bit seed is the key;
/// the replication index occupies the upper half of the 128-bit counter, so
/// every (seed, stream_id) pair owns a disjoint 2^64-block sequence and no
/// coordination between replications is needed.
///
/// Satisfies UniformRandomBitGenerator, so the standard <random>
/// distributions can be driven by it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  double chi_squared(double df);
  /// scale * t(df), realized as N(0,1) / sqrt(chi2(df) / df).
  double student_t(double df, double scale = 1.0);
  /// Uniform index in [0, n).
  std::size_t below(std::size_t n);

  /// Raw Philox4x32-10 block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                                    std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::normal_distribution<double> normal_;
};

/// SplitMix64 finalizer; derives independent seeds for experiment cells.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace sgdchain
