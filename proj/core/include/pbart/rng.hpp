#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pbart {

/// The single random stream owned by a chain (or by one Monte Carlo part).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return normal_(engine_); }
  double chi_square(double dof);
  double exponential(double mean);
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives well-separated child seeds (SplitMix64), e.g. one per Monte Carlo part.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pbart
