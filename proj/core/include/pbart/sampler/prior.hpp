#pragma once

#include <cstdint>
#include <optional>

namespace pbart {

/// User-facing prior knobs. Derived quantities (tau, lambda) are filled in by
/// calibrate_prior unless overridden.
struct PriorSettings {
  std::uint32_t m = 200;
  double alpha = 0.95;
  double beta = 2.0;
  double kfac = 2.0;
  double nu = 3.0;
  double sigma_quantile = 0.9;
  std::uint32_t min_leaf = 5;
  std::optional<double> tau;
  std::optional<double> lambda;
};

/// Fully resolved prior on the model (rescaled) response scale.
struct PriorParams {
  std::uint32_t m = 200;
  double alpha = 0.95;
  double beta = 2.0;
  double kfac = 2.0;
  double tau = 0.0;
  double nu = 3.0;
  double lambda = 1.0;
  std::uint32_t min_leaf = 5;

  /// Throws ConfigError naming the first field outside its domain.
  void validate() const;
};

/// alpha * (1 + depth)^(-beta).
double split_prior_prob(int depth, double alpha, double beta);

/// tau = 0.5 / (kfac * sqrt(m)); lambda chosen so that P(sigma < sd) = q
/// under sigma^2 ~ nu * lambda / chi^2_nu, where sd is the response sd on the
/// model scale.
PriorParams calibrate_prior(const PriorSettings& settings, double model_scale_sd);

}  // namespace pbart
