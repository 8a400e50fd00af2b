#include "pbart/sampler/prior.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "pbart/error.hpp"

namespace pbart {

void PriorParams::validate() const {
  if (m < 1) throw ConfigError("m", "must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
  if (!(beta >= 0.0)) throw ConfigError("beta", "must be non-negative");
  if (!(kfac > 0.0)) throw ConfigError("kfac", "must be positive");
  if (!(tau > 0.0)) throw ConfigError("tau", "must be positive");
  if (!(nu > 0.0)) throw ConfigError("nu", "must be positive");
  if (!(lambda > 0.0)) throw ConfigError("lambda", "must be positive");
}

double split_prior_prob(int depth, double alpha, double beta) {
  return alpha * std::pow(1.0 + depth, -beta);
}

PriorParams calibrate_prior(const PriorSettings& s, double model_scale_sd) {
  PriorParams p;
  p.m = s.m;
  p.alpha = s.alpha;
  p.beta = s.beta;
  p.kfac = s.kfac;
  p.nu = s.nu;
  p.min_leaf = s.min_leaf;
  if (!(s.kfac > 0.0)) throw ConfigError("kfac", "must be positive");
  if (s.m < 1) throw ConfigError("m", "must be at least 1");
  p.tau = s.tau ? *s.tau : 0.5 / (s.kfac * std::sqrt(static_cast<double>(s.m)));
  if (s.lambda) {
    p.lambda = *s.lambda;
  } else {
    if (!(s.sigma_quantile > 0.0 && s.sigma_quantile < 1.0)) {
      throw ConfigError("q", "must lie in (0, 1)");
    }
    if (!(s.nu > 0.0)) throw ConfigError("nu", "must be positive");
    // P(sigma < sd) = P(chi2_nu > nu*lambda/sd^2) = q.
    const double sd = model_scale_sd > 0.0 ? model_scale_sd : 1.0;
    boost::math::chi_squared chi(s.nu);
    const double qchi = boost::math::quantile(chi, 1.0 - s.sigma_quantile);
    p.lambda = sd * sd * qchi / s.nu;
  }
  p.validate();
  return p;
}

}  // namespace pbart
