#include "pbart/sampler/conjugate.hpp"

#include <cmath>

namespace pbart {

double log_marginal_likelihood(const SuffStats& stats, double sigma, double tau) {
  const double s2 = sigma * sigma;
  const double t2 = tau * tau;
  const double denom = s2 + static_cast<double>(stats.n) * t2;
  return 0.5 * std::log(s2 / denom) + t2 * stats.sum * stats.sum / (2.0 * s2 * denom);
}

double draw_mu(const SuffStats& stats, double sigma, double tau, Rng& rng) {
  const double s2 = sigma * sigma;
  const double t2 = tau * tau;
  const double denom = s2 + static_cast<double>(stats.n) * t2;
  const double mean = t2 * stats.sum / denom;
  const double sd = std::sqrt(s2 * t2 / denom);
  return mean + sd * rng.normal();
}

double draw_sigma(std::uint64_t n_total, double rss, double nu, double lambda, Rng& rng) {
  const double chi = rng.chi_square(nu + static_cast<double>(n_total));
  return std::sqrt((nu * lambda + rss) / chi);
}

}  // namespace pbart
