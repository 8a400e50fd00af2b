#include "pbart/datagen/friedman.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pbart/error.hpp"

namespace pbart {

namespace {

// Orthogonal factor of a standard normal matrix, with column signs fixed so
// the R factor has a positive diagonal.
std::vector<double> random_rotation(std::size_t k, Rng& rng) {
  Eigen::MatrixXd g(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < k; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  std::vector<double> out(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = q(i, j);
  return out;
}

}  // namespace

FriedmanSpec gen_spec(std::size_t d, std::size_t q, Rng& rng, const SubsetLaw& law) {
  if (d < 1) throw ConfigError("d", "must be at least 1");
  if (q < 1) throw ConfigError("q", "must be at least 1");
  FriedmanSpec spec;
  spec.d = d;
  spec.kernels.resize(q);
  for (auto& k : spec.kernels) {
    k.a = rng.uniform(-1.0, 1.0);
    const double raw = std::floor(law.offset + rng.exponential(law.mean));
    const std::size_t size = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, d);

    // Partial Fisher-Yates for a uniform subset without replacement.
    std::vector<std::size_t> pool(d);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < size; ++i) std::swap(pool[i], pool[i + rng.index(d - i)]);
    k.vars.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));

    k.mu.resize(size);
    for (auto& v : k.mu) v = rng.uniform(-1.0, 1.0);
    k.rotation = random_rotation(size, rng);
    k.dilation.resize(size);
    for (auto& v : k.dilation) {
      const double root = rng.uniform(0.1, 2.0);
      v = root * root;
    }
  }
  return spec;
}

double eval_friedman(const FriedmanSpec& spec, std::span<const double> x) {
  if (x.size() != spec.d) {
    throw Error("input has " + std::to_string(x.size()) + " values, expected " + std::to_string(spec.d));
  }
  double total = 0.0;
  std::vector<double> z;
  for (const auto& k : spec.kernels) {
    const std::size_t s = k.vars.size();
    z.resize(s);
    for (std::size_t i = 0; i < s; ++i) z[i] = x[k.vars[i]] - k.mu[i];
    double quad = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      double w = 0.0;  // (U' z)_j
      for (std::size_t i = 0; i < s; ++i) w += k.rotation[i * s + j] * z[i];
      quad += w * w / k.dilation[j];
    }
    total += k.a * std::exp(-0.5 * quad);
  }
  return total;
}

GeneratedData gen_dataset(const FriedmanSpec& spec, std::size_t n, double sigma_noise, Rng& rng) {
  if (n < 1) throw ConfigError("n", "must be at least 1");
  if (!(sigma_noise >= 0.0)) throw ConfigError("sigma", "must be non-negative");
  GeneratedData out;
  out.data.x = RowMatrix(n, spec.d);
  out.data.y.resize(n);
  out.f.resize(n);
  for (std::size_t j = 0; j < spec.d; ++j) out.data.names.push_back("x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.data.x.row(i);
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
    out.f[i] = eval_friedman(spec, row);
    out.data.y[i] = sigma_noise > 0.0 ? out.f[i] + sigma_noise * rng.normal() : out.f[i];
  }
  return out;
}

}  // namespace pbart
