#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pbart/dataset.hpp"
#include "pbart/rng.hpp"

namespace pbart {

/// One Gaussian bump a * exp(-0.5 z' U D^-1 U' z), z = x[vars] - mu.
struct FriedmanKernel {
  double a = 0.0;
  std::vector<std::size_t> vars;
  std::vector<double> mu;
  std::vector<double> rotation;  // k x k, row-major, orthogonal
  std::vector<double> dilation;  // diagonal of D, each in [0.01, 4]
};

struct FriedmanSpec {
  std::size_t d = 40;
  std::vector<FriedmanKernel> kernels;
};

/// Subset size = min(d, floor(offset + r)), r ~ exponential with this mean.
struct SubsetLaw {
  double offset = 1.5;
  double mean = 2.0;
};

FriedmanSpec gen_spec(std::size_t d, std::size_t q, Rng& rng, const SubsetLaw& law = {});

/// Noiseless value; x must have spec.d entries.
double eval_friedman(const FriedmanSpec& spec, std::span<const double> x);

struct GeneratedData {
  Dataset data;           // x ~ U[-1,1]^d, y = f + N(0, sigma_noise^2)
  std::vector<double> f;  // noiseless values
};

GeneratedData gen_dataset(const FriedmanSpec& spec, std::size_t n, double sigma_noise, Rng& rng);

}  // namespace pbart
