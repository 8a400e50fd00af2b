#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pbart/analysis/posterior.hpp"
#include "pbart/rng.hpp"

namespace pbart {

/// Integration box; every variable ranges over [lo, hi].
struct Domain {
  double lo = -1.0;
  double hi = 1.0;
};

struct MainEffectCurve {
  std::size_t var = 0;
  double f0 = 0.0;
  std::vector<double> grid;
  std::vector<double> effect;  // E[f | x_var = g] - f0
  std::vector<double> se;      // Monte Carlo standard error of each effect
};

/// For each grid value g: mean of f over n_mc uniform draws of the other
/// variables with x_var = g, minus f0 (mean of f over n_mc full draws).
MainEffectCurve main_effect(const BatchPredictor& f, std::size_t d, std::size_t var, const std::vector<double>& grid,
                            std::size_t n_mc, Rng& rng, Domain domain = {});

/// `points` equally spaced values covering the domain, ends included.
std::vector<double> even_grid(std::size_t points, Domain domain = {});

struct SobolOptions {
  std::size_t n_s = 10000;  // rows per matrix, over all parts
  std::size_t parts = 10;   // independent (A, B) pairs, one random stream each
  std::uint64_t seed = 1;
  std::size_t threads = 1;  // parts run concurrently on this many threads
  Domain domain;
};

struct SobolIndex {
  std::size_t var = 0;
  double v_k = 0.0;
  double first = 0.0;  // S_k
  double first_se = 0.0;
  double total = 0.0;  // S_k^T (Jansen)
  double total_se = 0.0;
};

struct SobolResult {
  std::size_t n_s = 0;
  std::size_t parts = 0;
  double f0 = 0.0;
  double variance = 0.0;
  std::vector<SobolIndex> indices;  // in the order requested
};

/// First-order and total indices for `vars` (all d variables when empty).
/// Standard errors are batch means over parts and are NaN for one part.
/// Throws Error("zero total variance") when the estimated V is not positive.
SobolResult sobol_indices(const BatchPredictor& f, std::size_t d, const SobolOptions& options,
                          std::vector<std::size_t> vars = {});

SobolIndex sobol_first_order(const BatchPredictor& f, std::size_t d, std::size_t var, const SobolOptions& options);
SobolIndex sobol_total(const BatchPredictor& f, std::size_t d, std::size_t var, const SobolOptions& options);

/// Columns: variable (1-based),S,S_se,ST,ST_se,V_k,f0,V,n_s.
void write_sensitivity_report(const std::string& path, const SobolResult& result);
/// Columns: variable (1-based),x,effect,se.
void write_main_effects(const std::string& path, const std::vector<MainEffectCurve>& curves);

}  // namespace pbart
