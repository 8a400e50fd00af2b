#pragma once

#include <cstdint>

#include "pbart/rng.hpp"

namespace pbart {

/// Per-node sufficient statistics of partial residuals. Additive across
/// disjoint row sets.
struct SuffStats {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double r) {
    ++n;
    sum += r;
    sumsq += r * r;
  }
  SuffStats& operator+=(const SuffStats& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
    return *this;
  }
  friend SuffStats operator+(SuffStats a, const SuffStats& b) { return a += b; }
  friend bool operator==(const SuffStats&, const SuffStats&) = default;
};

/// Child statistics for one structural move (left/right of a proposed
/// split, or the two children about to be removed).
struct MoveStats {
  SuffStats left;
  SuffStats right;

  SuffStats merged() const { return left + right; }
  friend MoveStats operator+(const MoveStats& a, const MoveStats& b) {
    return {a.left + b.left, a.right + b.right};
  }
  friend bool operator==(const MoveStats&, const MoveStats&) = default;
};

/// Log of the node's integrated likelihood relative to mu = 0, with
/// mu ~ N(0, tau^2). Reads only (n, sum).
double log_marginal_likelihood(const SuffStats& stats, double sigma, double tau);

/// Draw from mu | stats ~ N(tau^2 s / (sigma^2 + n tau^2), sigma^2 tau^2 / (sigma^2 + n tau^2)).
double draw_mu(const SuffStats& stats, double sigma, double tau, Rng& rng);

/// sqrt((nu*lambda + rss) / chi^2_{nu + n}).
double draw_sigma(std::uint64_t n_total, double rss, double nu, double lambda, Rng& rng);

}  // namespace pbart
