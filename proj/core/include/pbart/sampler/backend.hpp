#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pbart/dataset.hpp"
#include "pbart/sampler/conjugate.hpp"
#include "pbart/sampler/proposal.hpp"
#include "pbart/tree.hpp"

namespace pbart {

/// What the data side needs to start a chain: tree count, response scaling
/// and the ranges from which every process rebuilds the same cutpoint grid.
struct ModelSetup {
  std::uint32_t m = 0;
  std::uint32_t numcut = 100;
  ResponseScaling scaling;
  std::vector<double> x_min;
  std::vector<double> x_max;

  CutpointGrid grid() const;
  friend bool operator==(const ModelSetup&, const ModelSetup&) = default;
};

/// The data-facing half of the sampler. The chain (master logic) owns all
/// randomness and tree decisions and calls into a backend for every quantity
/// that depends on rows. A serial run and a distributed run differ only in
/// the backend. Trees are visited in order 0..m-1 within an iteration.
class StatsBackend {
 public:
  virtual ~StatsBackend() = default;

  virtual DataSummary summarize() = 0;
  virtual void setup(const ModelSetup& setup) = 0;

  virtual void begin_iteration(std::uint32_t /*iteration*/) {}
  virtual MoveStats move_stats(const Proposal& proposal) = 0;
  virtual void accept_birth(std::uint32_t tree, NodeId node, std::uint32_t var, std::uint32_t cut, double mu_left,
                            double mu_right) = 0;
  virtual void accept_death(std::uint32_t tree, NodeId node, double mu) = 0;
  /// Rejected move or null proposal.
  virtual void reject(std::uint32_t tree) = 0;
  /// One entry per terminal node of the tree, ascending node id.
  virtual std::vector<SuffStats> leaf_stats(std::uint32_t tree) = 0;
  virtual void set_leaf_values(std::uint32_t tree, std::span<const double> mus) = 0;
  virtual double rss() = 0;
  /// Hook for replica checks; `sigma` is on the model scale.
  virtual void end_iteration(const Forest& /*forest*/, double /*sigma*/) {}
};

}  // namespace pbart
