#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pbart/rng.hpp"
#include "pbart/sampler/backend.hpp"
#include "pbart/sampler/posterior_sample.hpp"
#include "pbart/sampler/prior.hpp"

namespace pbart {

struct SamplerSettings {
  PriorSettings prior;
  std::uint32_t numcut = 100;
  /// Map y onto [-0.5, 0.5] before fitting. When false, y is used as-is and
  /// prior.tau / prior.lambda should normally be given explicitly.
  bool rescale = true;
  /// Drop the likelihood from the structural MH ratio (test hook).
  bool prior_only = false;
  /// Hold sigma at this model-scale value instead of drawing it (test hook).
  std::optional<double> fixed_sigma;
  std::optional<double> sigma_init;
};

/// Per-iteration chain diagnostics.
struct IterationLog {
  std::uint32_t iteration = 0;
  double sigma = 0.0;  // response units
  double mean_leaves = 0.0;
  std::uint32_t birth_proposed = 0;
  std::uint32_t birth_accepted = 0;
  std::uint32_t death_proposed = 0;
  std::uint32_t death_accepted = 0;

  friend bool operator==(const IterationLog&, const IterationLog&) = default;
};

/// Master-side state of one chain: the forest, sigma and the random stream.
/// Every data-dependent quantity comes from the backend.
class Chain {
 public:
  Chain(SamplerSettings settings, StatsBackend& backend, std::uint64_t seed);

  /// Collects the data summary, calibrates the prior and sets up the backend.
  void initialize();
  /// One sweep: birth/death + leaf draws for each tree, then sigma.
  IterationLog step();

  const Forest& forest() const { return forest_; }
  double sigma() const { return sigma_; }
  const PriorParams& prior() const { return prior_; }
  const CutpointGrid& grid() const { return grid_; }
  const ModelSetup& model_setup() const { return setup_; }
  std::uint64_t rows() const { return n_total_; }
  std::uint32_t iteration() const { return iteration_; }
  Snapshot snapshot() const { return Snapshot{sigma_, forest_}; }

 private:
  SamplerSettings settings_;
  StatsBackend& backend_;
  Rng rng_;
  PriorParams prior_;
  ModelSetup setup_;
  CutpointGrid grid_;
  Forest forest_;
  double sigma_ = 1.0;
  std::uint64_t n_total_ = 0;
  std::uint32_t iteration_ = 0;
  bool initialized_ = false;
};

struct RunPlan {
  std::uint32_t draws = 1000;  // total iterations, burn-in included
  std::uint32_t burn = 100;
  std::uint32_t thin = 1;
  std::uint64_t seed = 1;

  void validate() const;
  std::uint32_t kept() const { return (draws - burn + thin - 1) / thin; }
};

struct ChainResult {
  PosteriorSample posterior;
  std::vector<IterationLog> log;
};

/// Runs a chain for plan.draws iterations and keeps every thin-th post-burn-in
/// draw. `on_iteration` (optional) sees each log entry as it is produced.
ChainResult run_chain(const SamplerSettings& settings, StatsBackend& backend, const RunPlan& plan,
                      const std::function<void(const IterationLog&)>& on_iteration = {});

}  // namespace pbart
