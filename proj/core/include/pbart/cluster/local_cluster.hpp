#pragma once

#include <cstddef>
#include <functional>
#include <memory>

#include "pbart/cluster/master.hpp"
#include "pbart/cluster/transport.hpp"
#include "pbart/dataset.hpp"
#include "pbart/sampler/chain.hpp"

namespace pbart {

struct LocalClusterOptions {
  std::size_t workers = 1;
  std::size_t reduction_blocks = 0;  // 0 means "same as workers"
  bool debug_checks = false;
  /// When set, every master-side channel counts its traffic here.
  std::shared_ptr<ByteCounters> counters;
};

/// Master plus `workers` worker threads in this process, connected by
/// in-process channels. Each worker gets a contiguous block-aligned shard.
/// A worker failure is rethrown here.
ChainResult run_local_cluster(const Dataset& data, const SamplerSettings& settings, const RunPlan& plan,
                              const LocalClusterOptions& options,
                              const std::function<void(const IterationLog&)>& on_iteration = {});

/// Single process, no messages. `reduction_blocks` fixes the summation
/// order; with the same block count as a cluster run the draws are identical.
ChainResult run_serial(const Dataset& data, const SamplerSettings& settings, const RunPlan& plan,
                       std::size_t reduction_blocks = 1,
                       const std::function<void(const IterationLog&)>& on_iteration = {});

}  // namespace pbart
