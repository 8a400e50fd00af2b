#include "pbart/cluster/local_cluster.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "pbart/cluster/sharding.hpp"
#include "pbart/cluster/worker.hpp"
#include "pbart/error.hpp"
#include "pbart/sampler/shard_engine.hpp"

namespace pbart {

ChainResult run_local_cluster(const Dataset& data, const SamplerSettings& settings, const RunPlan& plan,
                              const LocalClusterOptions& options,
                              const std::function<void(const IterationLog&)>& on_iteration) {
  ClusterConfig config;
  config.workers = options.workers;
  config.reduction_blocks = options.reduction_blocks;
  config.sampler = settings;
  config.plan = plan;
  config.debug_checks = options.debug_checks;
  config.validate();

  const BlockLayout layout{data.rows(), config.workers, config.blocks()};
  layout.validate();

  std::vector<std::unique_ptr<Channel>> master_side;
  std::vector<std::thread> threads;
  std::mutex error_mutex;
  std::exception_ptr worker_error;

  for (std::size_t w = 0; w < config.workers; ++w) {
    auto [m, s] = make_inprocess_pair();
    if (options.counters) m = std::make_unique<CountingChannel>(std::move(m), options.counters);
    master_side.push_back(std::move(m));
    const RowRange rows = layout.worker_rows(w);
    threads.emplace_back([&, w, rows, ch = std::shared_ptr<Channel>(std::move(s))] {
      try {
        ShardEngine engine(data.slice(rows.begin, rows.end), layout.worker_block_sizes(w));
        run_worker(w + 1, engine, *ch);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!worker_error) worker_error = std::current_exception();
      }
    });
  }

  ChainResult result;
  std::exception_ptr master_error;
  try {
    result = run_master(config, std::move(master_side), on_iteration);
  } catch (...) {
    master_error = std::current_exception();
  }
  // The master's channels are gone by now, so a worker blocked in receive
  // wakes up with a TransportError.
  for (auto& t : threads) t.join();
  if (worker_error) {
    // A worker-side failure is the root cause of the master's transport
    // error, so report it first.
    std::rethrow_exception(worker_error);
  }
  if (master_error) std::rethrow_exception(master_error);
  return result;
}

ChainResult run_serial(const Dataset& data, const SamplerSettings& settings, const RunPlan& plan,
                       std::size_t reduction_blocks,
                       const std::function<void(const IterationLog&)>& on_iteration) {
  if (reduction_blocks == 0) throw ConfigError("reduction_blocks", "must be at least 1");
  if (reduction_blocks > data.rows()) throw ConfigError("reduction_blocks", "exceeds the number of rows");
  ShardEngine engine = ShardEngine::with_blocks(data, reduction_blocks);
  return run_chain(settings, engine, plan, on_iteration);
}

}  // namespace pbart
