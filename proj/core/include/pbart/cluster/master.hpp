#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "pbart/cluster/reduce.hpp"
#include "pbart/cluster/transport.hpp"
#include "pbart/sampler/backend.hpp"
#include "pbart/sampler/chain.hpp"

namespace pbart {

struct ClusterConfig {
  std::size_t workers = 1;
  std::size_t reduction_blocks = 0;  // 0 means "same as workers"
  SamplerSettings sampler;
  RunPlan plan;
  /// Broadcast sigma and compare forest hashes with every worker after each
  /// iteration.
  bool debug_checks = false;

  std::size_t blocks() const { return reduction_blocks == 0 ? workers : reduction_blocks; }
  void validate() const;
};

/// Receives HELLO from every channel and returns the channels ordered by
/// rank 1..p. Throws ProtocolError on a version mismatch or a bad rank set.
std::vector<std::unique_ptr<Channel>> handshake(std::vector<std::unique_ptr<Channel>> channels);

/// Master side of the exchange: implements every backend call by
/// broadcasting to the workers (sequential sends in rank order) and gathering
/// their partials (sequential receives in rank order). Holds no data.
class DistributedBackend final : public StatsBackend {
 public:
  /// `workers` must already be handshaken and ordered by rank.
  explicit DistributedBackend(std::vector<std::unique_ptr<Channel>> workers, bool debug_checks = false);
  ~DistributedBackend() override;

  DataSummary summarize() override;
  void setup(const ModelSetup& setup) override;
  void begin_iteration(std::uint32_t iteration) override;
  MoveStats move_stats(const Proposal& proposal) override;
  void accept_birth(std::uint32_t tree, NodeId node, std::uint32_t var, std::uint32_t cut, double mu_left,
                    double mu_right) override;
  void accept_death(std::uint32_t tree, NodeId node, double mu) override;
  void reject(std::uint32_t tree) override;
  std::vector<SuffStats> leaf_stats(std::uint32_t tree) override;
  void set_leaf_values(std::uint32_t tree, std::span<const double> mus) override;
  double rss() override;
  void end_iteration(const Forest& forest, double sigma) override;

  /// Sends SHUTDOWN to every worker; safe to call twice.
  void shutdown();
  std::size_t workers() const { return workers_.size(); }

 private:
  void broadcast(const protocol::Message& msg);
  /// One message per worker, rank order; each must carry `expected`.
  std::vector<protocol::Message> gather(protocol::Opcode expected);

  std::vector<std::unique_ptr<Channel>> workers_;
  bool debug_checks_;
  bool shut_down_ = false;
  std::uint32_t iteration_ = 0;
};

/// Runs the chain against already-connected workers and shuts them down.
ChainResult run_master(const ClusterConfig& config, std::vector<std::unique_ptr<Channel>> workers,
                       const std::function<void(const IterationLog&)>& on_iteration = {});

}  // namespace pbart
