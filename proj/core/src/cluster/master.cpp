#include "pbart/cluster/master.hpp"

#include <algorithm>
#include <string>

#include "pbart/cluster/reduce.hpp"
#include "pbart/error.hpp"

namespace pbart {

using namespace protocol;

void ClusterConfig::validate() const {
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
  if (blocks() % workers != 0) throw ConfigError("reduction_blocks", "must be a multiple of workers");
  plan.validate();
}

std::vector<std::unique_ptr<Channel>> handshake(std::vector<std::unique_ptr<Channel>> channels) {
  const std::size_t p = channels.size();
  std::vector<std::unique_ptr<Channel>> ordered(p);
  for (auto& ch : channels) {
    const auto msg = receive_message(*ch);
    const auto* hello = std::get_if<HelloMsg>(&msg);
    if (hello == nullptr) throw ProtocolError("expected HELLO from a new worker");
    if (hello->version != kVersion) {
      throw ProtocolError("worker speaks protocol version " + std::to_string(hello->version) + ", expected " +
                          std::to_string(kVersion));
    }
    if (hello->rank < 1 || hello->rank > p) {
      throw ProtocolError("worker rank " + std::to_string(hello->rank) + " outside 1.." + std::to_string(p));
    }
    if (ordered[hello->rank - 1]) throw ProtocolError("duplicate worker rank " + std::to_string(hello->rank));
    ordered[hello->rank - 1] = std::move(ch);
  }
  return ordered;
}

DistributedBackend::DistributedBackend(std::vector<std::unique_ptr<Channel>> workers, bool debug_checks)
    : workers_(std::move(workers)), debug_checks_(debug_checks) {
  if (workers_.empty()) throw ConfigError("workers", "must be at least 1");
}

DistributedBackend::~DistributedBackend() {
  try {
    shutdown();
  } catch (const std::exception&) {
    // Workers may already be gone after a failure.
  }
}

void DistributedBackend::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  broadcast(ShutdownMsg{});
}

void DistributedBackend::broadcast(const Message& msg) {
  const auto bytes = encode(msg);
  for (auto& w : workers_) w->send(bytes);
}

std::vector<Message> DistributedBackend::gather(Opcode expected) {
  std::vector<Message> out;
  out.reserve(workers_.size());
  for (std::size_t i = 0; i < workers_.size(); ++i) {
    Message msg = receive_message(*workers_[i]);
    if (opcode_of(msg) != expected) {
      throw ProtocolError("rank " + std::to_string(i + 1) + " sent " + name_of(opcode_of(msg)) + ", expected " +
                          name_of(expected));
    }
    out.push_back(std::move(msg));
  }
  return out;
}

DataSummary DistributedBackend::summarize() {
  std::vector<RankedPartial<DataSummary>> parts;
  std::size_t rank = 1;
  for (auto& msg : gather(Opcode::ShardMeta)) parts.push_back({rank++, std::get<ShardMetaMsg>(msg).summary});
  return reduce_stats(std::move(parts), workers_.size(), DataSummary::combine);
}

void DistributedBackend::setup(const ModelSetup& setup) { broadcast(ModelSetupMsg{setup}); }

void DistributedBackend::begin_iteration(std::uint32_t iteration) {
  iteration_ = iteration;
  broadcast(IterBeginMsg{iteration, 0});
}

MoveStats DistributedBackend::move_stats(const Proposal& p) {
  if (p.move == Move::Birth) {
    broadcast(BirthProposalMsg{p.node, p.var, p.cut});
  } else if (p.move == Move::Death) {
    broadcast(DeathProposalMsg{left_id(p.node), right_id(p.node)});
  } else {
    throw Error("move_stats called with a null proposal");
  }
  std::vector<RankedPartial<MoveStats>> parts;
  std::size_t rank = 1;
  for (auto& msg : gather(Opcode::MoveStats)) parts.push_back({rank++, from_wire(std::get<MoveStatsMsg>(msg))});
  return reduce_stats(std::move(parts), workers_.size(), [](const MoveStats& a, const MoveStats& b) { return a + b; });
}

void DistributedBackend::accept_birth(std::uint32_t, NodeId node, std::uint32_t var, std::uint32_t cut,
                                      double mu_left, double mu_right) {
  broadcast(BirthAcceptMsg{node, var, cut, mu_left, mu_right});
}

void DistributedBackend::accept_death(std::uint32_t, NodeId node, double mu) { broadcast(DeathAcceptMsg{node, mu}); }

void DistributedBackend::reject(std::uint32_t) { broadcast(RejectMsg{}); }

std::vector<SuffStats> DistributedBackend::leaf_stats(std::uint32_t) {
  std::vector<RankedPartial<std::vector<SuffStats>>> parts;
  std::size_t rank = 1;
  for (auto& msg : gather(Opcode::MuStats)) {
    parts.push_back({rank, from_wire(std::get<MuStatsMsg>(msg))});
    if (parts.back().value.size() != parts.front().value.size()) {
      throw ProtocolError("rank " + std::to_string(rank) + " reports a different terminal-node count");
    }
    ++rank;
  }
  return reduce_stats(std::move(parts), workers_.size(),
                      [](const std::vector<SuffStats>& l, const std::vector<SuffStats>& r) {
                        std::vector<SuffStats> out(l.size());
                        for (std::size_t k = 0; k < l.size(); ++k) out[k] = l[k] + r[k];
                        return out;
                      });
}

void DistributedBackend::set_leaf_values(std::uint32_t, std::span<const double> mus) {
  broadcast(MuValuesMsg{std::vector<double>(mus.begin(), mus.end())});
}

double DistributedBackend::rss() {
  broadcast(IterBeginMsg{iteration_, 1});
  std::vector<RankedPartial<double>> parts;
  std::size_t rank = 1;
  for (auto& msg : gather(Opcode::RssPartial)) parts.push_back({rank++, std::get<RssPartialMsg>(msg).rss});
  return reduce_stats(std::move(parts), workers_.size(), [](double a, double b) { return a + b; });
}

void DistributedBackend::end_iteration(const Forest& forest, double sigma) {
  if (!debug_checks_) return;
  broadcast(SigmaUpdateMsg{sigma});
  const std::uint64_t hash = forest_hash(forest);
  broadcast(ForestHashMsg{hash});
  std::size_t rank = 1;
  for (auto& msg : gather(Opcode::ForestHash)) {
    if (std::get<ForestHashMsg>(msg).hash != hash) {
      throw ProtocolError("replica divergence: rank " + std::to_string(rank) + " forest differs from the master's");
    }
    ++rank;
  }
}

ChainResult run_master(const ClusterConfig& config, std::vector<std::unique_ptr<Channel>> workers,
                       const std::function<void(const IterationLog&)>& on_iteration) {
  config.validate();
  if (workers.size() != config.workers) {
    throw ConfigError("workers", "expected " + std::to_string(config.workers) + " connections, got " +
                                     std::to_string(workers.size()));
  }
  DistributedBackend backend(handshake(std::move(workers)), config.debug_checks);
  ChainResult result = run_chain(config.sampler, backend, config.plan, on_iteration);
  backend.shutdown();
  return result;
}

}  // namespace pbart
