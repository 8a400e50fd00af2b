#pragma once

#include <cstddef>

#include "pbart/cluster/transport.hpp"
#include "pbart/sampler/shard_engine.hpp"

namespace pbart {

/// Serves one master over `channel` until SHUTDOWN: announces itself with
/// HELLO and SHARD_META, then answers every request from `engine`. Draws no
/// random numbers. Returns the number of iterations served.
std::size_t run_worker(std::size_t rank, ShardEngine& engine, Channel& channel);

}  // namespace pbart
