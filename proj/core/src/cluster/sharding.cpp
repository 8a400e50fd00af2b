#include "pbart/cluster/sharding.hpp"

#include <string>

#include "pbart/error.hpp"

namespace pbart {

std::vector<std::size_t> split_sizes(std::size_t n, std::size_t parts) {
  if (parts == 0) throw Error("need at least one part");
  if (parts > n) throw Error("more workers than rows");
  std::vector<std::size_t> sizes(parts, n / parts);
  for (std::size_t i = 0; i < n % parts; ++i) ++sizes[i];
  return sizes;
}

std::vector<RowRange> split_ranges(std::size_t n, std::size_t parts) {
  std::vector<RowRange> out;
  std::size_t start = 0;
  for (std::size_t s : split_sizes(n, parts)) {
    out.push_back({start, start + s});
    start += s;
  }
  return out;
}

std::vector<Shard> shard_data(const Dataset& rows, std::size_t p) {
  if (rows.rows() == 0) throw Error("empty dataset");
  std::vector<Shard> shards;
  std::size_t rank = 1;
  for (const auto& r : split_ranges(rows.rows(), p)) {
    shards.push_back(Shard{rank++, r, rows.slice(r.begin, r.end)});
  }
  return shards;
}

void BlockLayout::validate() const {
  if (workers == 0) throw ConfigError("workers", "must be at least 1");
  if (blocks == 0) throw ConfigError("reduction_blocks", "must be at least 1");
  if (blocks % workers != 0) {
    throw ConfigError("reduction_blocks", "must be a multiple of the worker count (" + std::to_string(workers) + ")");
  }
  if (blocks > n) throw ConfigError("reduction_blocks", "exceeds the number of rows");
}

std::vector<std::size_t> BlockLayout::block_sizes() const { return split_sizes(n, blocks); }

RowRange BlockLayout::worker_rows(std::size_t worker) const {
  validate();
  const auto sizes = block_sizes();
  const std::size_t per = blocks / workers;
  RowRange r;
  for (std::size_t b = 0; b < worker * per; ++b) r.begin += sizes[b];
  r.end = r.begin;
  for (std::size_t b = worker * per; b < (worker + 1) * per; ++b) r.end += sizes[b];
  return r;
}

std::vector<std::size_t> BlockLayout::worker_block_sizes(std::size_t worker) const {
  validate();
  const auto sizes = block_sizes();
  const std::size_t per = blocks / workers;
  return {sizes.begin() + static_cast<std::ptrdiff_t>(worker * per),
          sizes.begin() + static_cast<std::ptrdiff_t>((worker + 1) * per)};
}

}  // namespace pbart
