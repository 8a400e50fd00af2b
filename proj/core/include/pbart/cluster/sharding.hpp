#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pbart/dataset.hpp"

namespace pbart {

/// Half-open row range [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

/// Sizes of `parts` contiguous pieces of `n` rows; the first n % parts pieces
/// get one extra row. Throws Error("more workers than rows") when parts > n.
std::vector<std::size_t> split_sizes(std::size_t n, std::size_t parts);
std::vector<RowRange> split_ranges(std::size_t n, std::size_t parts);

/// One worker's portion of the data. Ranks are 1..p (rank 0 is the master,
/// which holds no rows).
struct Shard {
  std::size_t rank = 1;
  RowRange range;
  Dataset data;
};

std::vector<Shard> shard_data(const Dataset& rows, std::size_t p);

/// Layout of reduction blocks over workers: `blocks` global blocks over n
/// rows; worker i (0-based) owns blocks [i*blocks/p, (i+1)*blocks/p).
/// Requires blocks % p == 0 and blocks <= n.
struct BlockLayout {
  std::size_t n = 0;
  std::size_t workers = 1;
  std::size_t blocks = 1;

  void validate() const;
  std::vector<std::size_t> block_sizes() const;
  RowRange worker_rows(std::size_t worker) const;
  std::vector<std::size_t> worker_block_sizes(std::size_t worker) const;
};

}  // namespace pbart
