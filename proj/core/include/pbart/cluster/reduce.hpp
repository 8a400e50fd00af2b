#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "pbart/dataset.hpp"
#include "pbart/error.hpp"

namespace pbart {

template <class T>
struct RankedPartial {
  std::size_t rank = 0;  // 1..p
  T value{};
};

/// Combines one partial per worker rank 1..p. Partials are put in rank order
/// first, then combined by pairwise_reduce, so arrival order never changes the
/// bits of the result. Missing or duplicate ranks are protocol errors.
template <class T, class Combine>
T reduce_stats(std::vector<RankedPartial<T>> partials, std::size_t workers, Combine combine) {
  if (partials.size() != workers || workers == 0) {
    throw ProtocolError("expected " + std::to_string(workers) + " partials, got " + std::to_string(partials.size()));
  }
  std::sort(partials.begin(), partials.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  std::vector<T> ordered;
  ordered.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    if (partials[i].rank != i + 1) throw ProtocolError("missing partial from rank " + std::to_string(i + 1));
    ordered.push_back(std::move(partials[i].value));
  }
  return pairwise_reduce<T>(ordered, combine);
}

}  // namespace pbart
