#pragma once

#include <cstdint>
#include <vector>

#include "pbart/dataset.hpp"
#include "pbart/tree.hpp"

namespace pbart {

/// One saved draw: m trees and sigma (model scale).
struct Snapshot {
  double sigma = 1.0;
  Forest trees;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// Saved posterior draws plus what is needed to evaluate them.
struct PosteriorSample {
  std::uint32_t m = 0;
  std::uint32_t d = 0;
  std::uint32_t numcut = 0;
  ResponseScaling scaling;
  CutpointGrid grid;
  std::vector<Snapshot> snapshots;

  friend bool operator==(const PosteriorSample&, const PosteriorSample&) = default;
};

}  // namespace pbart
