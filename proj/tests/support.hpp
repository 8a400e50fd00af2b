#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

#include "pbart/dataset.hpp"
#include "pbart/rng.hpp"
#include "pbart/tree.hpp"

namespace pbart::testing {

/// Grows `splits` random legal splits into a fresh tree.
inline Tree random_tree(std::size_t splits, const CutpointGrid& grid, Rng& rng, int max_depth = 30) {
  Tree t(rng.normal());
  for (std::size_t s = 0; s < splits; ++s) {
    auto leaves = t.nodes(NodeKind::Terminal);
    for (int attempt = 0; attempt < 50; ++attempt) {
      TreeNode* leaf = leaves[rng.index(leaves.size())];
      if (depth_of(leaf->id) >= max_depth) continue;
      const auto v = static_cast<std::uint32_t>(rng.index(grid.num_variables()));
      const CutRange r = t.rule_range(*leaf, v, grid);
      if (r.size() == 0) continue;
      const auto c = r.lo + static_cast<std::uint32_t>(rng.index(r.size()));
      t.split(leaf->id, v, c, rng.normal(), rng.normal());
      break;
    }
  }
  return t;
}

inline CutpointGrid uniform_grid(std::size_t d, int numcut) {
  std::vector<std::vector<double>> cuts;
  for (std::size_t v = 0; v < d; ++v) cuts.push_back(cutpoints_between(-1.0, 1.0, numcut));
  return CutpointGrid(std::move(cuts));
}

/// x ~ U[-1,1]^d, y = 2 x0 - x1 x2 + N(0, noise^2).
inline Dataset toy_data(std::size_t n, std::size_t d, std::uint64_t seed, double noise = 0.1) {
  Rng rng(seed);
  Dataset data;
  data.x = RowMatrix(n, d);
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) data.x(i, j) = rng.uniform(-1.0, 1.0);
    const double x2 = d > 2 ? data.x(i, 2) : 1.0;
    const double x1 = d > 1 ? data.x(i, 1) : 1.0;
    data.y[i] = 2.0 * data.x(i, 0) - x1 * x2 + noise * rng.normal();
  }
  for (std::size_t j = 0; j < d; ++j) data.names.push_back("x" + std::to_string(j + 1));
  return data;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      path_ = base / ("pbart_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++) + "_" +
                      std::to_string(i));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace pbart::testing
