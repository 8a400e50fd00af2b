#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pbart/dataset.hpp"
#include "pbart/sampler/backend.hpp"

namespace pbart {

/// Holds a contiguous group of rows split into fixed reduction blocks, a
/// replica of the forest and the per-row fit/residual vectors. Every sum is
/// accumulated row by row inside a block and then combined across blocks by
/// pairwise_reduce, so the same blocks give the same bits no matter which
/// process owns them.
///
/// Used directly as the serial backend, and by each worker.
class ShardEngine final : public StatsBackend {
 public:
  /// `block_sizes` must sum to data.rows(); every block must be non-empty.
  ShardEngine(Dataset data, std::vector<std::size_t> block_sizes);

  /// Splits the rows into `blocks` near-equal blocks.
  static ShardEngine with_blocks(Dataset data, std::size_t blocks);

  DataSummary summarize() override;
  void setup(const ModelSetup& setup) override;
  MoveStats move_stats(const Proposal& proposal) override;
  void accept_birth(std::uint32_t tree, NodeId node, std::uint32_t var, std::uint32_t cut, double mu_left,
                    double mu_right) override;
  void accept_death(std::uint32_t tree, NodeId node, double mu) override;
  void reject(std::uint32_t tree) override;
  std::vector<SuffStats> leaf_stats(std::uint32_t tree) override;
  void set_leaf_values(std::uint32_t tree, std::span<const double> mus) override;
  double rss() override;

  const Forest& forest() const { return forest_; }
  const CutpointGrid& grid() const { return grid_; }
  const Dataset& data() const { return data_; }
  std::span<const double> fit() const { return fit_; }
  std::span<const double> residual() const { return residual_; }
  std::span<const double> model_response() const { return y_; }
  std::size_t rows() const { return data_.rows(); }
  const std::vector<std::size_t>& block_sizes() const { return block_sizes_; }

 private:
  template <class Acc, class RowFn>
  std::vector<Acc> per_block(const Acc& zero, RowFn&& fn) const;

  Dataset data_;
  std::vector<std::size_t> block_sizes_;
  std::vector<std::size_t> block_starts_;
  CutpointGrid grid_;
  Forest forest_;
  std::vector<double> y_;  // model-scale response
  std::vector<double> fit_;
  std::vector<double> residual_;

  // Row routing from the last move_stats / leaf_stats pass, reused when the
  // matching accept / set_leaf_values arrives.
  std::vector<std::uint8_t> side_;
  std::vector<std::uint32_t> slot_;
  Proposal pending_;
  bool has_pending_ = false;
  std::uint32_t slot_tree_ = 0;
  std::vector<double> slot_mus_;
};

}  // namespace pbart
