#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pbart/dataset.hpp"
#include "pbart/sampler/posterior_sample.hpp"

namespace pbart {

/// f(x) for one point.
using Predictor = std::function<double(std::span<const double>)>;
/// f over every row of a matrix, written to `out` (out.size() == x.rows).
using BatchPredictor = std::function<void(const RowMatrix& x, std::span<double> out)>;

BatchPredictor batch_of(Predictor f);

/// Posterior sample with every tree compiled for fast routing.
class CompiledPosterior {
 public:
  explicit CompiledPosterior(const PosteriorSample& sample);

  std::size_t snapshots() const { return trees_.size(); }
  std::size_t dimension() const { return d_; }
  /// Sum of the snapshot's trees at x, in response units.
  double snapshot_value(std::size_t s, const double* x) const;
  /// Mean over snapshots of snapshot_value, accumulated in snapshot order.
  double mean_value(const double* x) const;

 private:
  std::size_t d_ = 0;
  ResponseScaling scaling_;
  std::vector<std::vector<FlatTree>> trees_;
};

/// Posterior mean prediction for every row of `x`. Rows are split across
/// `threads` threads (0 = hardware concurrency); the result does not depend
/// on the split.
std::vector<double> predict_mean(const PosteriorSample& sample, const RowMatrix& x, std::size_t threads = 1);
std::vector<double> predict_mean(const CompiledPosterior& posterior, const RowMatrix& x, std::size_t threads = 1);

/// One snapshot's predictions in response units.
std::vector<double> predict_snapshot(const PosteriorSample& sample, std::size_t snapshot, const RowMatrix& x);

/// The posterior mean as a batch predictor (shares one compiled copy).
BatchPredictor make_posterior_predictor(const PosteriorSample& sample, std::size_t threads = 1);

}  // namespace pbart
