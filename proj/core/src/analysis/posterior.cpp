#include "pbart/analysis/posterior.hpp"

#include <algorithm>
#include <string>
#include <thread>

#include "pbart/error.hpp"

namespace pbart {

BatchPredictor batch_of(Predictor f) {
  return [f = std::move(f)](const RowMatrix& x, std::span<double> out) {
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = f(x.row(i));
  };
}

CompiledPosterior::CompiledPosterior(const PosteriorSample& sample) : d_(sample.d), scaling_(sample.scaling) {
  if (sample.snapshots.empty()) throw Error("posterior sample has no snapshots");
  trees_.reserve(sample.snapshots.size());
  for (const auto& snap : sample.snapshots) {
    if (snap.trees.size() != sample.m) throw Error("snapshot does not hold m trees");
    auto& flat = trees_.emplace_back();
    flat.reserve(snap.trees.size());
    for (const auto& t : snap.trees) flat.emplace_back(t, sample.grid);
  }
}

double CompiledPosterior::snapshot_value(std::size_t s, const double* x) const {
  double sum = 0.0;
  for (const auto& t : trees_[s]) sum += t.evaluate(x);
  return scaling_.to_response(sum);
}

double CompiledPosterior::mean_value(const double* x) const {
  double acc = 0.0;
  for (std::size_t s = 0; s < trees_.size(); ++s) acc += snapshot_value(s, x);
  return acc / static_cast<double>(trees_.size());
}

namespace {

template <class Fn>
void parallel_rows(std::size_t rows, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(rows, 1));
  if (threads <= 1) {
    fn(0, rows);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (rows + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

void check_width(std::size_t d, const RowMatrix& x) {
  if (x.cols != d) {
    throw Error("input has " + std::to_string(x.cols) + " columns, the model was fit on " + std::to_string(d));
  }
}

}  // namespace

std::vector<double> predict_mean(const CompiledPosterior& posterior, const RowMatrix& x, std::size_t threads) {
  check_width(posterior.dimension(), x);
  std::vector<double> out(x.rows);
  parallel_rows(x.rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = posterior.mean_value(x.row(i).data());
  });
  return out;
}

std::vector<double> predict_mean(const PosteriorSample& sample, const RowMatrix& x, std::size_t threads) {
  return predict_mean(CompiledPosterior(sample), x, threads);
}

std::vector<double> predict_snapshot(const PosteriorSample& sample, std::size_t snapshot, const RowMatrix& x) {
  if (snapshot >= sample.snapshots.size()) throw Error("snapshot index out of range");
  check_width(sample.d, x);
  std::vector<FlatTree> trees;
  for (const auto& t : sample.snapshots[snapshot].trees) trees.emplace_back(t, sample.grid);
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.evaluate(x.row(i).data());
    out[i] = sample.scaling.to_response(sum);
  }
  return out;
}

BatchPredictor make_posterior_predictor(const PosteriorSample& sample, std::size_t threads) {
  auto compiled = std::make_shared<const CompiledPosterior>(sample);
  return [compiled, threads](const RowMatrix& x, std::span<double> out) {
    const auto values = predict_mean(*compiled, x, threads);
    std::copy(values.begin(), values.end(), out.begin());
  };
}

}  // namespace pbart
