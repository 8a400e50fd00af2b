#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pbart {

/// Dense row-major matrix of inputs.
struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  friend bool operator==(const RowMatrix&, const RowMatrix&) = default;
};

/// Inputs, response and column names.
struct Dataset {
  RowMatrix x;
  std::vector<double> y;
  std::vector<std::string> names;  // x column names
  std::string response_name = "y";

  std::size_t rows() const { return x.rows; }
  std::size_t cols() const { return x.cols; }

  /// Rows [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;
};

/// Mergeable summary of a set of rows: response moments/range and
/// per-variable ranges. Combining is deterministic for a fixed order.
struct DataSummary {
  std::uint64_t n = 0;
  double y_mean = 0.0;
  double y_m2 = 0.0;  // sum of squared deviations from y_mean
  double y_min = 0.0;
  double y_max = 0.0;
  std::vector<double> x_min;
  std::vector<double> x_max;

  static DataSummary of(const Dataset& data, std::size_t begin, std::size_t end);
  static DataSummary combine(const DataSummary& a, const DataSummary& b);
  double y_variance() const { return n > 1 ? y_m2 / static_cast<double>(n - 1) : 0.0; }

  friend bool operator==(const DataSummary&, const DataSummary&) = default;
};

/// Maps the response onto the model scale [-0.5, 0.5] and back.
struct ResponseScaling {
  bool identity = true;
  double lo = 0.0;
  double hi = 1.0;

  static ResponseScaling from_range(double lo, double hi);
  double to_model(double y) const { return identity ? y : (y - lo) / (hi - lo) - 0.5; }
  double to_response(double f) const { return identity ? f : (f + 0.5) * (hi - lo) + lo; }
  /// Converts a scale quantity (a standard deviation) back to response units.
  double width() const { return identity ? 1.0 : hi - lo; }

  friend bool operator==(const ResponseScaling&, const ResponseScaling&) = default;
};

/// Combines items by recursive halving: reduce[lo,hi) = reduce[lo,mid) + reduce[mid,hi).
/// Any contiguous group of leaves forming a subtree can be pre-reduced
/// elsewhere without changing the floating-point result.
template <class T, class Combine>
T pairwise_reduce(std::span<const T> items, Combine combine) {
  if (items.size() == 1) return items[0];
  const std::size_t mid = items.size() / 2;
  return combine(pairwise_reduce(items.subspan(0, mid), combine), pairwise_reduce(items.subspan(mid), combine));
}

}  // namespace pbart
