#include "pbart/dataset.hpp"

#include <algorithm>

#include "pbart/error.hpp"

namespace pbart {

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw Error("row slice out of range");
  Dataset out;
  out.names = names;
  out.response_name = response_name;
  out.x = RowMatrix(end - begin, cols());
  std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(begin * cols()),
            x.data.begin() + static_cast<std::ptrdiff_t>(end * cols()), out.x.data.begin());
  out.y.assign(y.begin() + static_cast<std::ptrdiff_t>(begin), y.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

DataSummary DataSummary::of(const Dataset& data, std::size_t begin, std::size_t end) {
  DataSummary s;
  const std::size_t d = data.cols();
  s.x_min.assign(d, 0.0);
  s.x_max.assign(d, 0.0);
  for (std::size_t i = begin; i < end; ++i) {
    const double y = data.y[i];
    ++s.n;
    const double delta = y - s.y_mean;
    s.y_mean += delta / static_cast<double>(s.n);
    s.y_m2 += delta * (y - s.y_mean);
    auto row = data.x.row(i);
    if (s.n == 1) {
      s.y_min = s.y_max = y;
      std::copy(row.begin(), row.end(), s.x_min.begin());
      std::copy(row.begin(), row.end(), s.x_max.begin());
    } else {
      s.y_min = std::min(s.y_min, y);
      s.y_max = std::max(s.y_max, y);
      for (std::size_t v = 0; v < d; ++v) {
        s.x_min[v] = std::min(s.x_min[v], row[v]);
        s.x_max[v] = std::max(s.x_max[v], row[v]);
      }
    }
  }
  return s;
}

DataSummary DataSummary::combine(const DataSummary& a, const DataSummary& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  if (a.x_min.size() != b.x_min.size()) throw Error("summaries have different dimensions");
  DataSummary s;
  s.n = a.n + b.n;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double delta = b.y_mean - a.y_mean;
  s.y_mean = a.y_mean + delta * nb / static_cast<double>(s.n);
  s.y_m2 = a.y_m2 + b.y_m2 + delta * delta * na * nb / static_cast<double>(s.n);
  s.y_min = std::min(a.y_min, b.y_min);
  s.y_max = std::max(a.y_max, b.y_max);
  s.x_min.resize(a.x_min.size());
  s.x_max.resize(a.x_max.size());
  for (std::size_t v = 0; v < a.x_min.size(); ++v) {
    s.x_min[v] = std::min(a.x_min[v], b.x_min[v]);
    s.x_max[v] = std::max(a.x_max[v], b.x_max[v]);
  }
  return s;
}

ResponseScaling ResponseScaling::from_range(double lo, double hi) {
  ResponseScaling s;
  s.identity = false;
  s.lo = lo;
  s.hi = hi > lo ? hi : lo + 1.0;
  return s;
}

}  // namespace pbart
