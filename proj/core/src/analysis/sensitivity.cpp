#include "pbart/analysis/sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "pbart/cluster/sharding.hpp"
#include "pbart/datagen/table.hpp"
#include "pbart/error.hpp"

namespace pbart {

namespace {

RowMatrix uniform_matrix(std::size_t rows, std::size_t d, Rng& rng, Domain domain) {
  RowMatrix x(rows, d);
  for (auto& v : x.data) v = rng.uniform(domain.lo, domain.hi);
  return x;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Raw sums from one (A, B) pair. C_k is B with column k taken from A.
struct PartSums {
  double rows = 0;
  double sum_a = 0, sum_b = 0, sum_aa = 0;
  std::vector<double> sum_ac;      // f(A) f(C_k)
  std::vector<double> sum_jansen;  // (f(B) - f(C_k))^2

  explicit PartSums(std::size_t k = 0) : sum_ac(k, 0.0), sum_jansen(k, 0.0) {}

  void add(const PartSums& o) {
    rows += o.rows;
    sum_a += o.sum_a;
    sum_b += o.sum_b;
    sum_aa += o.sum_aa;
    for (std::size_t k = 0; k < sum_ac.size(); ++k) {
      sum_ac[k] += o.sum_ac[k];
      sum_jansen[k] += o.sum_jansen[k];
    }
  }
};

PartSums run_part(const BatchPredictor& f, std::size_t d, std::size_t rows, std::uint64_t seed,
                  const std::vector<std::size_t>& vars, Domain domain) {
  Rng rng(seed);
  const RowMatrix a = uniform_matrix(rows, d, rng, domain);
  const RowMatrix b = uniform_matrix(rows, d, rng, domain);
  std::vector<double> fa(rows), fb(rows), fc(rows);
  f(a, fa);
  f(b, fb);

  PartSums s(vars.size());
  s.rows = static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    s.sum_a += fa[i];
    s.sum_b += fb[i];
    s.sum_aa += fa[i] * fa[i];
  }
  RowMatrix c = b;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const std::size_t k = vars[j];
    for (std::size_t i = 0; i < rows; ++i) c(i, k) = a(i, k);
    f(c, fc);
    for (std::size_t i = 0; i < rows; ++i) {
      s.sum_ac[j] += fa[i] * fc[i];
      const double diff = fb[i] - fc[i];
      s.sum_jansen[j] += diff * diff;
    }
    for (std::size_t i = 0; i < rows; ++i) c(i, k) = b(i, k);
  }
  return s;
}

struct Estimates {
  double f0, variance;
  std::vector<double> v_k, first, total;
};

Estimates estimate(const PartSums& s) {
  Estimates e;
  e.f0 = (s.sum_a + s.sum_b) / (2.0 * s.rows);
  e.variance = s.sum_aa / s.rows - e.f0 * e.f0;
  for (std::size_t j = 0; j < s.sum_ac.size(); ++j) {
    const double vk = s.sum_ac[j] / s.rows - e.f0 * e.f0;
    e.v_k.push_back(vk);
    e.first.push_back(vk / e.variance);
    e.total.push_back(s.sum_jansen[j] / (2.0 * s.rows) / e.variance);
  }
  return e;
}

double batch_se(const std::vector<double>& values) {
  const std::size_t p = values.size();
  if (p < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(p - 1) / static_cast<double>(p));
}

}  // namespace

std::vector<double> even_grid(std::size_t points, Domain domain) {
  if (points == 0) return {};
  if (points == 1) return {0.5 * (domain.lo + domain.hi)};
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = domain.lo + (domain.hi - domain.lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return g;
}

MainEffectCurve main_effect(const BatchPredictor& f, std::size_t d, std::size_t var, const std::vector<double>& grid,
                            std::size_t n_mc, Rng& rng, Domain domain) {
  if (n_mc < 1) throw ConfigError("n_mc", "must be at least 1");
  if (var >= d) throw ConfigError("var", "variable index out of range");
  const double n = static_cast<double>(n_mc);
  auto moments = [n](std::span<const double> v) {
    double s = 0.0, ss = 0.0;
    for (double x : v) s += x;
    const double m = s / n;
    for (double x : v) ss += (x - m) * (x - m);
    const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
    return std::pair{m, var / n};
  };

  MainEffectCurve curve;
  curve.var = var;
  curve.grid = grid;
  std::vector<double> out(n_mc);
  const RowMatrix base = uniform_matrix(n_mc, d, rng, domain);
  f(base, out);
  const auto [f0, f0_var] = moments(out);
  curve.f0 = f0;

  // The same draws of the other variables serve every grid value.
  RowMatrix x = base;
  for (double g : grid) {
    for (std::size_t i = 0; i < n_mc; ++i) x(i, var) = g;
    f(x, out);
    const auto [m, m_var] = moments(out);
    curve.effect.push_back(m - f0);
    curve.se.push_back(std::sqrt(m_var + f0_var));
  }
  return curve;
}

SobolResult sobol_indices(const BatchPredictor& f, std::size_t d, const SobolOptions& options,
                          std::vector<std::size_t> vars) {
  if (options.n_s < 2) throw ConfigError("n_s", "must be at least 2");
  if (options.parts < 1) throw ConfigError("parts", "must be at least 1");
  if (options.parts > options.n_s) throw ConfigError("parts", "more parts than rows");
  if (vars.empty()) {
    for (std::size_t k = 0; k < d; ++k) vars.push_back(k);
  }
  for (auto k : vars)
    if (k >= d) throw ConfigError("var", "variable index out of range");

  const auto sizes = split_sizes(options.n_s, options.parts);
  std::vector<PartSums> parts(options.parts);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < options.parts;) {
      try {
        parts[i] = run_part(f, d, sizes[i], derive_seed(options.seed, i), vars, options.domain);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, options.parts);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  PartSums total(vars.size());
  for (const auto& p : parts) total.add(p);
  const Estimates est = estimate(total);
  if (!(est.variance > 0.0)) throw Error("zero total variance");

  std::vector<Estimates> per_part;
  for (const auto& p : parts) per_part.push_back(estimate(p));

  SobolResult r;
  r.n_s = options.n_s;
  r.parts = options.parts;
  r.f0 = est.f0;
  r.variance = est.variance;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    std::vector<double> first, tot;
    for (const auto& e : per_part) {
      first.push_back(e.first[j]);
      tot.push_back(e.total[j]);
    }
    r.indices.push_back(SobolIndex{vars[j], est.v_k[j], est.first[j], batch_se(first), est.total[j], batch_se(tot)});
  }
  return r;
}

SobolIndex sobol_first_order(const BatchPredictor& f, std::size_t d, std::size_t var, const SobolOptions& options) {
  return sobol_indices(f, d, options, {var}).indices.front();
}

SobolIndex sobol_total(const BatchPredictor& f, std::size_t d, std::size_t var, const SobolOptions& options) {
  return sobol_indices(f, d, options, {var}).indices.front();
}

void write_sensitivity_report(const std::string& path, const SobolResult& result) {
  TableWriter w(path, {"variable", "S", "S_se", "ST", "ST_se", "V_k", "f0", "V", "n_s"});
  for (const auto& idx : result.indices) {
    w.write(std::vector<double>{static_cast<double>(idx.var + 1), idx.first, idx.first_se, idx.total, idx.total_se,
                                idx.v_k, result.f0, result.variance, static_cast<double>(result.n_s)});
  }
  w.close();
}

void write_main_effects(const std::string& path, const std::vector<MainEffectCurve>& curves) {
  TableWriter w(path, {"variable", "x", "effect", "se"});
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      w.write(std::vector<double>{static_cast<double>(c.var + 1), c.grid[i], c.effect[i], c.se[i]});
    }
  }
  w.close();
}

}  // namespace pbart
