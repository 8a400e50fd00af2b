#include "pbart/perf/runtime_model.hpp"

#include <Eigen/QR>
#include <boost/math/distributions/fisher_f.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "pbart/error.hpp"
#include "pbart/sampler/prior.hpp"
#include "pbart/text.hpp"

namespace pbart {

double RuntimeTerm::value(double n_value, double m_value, double p_value, double b_value) const {
  double v = 1.0;
  if (m) v *= m_value;
  if (n) v *= n_value;
  if (p) v *= p_value;
  if (b) v *= b_value;
  return v;
}

const std::vector<RuntimeTerm>& serial_terms() {
  static const std::vector<RuntimeTerm> terms{
      {"m", true, false, false, false},
      {"n", false, true, false, false},
      {"m*n", true, true, false, false},
      {"m*b", true, false, false, true},
      {"n*m*b", true, true, false, true},
  };
  return terms;
}

const std::vector<RuntimeTerm>& parallel_terms() {
  static const std::vector<RuntimeTerm> terms{
      {"m", true, false, false, false},       {"nt", false, true, false, false},
      {"p", false, false, true, false},       {"b", false, false, false, true},
      {"m*nt", true, true, false, false},     {"m*p", true, false, true, false},
      {"m*b", true, false, false, true},      {"nt*p", false, true, true, false},
      {"nt*b", false, true, false, true},     {"p*b", false, false, true, true},
      {"m*nt*b", true, true, false, true},    {"m*p*b", true, false, true, true},
      {"m*nt*p", true, true, true, false},    {"m*nt*p*b", true, true, true, true},
  };
  return terms;
}

namespace {

double term_value(const RuntimeTerm& t, RuntimeTarget target, double n, double m, std::size_t p_plus_1, double b) {
  if (target == RuntimeTarget::Serial) return t.value(n, m, 0.0, b);
  const double p = static_cast<double>(p_plus_1 - 1);
  return t.value(n / p, m, p, b);
}

struct Design {
  Eigen::MatrixXd x;  // weighted, all candidate terms
  Eigen::VectorXd y;  // weighted
  Eigen::VectorXd raw_y;
  Eigen::VectorXd weights;
};

Design build_design(const std::vector<TimingRecord>& records, RuntimeTarget target,
                    const std::vector<RuntimeTerm>& terms, Weighting weighting) {
  std::vector<const TimingRecord*> rows;
  for (const auto& r : records) {
    const bool serial = r.p_plus_1 == 1;
    if (serial == (target == RuntimeTarget::Serial)) rows.push_back(&r);
  }
  Design d;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(terms.size()));
  d.y.resize(d.x.rows());
  d.raw_y.resize(d.x.rows());
  d.weights.resize(d.x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = *rows[i];
    if (!(r.seconds > 0.0)) throw Error("timing records must have positive seconds");
    const double w = weighting == Weighting::Relative ? 1.0 / r.seconds : 1.0;
    const auto ii = static_cast<Eigen::Index>(i);
    d.weights(ii) = w;
    d.raw_y(ii) = r.seconds;
    d.y(ii) = w * r.seconds;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      d.x(ii, static_cast<Eigen::Index>(j)) =
          w * term_value(terms[j], target, static_cast<double>(r.n), static_cast<double>(r.m), r.p_plus_1, r.b_bar);
    }
  }
  return d;
}

struct Solve {
  Eigen::VectorXd coef;
  double sse = 0.0;
  Eigen::Index rank = 0;
  Eigen::VectorXi pivots;
};

// Least squares on the chosen columns, each scaled to unit norm first for
// conditioning.
Solve solve(const Design& d, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd a(d.x.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXd scale(a.cols());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    a.col(jj) = d.x.col(static_cast<Eigen::Index>(cols[j]));
    scale(jj) = a.col(jj).norm();
    if (scale(jj) == 0.0) scale(jj) = 1.0;
    a.col(jj) /= scale(jj);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  Solve s;
  s.rank = qr.rank();
  s.pivots = qr.colsPermutation().indices();
  s.coef = qr.solve(d.y).cwiseQuotient(scale);
  const Eigen::VectorXd r = d.y - a * qr.solve(d.y);
  s.sse = r.squaredNorm();
  return s;
}

RuntimeModel finish(const Design& d, RuntimeTarget target, const std::vector<RuntimeTerm>& all,
                    const std::vector<std::size_t>& cols) {
  const Solve s = solve(d, cols);
  RuntimeModel model;
  model.target = target;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    model.terms.push_back(all[cols[j]]);
    model.coefficients.push_back(s.coef(static_cast<Eigen::Index>(j)));
  }
  // Fit quality on the original time scale.
  double sse = 0.0, sst = 0.0, mean = d.raw_y.mean();
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    double pred = 0.0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      pred += model.coefficients[j] * d.x(i, static_cast<Eigen::Index>(cols[j])) / d.weights(i);
    }
    const double res = d.raw_y(i) - pred;
    sse += res * res;
    sst += (d.raw_y(i) - mean) * (d.raw_y(i) - mean);
  }
  model.r_squared = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 1.0;
  model.rmse = std::sqrt(sse / static_cast<double>(d.x.rows()));
  return model;
}

void check_rows(const Design& d, std::size_t k) {
  if (static_cast<std::size_t>(d.x.rows()) < k + 2) {
    throw Error("runtime model needs at least " + std::to_string(k + 2) + " records, got " +
                std::to_string(d.x.rows()));
  }
}

void check_rank(const Design& d, const std::vector<RuntimeTerm>& terms, const std::vector<std::size_t>& cols) {
  const Solve s = solve(d, cols);
  if (s.rank == static_cast<Eigen::Index>(cols.size())) return;
  std::string names;
  for (Eigen::Index j = s.rank; j < s.pivots.size(); ++j) {
    if (!names.empty()) names += ", ";
    names += terms[cols[static_cast<std::size_t>(s.pivots(j))]].name;
  }
  throw Error("rank-deficient design: collinear terms " + names);
}

}  // namespace

double RuntimeModel::predict(double n, double m, std::size_t p_plus_1, double b) const {
  if (target == RuntimeTarget::Parallel && p_plus_1 < 2) throw Error("parallel model needs at least one worker");
  double t = 0.0;
  for (std::size_t j = 0; j < terms.size(); ++j) t += coefficients[j] * term_value(terms[j], target, n, m, p_plus_1, b);
  return t;
}

std::vector<std::string> RuntimeModel::term_names() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.name);
  return out;
}

RuntimeModel fit_terms(const std::vector<TimingRecord>& records, RuntimeTarget target,
                       const std::vector<RuntimeTerm>& terms, Weighting weighting) {
  const Design d = build_design(records, target, terms, weighting);
  check_rows(d, terms.size());
  std::vector<std::size_t> cols(terms.size());
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
  check_rank(d, terms, cols);
  return finish(d, target, terms, cols);
}

RuntimeModel fit_runtime_model(const std::vector<TimingRecord>& records, RuntimeTarget target,
                               const EliminationOptions& options) {
  const auto& terms = target == RuntimeTarget::Serial ? serial_terms() : parallel_terms();
  const Design d = build_design(records, target, terms, options.weighting);
  check_rows(d, terms.size());
  std::vector<std::size_t> cols(terms.size());
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
  check_rank(d, terms, cols);

  // SSE this small is round-off: treat it as an exact fit.
  const double exact = 1e-20 * d.y.squaredNorm();
  while (cols.size() > 1) {
    const double current = solve(d, cols).sse;
    double best_sse = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      auto reduced = cols;
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(j));
      const double sse = solve(d, reduced).sse;
      if (sse < best_sse) {
        best_sse = sse;
        best = j;
      }
    }
    bool remove = false;
    if (best_sse <= exact) {
      remove = true;
    } else if (current > exact) {
      const double dof = static_cast<double>(d.x.rows()) - static_cast<double>(cols.size());
      const double f = (best_sse - current) / (current / dof);
      const boost::math::fisher_f_distribution<double> dist(1.0, dof);
      remove = f <= 0.0 || boost::math::cdf(boost::math::complement(dist, f)) > options.alpha;
    }
    if (!remove) break;
    cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return finish(d, target, terms, cols);
}

namespace {

RuntimeModel unit_model(RuntimeTarget target, const std::vector<std::string>& names) {
  const auto& all = target == RuntimeTarget::Serial ? serial_terms() : parallel_terms();
  RuntimeModel model;
  model.target = target;
  for (const auto& name : names) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const RuntimeTerm& t) { return t.name == name; });
    model.terms.push_back(*it);
    model.coefficients.push_back(1.0);
  }
  model.r_squared = 1.0;
  return model;
}

}  // namespace

RuntimeModel unit_serial_model() { return unit_model(RuntimeTarget::Serial, {"m*n", "m*b"}); }

RuntimeModel unit_parallel_model() { return unit_model(RuntimeTarget::Parallel, {"m*nt", "m*p", "m*b", "m*p*b"}); }

std::size_t draw_terminal_count(double alpha, double beta, Rng& rng) {
  // Depth-first growth with an explicit stack of pending node depths.
  std::vector<int> pending{0};
  std::size_t leaves = 0;
  while (!pending.empty()) {
    const int depth = pending.back();
    pending.pop_back();
    if (rng.uniform() < split_prior_prob(depth, alpha, beta)) {
      pending.push_back(depth + 1);
      pending.push_back(depth + 1);
    } else {
      ++leaves;
    }
  }
  return leaves;
}

std::vector<double> draw_terminal_counts(std::size_t draws, double alpha, double beta, Rng& rng) {
  std::vector<double> out(draws);
  for (auto& b : out) b = static_cast<double>(draw_terminal_count(alpha, beta, rng));
  return out;
}

double expected_efficiency(double n, double m, std::size_t p_plus_1, const RuntimeModel& serial,
                           const RuntimeModel& parallel, const std::vector<double>& b_samples) {
  if (b_samples.empty()) throw Error("expected efficiency needs at least one b draw");
  if (p_plus_1 < 2) throw Error("expected efficiency needs at least one worker");
  double acc = 0.0;
  for (double b : b_samples) acc += serial.predict(n, m, 1, b) / parallel.predict(n, m, p_plus_1, b);
  return acc / static_cast<double>(b_samples.size()) / static_cast<double>(p_plus_1);
}

double isoefficiency_solve(double e, std::size_t p_plus_1, double m, const RuntimeModel& serial,
                           const RuntimeModel& parallel, const std::vector<double>& b_samples,
                           const IsoefficiencyOptions& options) {
  if (!(e > 0.0 && e < 1.0)) throw ConfigError("efficiency", "must lie in (0, 1)");
  if (!(options.n_lo >= 1.0 && options.n_hi > options.n_lo)) throw ConfigError("n_range", "need 1 <= lo < hi");
  auto eff = [&](double n) { return expected_efficiency(n, m, p_plus_1, serial, parallel, b_samples); };

  const std::size_t g = std::max<std::size_t>(options.grid_points, 2);
  const double log_lo = std::log(options.n_lo), log_hi = std::log(options.n_hi);
  std::vector<double> ns(g), es(g);
  for (std::size_t i = 0; i < g; ++i) {
    ns[i] = i + 1 == g ? options.n_hi : std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / (g - 1));
    es[i] = eff(ns[i]);
    if (i > 0 && es[i] < es[i - 1] * (1.0 - 1e-12)) {
      throw Error("expected efficiency is not monotone in n between " + text::format_double(ns[i - 1]) + " and " +
                  text::format_double(ns[i]));
    }
  }
  if (es.front() >= e) return std::ceil(options.n_lo);
  if (es.back() < e) {
    throw Error("efficiency " + text::format_double(e) + " unattainable: maximum " + text::format_double(es.back()) +
                " at n=" + text::format_double(options.n_hi));
  }
  const std::size_t hit = static_cast<std::size_t>(std::find_if(es.begin(), es.end(), [&](double v) { return v >= e; }) -
                                                   es.begin());
  // Integer bisection: eff(lo) < e <= eff(hi).
  double lo = std::floor(ns[hit - 1]), hi = std::ceil(ns[hit]);
  if (eff(lo) >= e) return lo;
  while (hi - lo > 1.0) {
    const double mid = std::floor(0.5 * (lo + hi));
    (eff(mid) >= e ? hi : lo) = mid;
  }
  return hi;
}

void write_model_report(const std::string& path, const RuntimeModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "term,coefficient\n";
  for (std::size_t j = 0; j < model.terms.size(); ++j) {
    out << model.terms[j].name << ',' << text::format_double(model.coefficients[j]) << '\n';
  }
  out << "r_squared," << text::format_double(model.r_squared) << '\n';
  out << "rmse," << text::format_double(model.rmse) << '\n';
  if (!out) throw Error("error writing " + path);
}

}  // namespace pbart
