#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pbart/perf/scaling.hpp"
#include "pbart/rng.hpp"

namespace pbart {

enum class RuntimeTarget { Serial, Parallel };

/// A product of powers of 0/1 of the regressors. Serial terms use n,
/// parallel terms use nt = n/p (rows per worker); p counts workers.
struct RuntimeTerm {
  std::string name;
  bool m = false, n = false, p = false, b = false;

  double value(double n_value, double m_value, double p_value, double b_value) const;
};

/// {m, n, m*n, m*b, n*m*b}
const std::vector<RuntimeTerm>& serial_terms();
/// The fourteen nt/m/p/b products with at most one power of each.
const std::vector<RuntimeTerm>& parallel_terms();

enum class Weighting {
  Relative,  // weights 1/T: residuals measured relative to the time
  Absolute,  // ordinary least squares
};

struct EliminationOptions {
  Weighting weighting = Weighting::Relative;
  /// A removal is refused when its SSE increase is significant at this level
  /// (partial F-test with 1 and n-k degrees of freedom).
  double alpha = 0.001;
};

struct RuntimeModel {
  RuntimeTarget target = RuntimeTarget::Parallel;
  std::vector<RuntimeTerm> terms;
  std::vector<double> coefficients;
  double r_squared = 0.0;
  double rmse = 0.0;

  /// Predicted seconds. For the parallel target p_plus_1 must be at least 2.
  double predict(double n, double m, std::size_t p_plus_1, double b) const;
  std::vector<std::string> term_names() const;
};

/// Backward elimination from the full term set. At each step the term
/// whose removal gives the lowest RMSE is the candidate; it is removed
/// unless the resulting SSE increase is significant. Records with
/// p_plus_1 == 1 feed the serial target and the rest the parallel one.
/// Throws Error naming the collinear terms when the full design is rank
/// deficient, and when there are fewer than k+2 records.
RuntimeModel fit_runtime_model(const std::vector<TimingRecord>& records, RuntimeTarget target,
                               const EliminationOptions& options = {});

/// Fits only the given terms (no elimination).
RuntimeModel fit_terms(const std::vector<TimingRecord>& records, RuntimeTarget target,
                       const std::vector<RuntimeTerm>& terms, Weighting weighting = Weighting::Relative);

/// Unit-coefficient models from the approximate orders:
/// serial m*n + m*b, parallel m*nt + m*p + m*b + m*p*b.
RuntimeModel unit_serial_model();
RuntimeModel unit_parallel_model();

/// Terminal-node count of one tree drawn from the split prior
/// alpha * (1 + depth)^(-beta).
std::size_t draw_terminal_count(double alpha, double beta, Rng& rng);
std::vector<double> draw_terminal_counts(std::size_t draws, double alpha, double beta, Rng& rng);

/// Mean over b_samples of T_seq(n, m, b) / ((p+1) T_par(n/p, m, b, p)).
double expected_efficiency(double n, double m, std::size_t p_plus_1, const RuntimeModel& serial,
                           const RuntimeModel& parallel, const std::vector<double>& b_samples);

struct IsoefficiencyOptions {
  double n_lo = 1e3;
  double n_hi = 1e9;
  std::size_t grid_points = 200;  // log-spaced monotonicity check
};

/// Smallest integer n in [n_lo, n_hi] whose expected efficiency reaches e.
/// Throws Error when efficiency is not monotone in n over the bounds, and
/// when e is unattainable (reporting the maximum reached).
double isoefficiency_solve(double e, std::size_t p_plus_1, double m, const RuntimeModel& serial,
                           const RuntimeModel& parallel, const std::vector<double>& b_samples,
                           const IsoefficiencyOptions& options = {});

/// Columns: term,coefficient then r_squared and rmse rows.
void write_model_report(const std::string& path, const RuntimeModel& model);

}  // namespace pbart
