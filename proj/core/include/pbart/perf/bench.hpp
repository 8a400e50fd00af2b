#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pbart/perf/scaling.hpp"
#include "pbart/sampler/chain.hpp"

namespace pbart {

struct BenchSettings {
  std::vector<std::size_t> n{2000};
  std::vector<std::size_t> m{50};
  /// Worker counts; 0 means the serial sampler (p+1 = 1).
  std::vector<std::size_t> workers{0, 1, 2};
  std::size_t d = 10;
  std::size_t q = 30;
  double sigma_noise = 0.15;
  std::uint32_t iterations = 100;
  std::uint32_t burn = 50;
  std::uint64_t seed = 1;
  SamplerSettings sampler;
};

struct BenchResult {
  std::vector<TimingRecord> records;
  std::vector<std::string> failures;  // one line per failed cell
};

/// Runs every (n, m, workers) cell on a Friedman dataset and times the chain
/// (data generation excluded, burn-in included). A failing cell is recorded
/// and the rest still run.
BenchResult bench_run(const BenchSettings& settings);

/// Time, speedup and efficiency per record. Speedup/efficiency are against
/// the serial record of the same (n, m) when present; the relative columns
/// are against the smallest worker count of the same (n, m).
/// Columns: n,m,p_plus_1,iterations,seconds,b_bar,speedup,efficiency,
/// rel_speedup,rel_efficiency.
void write_bench_report(const std::string& path, const std::vector<TimingRecord>& records);

}  // namespace pbart
