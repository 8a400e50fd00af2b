#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pbart {

struct SpeedupEfficiency {
  double speedup = 0.0;
  double efficiency = 0.0;
};

/// S = t_seq / t_par, E = S / (p+1). The master counts as a core.
SpeedupEfficiency speedup_efficiency(double t_seq, double t_par, std::size_t p_plus_1);

/// One timed run. Serial runs have p_plus_1 = 1.
struct TimingRecord {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t p_plus_1 = 1;
  std::size_t iterations = 0;
  double seconds = 0.0;
  double b_bar = 1.0;  // mean terminal nodes per tree over saved draws

  std::size_t workers() const { return p_plus_1 > 1 ? p_plus_1 - 1 : 0; }
  friend bool operator==(const TimingRecord&, const TimingRecord&) = default;
};

/// Columns: n,m,p_plus_1,iterations,seconds,b_bar.
void write_timing_records(const std::string& path, const std::vector<TimingRecord>& records);
std::vector<TimingRecord> read_timing_records(const std::string& path);

}  // namespace pbart
