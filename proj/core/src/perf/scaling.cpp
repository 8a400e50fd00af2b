#include "pbart/perf/scaling.hpp"

#include <cmath>

#include "pbart/datagen/table.hpp"
#include "pbart/error.hpp"

namespace pbart {

SpeedupEfficiency speedup_efficiency(double t_seq, double t_par, std::size_t p_plus_1) {
  if (!(t_seq > 0.0) || !(t_par > 0.0)) throw Error("times must be positive");
  if (p_plus_1 < 1) throw Error("core count must be at least 1");
  const double s = t_seq / t_par;
  return {s, s / static_cast<double>(p_plus_1)};
}

void write_timing_records(const std::string& path, const std::vector<TimingRecord>& records) {
  TableWriter w(path, {"n", "m", "p_plus_1", "iterations", "seconds", "b_bar"});
  for (const auto& r : records) {
    w.write(std::vector<double>{static_cast<double>(r.n), static_cast<double>(r.m), static_cast<double>(r.p_plus_1),
                                static_cast<double>(r.iterations), r.seconds, r.b_bar});
  }
  w.close();
}

std::vector<TimingRecord> read_timing_records(const std::string& path) {
  TableReader reader(path);
  const std::vector<std::string> expected{"n", "m", "p_plus_1", "iterations", "seconds", "b_bar"};
  if (reader.header() != expected) throw ParseError(path + ": expected columns n,m,p_plus_1,iterations,seconds,b_bar", 1);
  std::vector<TimingRecord> out;
  std::vector<double> row;
  auto count = [&](double v, const char* what) {
    if (v < 0 || v != std::floor(v)) throw ParseError(path + ": " + what + " must be a non-negative integer", reader.line());
    return static_cast<std::size_t>(v);
  };
  while (reader.next(row)) {
    TimingRecord r;
    r.n = count(row[0], "n");
    r.m = count(row[1], "m");
    r.p_plus_1 = count(row[2], "p_plus_1");
    r.iterations = count(row[3], "iterations");
    r.seconds = row[4];
    r.b_bar = row[5];
    out.push_back(r);
  }
  return out;
}

}  // namespace pbart
