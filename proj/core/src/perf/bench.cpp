#include "pbart/perf/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "pbart/cluster/local_cluster.hpp"
#include "pbart/datagen/friedman.hpp"
#include "pbart/datagen/table.hpp"
#include "pbart/error.hpp"

namespace pbart {

namespace {

double mean_leaves(const PosteriorSample& sample) {
  double total = 0.0;
  std::size_t trees = 0;
  for (const auto& s : sample.snapshots) {
    for (const auto& t : s.trees) {
      total += static_cast<double>(t.leaf_count());
      ++trees;
    }
  }
  return trees ? total / static_cast<double>(trees) : 1.0;
}

}  // namespace

BenchResult bench_run(const BenchSettings& settings) {
  if (settings.iterations <= settings.burn) throw ConfigError("iterations", "must exceed burn");
  BenchResult result;
  Rng spec_rng(derive_seed(settings.seed, 0));
  const FriedmanSpec spec = gen_spec(settings.d, settings.q, spec_rng);

  for (std::size_t n : settings.n) {
    Rng data_rng(derive_seed(settings.seed, 1 + n));
    const GeneratedData gen = gen_dataset(spec, n, settings.sigma_noise, data_rng);
    for (std::size_t m : settings.m) {
      for (std::size_t p : settings.workers) {
        SamplerSettings sampler = settings.sampler;
        sampler.prior.m = static_cast<std::uint32_t>(m);
        const RunPlan plan{settings.iterations, settings.burn, 1, settings.seed};
        try {
          const auto start = std::chrono::steady_clock::now();
          ChainResult run;
          if (p == 0) {
            run = run_serial(gen.data, sampler, plan, 1);
          } else {
            LocalClusterOptions options;
            options.workers = p;
            run = run_local_cluster(gen.data, sampler, plan, options);
          }
          const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          result.records.push_back(TimingRecord{n, m, p + 1, settings.iterations, seconds, mean_leaves(run.posterior)});
        } catch (const std::exception& e) {
          result.failures.push_back("n=" + std::to_string(n) + " m=" + std::to_string(m) + " workers=" +
                                    std::to_string(p) + ": " + e.what());
        }
      }
    }
  }
  return result;
}

void write_bench_report(const std::string& path, const std::vector<TimingRecord>& records) {
  TableWriter w(path, {"n", "m", "p_plus_1", "iterations", "seconds", "b_bar", "speedup", "efficiency",
                       "rel_speedup", "rel_efficiency"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : records) {
    const TimingRecord* serial = nullptr;
    const TimingRecord* ref = nullptr;
    for (const auto& o : records) {
      if (o.n != r.n || o.m != r.m) continue;
      if (o.p_plus_1 == 1) serial = &o;
      if (o.p_plus_1 > 1 && (ref == nullptr || o.p_plus_1 < ref->p_plus_1)) ref = &o;
    }
    double s = nan, e = nan, rs = nan, re = nan;
    if (serial) {
      const auto se = speedup_efficiency(serial->seconds, r.seconds, r.p_plus_1);
      s = se.speedup;
      e = se.efficiency;
    }
    if (ref && r.p_plus_1 > 1) {
      rs = ref->seconds / r.seconds;
      re = rs * static_cast<double>(ref->p_plus_1) / static_cast<double>(r.p_plus_1);
    }
    w.write(std::vector<double>{static_cast<double>(r.n), static_cast<double>(r.m), static_cast<double>(r.p_plus_1),
                                static_cast<double>(r.iterations), r.seconds, r.b_bar, s, e, rs, re});
  }
  w.close();
}

}  // namespace pbart
