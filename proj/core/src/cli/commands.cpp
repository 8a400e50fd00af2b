#include "pbart/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pbart/analysis/posterior.hpp"
#include "pbart/analysis/sensitivity.hpp"
#include "pbart/cli/model_file.hpp"
#include "pbart/cluster/local_cluster.hpp"
#include "pbart/cluster/master.hpp"
#include "pbart/cluster/sharding.hpp"
#include "pbart/cluster/worker.hpp"
#include "pbart/datagen/friedman.hpp"
#include "pbart/datagen/table.hpp"
#include "pbart/error.hpp"
#include "pbart/perf/bench.hpp"
#include "pbart/perf/runtime_model.hpp"
#include "pbart/sampler/shard_engine.hpp"
#include "pbart/text.hpp"

namespace pbart {

std::string derived_path(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash + 1);
  return (has_ext ? path.substr(0, dot) : path) + suffix;
}

void write_chain_log(const std::string& path, const std::vector<IterationLog>& log) {
  TableWriter w(path, {"iteration", "sigma", "mean_leaves", "birth_proposed", "birth_accepted", "death_proposed",
                       "death_accepted"});
  for (const auto& e : log) {
    w.write(std::vector<double>{static_cast<double>(e.iteration), e.sigma, e.mean_leaves,
                                static_cast<double>(e.birth_proposed), static_cast<double>(e.birth_accepted),
                                static_cast<double>(e.death_proposed), static_cast<double>(e.death_accepted)});
  }
  w.close();
}

std::vector<IterationLog> read_chain_log(const std::string& path) {
  TableReader reader(path);
  if (reader.header().size() != 7) throw ParseError(path + ": expected 7 chain log columns", 1);
  std::vector<IterationLog> out;
  std::vector<double> row;
  while (reader.next(row)) {
    IterationLog e;
    e.iteration = static_cast<std::uint32_t>(row[0]);
    e.sigma = row[1];
    e.mean_leaves = row[2];
    e.birth_proposed = static_cast<std::uint32_t>(row[3]);
    e.birth_accepted = static_cast<std::uint32_t>(row[4]);
    e.death_proposed = static_cast<std::uint32_t>(row[5]);
    e.death_accepted = static_cast<std::uint32_t>(row[6]);
    out.push_back(e);
  }
  return out;
}

void cmd_generate(const RunConfig& c, std::ostream& log) {
  require_for(c, "generate");
  Rng spec_rng(derive_seed(c.seed, 0));
  const FriedmanSpec spec = gen_spec(c.d, c.kernels, spec_rng);

  auto emit = [&](std::size_t n, std::uint64_t stream, const std::string& data_path) {
    Rng rng(derive_seed(c.seed, stream));
    GeneratedData g = gen_dataset(spec, n, c.sigma_noise, rng);
    g.data.response_name = c.response;
    write_table(data_path, g.data);
    const std::string truth = derived_path(data_path, ".truth.csv");
    write_columns(truth, {"f"}, {g.f});
    log << "wrote " << n << " rows to " << data_path << " (noiseless f in " << truth << ")\n";
  };
  emit(c.n, 1, c.output);
  if (c.n_test > 0) emit(c.n_test, 2, derived_path(c.output, ".test.csv"));
}

namespace {

void write_fit_outputs(const RunConfig& c, const ChainResult& result, std::ostream& log) {
  save_model(c.output, result.posterior);
  const std::string chain = c.chain_log.empty() ? derived_path(c.output, ".chain.csv") : c.chain_log;
  write_chain_log(chain, result.log);
  log << "saved " << result.posterior.snapshots.size() << " draws of " << result.posterior.m << " trees to "
      << c.output << "; chain log " << chain << '\n';
}

std::size_t blocks_of(const RunConfig& c) { return c.reduction_blocks == 0 ? c.workers : c.reduction_blocks; }

}  // namespace

void cmd_fit(const RunConfig& c, std::ostream& log) {
  require_for(c, "fit");
  const SamplerSettings sampler = c.sampler();
  const RunPlan plan = c.plan();
  plan.validate();

  if (c.role == "serial") {
    const Dataset data = read_table(c.data, c.response);
    write_fit_outputs(c, run_serial(data, sampler, plan, blocks_of(c)), log);
  } else if (c.role == "inproc") {
    const Dataset data = read_table(c.data, c.response);
    LocalClusterOptions options;
    options.workers = c.workers;
    options.reduction_blocks = c.reduction_blocks;
    options.debug_checks = c.debug_checks;
    write_fit_outputs(c, run_local_cluster(data, sampler, plan, options), log);
  } else if (c.role == "master") {
    ClusterConfig config;
    config.workers = c.workers;
    config.reduction_blocks = c.reduction_blocks;
    config.sampler = sampler;
    config.plan = plan;
    config.debug_checks = c.debug_checks;
    config.validate();
    TcpListener listener(c.listen);
    log << "listening on port " << listener.port() << std::endl;
    std::vector<std::unique_ptr<Channel>> channels;
    for (std::size_t i = 0; i < c.workers; ++i) channels.push_back(listener.accept());
    write_fit_outputs(c, run_master(config, std::move(channels)), log);
  } else {
    const Dataset data = read_table(c.data, c.response);
    const BlockLayout layout{data.rows(), c.workers, blocks_of(c)};
    layout.validate();
    const RowRange rows = layout.worker_rows(c.rank - 1);
    ShardEngine engine(data.slice(rows.begin, rows.end), layout.worker_block_sizes(c.rank - 1));
    auto channel = tcp_connect(c.connect);
    const std::size_t iterations = run_worker(c.rank, engine, *channel);
    log << "worker " << c.rank << " served " << iterations << " iterations on rows [" << rows.begin << ", "
        << rows.end << ")\n";
  }
}

void cmd_predict(const RunConfig& c, std::ostream& log) {
  require_for(c, "predict");
  const PosteriorSample sample = load_model(c.model);
  std::vector<std::string> names;
  RowMatrix x = read_inputs(c.input, &names);
  // A training-style table carries the response too; drop it.
  if (const auto it = std::find(names.begin(), names.end(), c.response); it != names.end()) {
    const std::size_t drop = static_cast<std::size_t>(it - names.begin());
    RowMatrix trimmed(x.rows, x.cols - 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
      for (std::size_t j = 0, k = 0; j < x.cols; ++j)
        if (j != drop) trimmed(i, k++) = x(i, j);
    }
    x = std::move(trimmed);
  }
  const auto yhat = predict_mean(sample, x, c.threads);
  write_columns(c.output, {"yhat"}, {yhat});
  log << "wrote " << yhat.size() << " predictions to " << c.output << '\n';
  if (!c.truth.empty()) {
    const RowMatrix f = read_inputs(c.truth);
    if (f.cols != 1 || f.rows != yhat.size()) throw Error(c.truth + ": expected one column with one row per input");
    double ss = 0.0;
    for (std::size_t i = 0; i < yhat.size(); ++i) ss += (yhat[i] - f.data[i]) * (yhat[i] - f.data[i]);
    log << "rmse " << text::format_double(std::sqrt(ss / static_cast<double>(yhat.size()))) << '\n';
  }
}

void cmd_sensitivity(const RunConfig& c, std::ostream& log) {
  require_for(c, "sensitivity");
  const PosteriorSample sample = load_model(c.model);
  const BatchPredictor f = make_posterior_predictor(sample, c.threads);

  SobolOptions options;
  options.n_s = c.n_s;
  options.parts = c.parts;
  options.seed = c.seed;
  const SobolResult sobol = sobol_indices(f, sample.d, options);
  const std::string sobol_path = derived_path(c.output, "_sobol.csv");
  write_sensitivity_report(sobol_path, sobol);

  Rng rng(derive_seed(c.seed, 1u << 20));
  const auto grid = even_grid(c.grid_points);
  std::vector<MainEffectCurve> curves;
  for (std::size_t k = 0; k < sample.d; ++k) curves.push_back(main_effect(f, sample.d, k, grid, c.n_mc, rng));
  const std::string effects_path = derived_path(c.output, "_main_effects.csv");
  write_main_effects(effects_path, curves);
  log << "wrote " << sobol_path << " and " << effects_path << '\n';
}

void cmd_bench(const RunConfig& c, std::ostream& log) {
  require_for(c, "bench");
  BenchSettings s;
  s.n = c.bench_n;
  s.m = c.bench_m;
  s.workers = c.bench_workers;
  s.d = c.d;
  s.q = c.kernels;
  s.sigma_noise = c.sigma_noise;
  s.iterations = c.iterations;
  s.burn = c.burn;
  s.seed = c.seed;
  s.sampler = c.sampler();
  const BenchResult result = bench_run(s);
  for (const auto& failure : result.failures) log << "cell failed: " << failure << '\n';
  write_timing_records(c.output, result.records);
  const std::string report = derived_path(c.output, "_report.csv");
  write_bench_report(report, result.records);
  log << "wrote " << result.records.size() << " timing records to " << c.output << " and " << report << '\n';

  for (auto target : {RuntimeTarget::Serial, RuntimeTarget::Parallel}) {
    const bool serial = target == RuntimeTarget::Serial;
    try {
      const RuntimeModel model = fit_runtime_model(result.records, target);
      const std::string path = derived_path(c.output, serial ? "_serial_model.csv" : "_parallel_model.csv");
      write_model_report(path, model);
      log << (serial ? "serial" : "parallel") << " runtime model R^2 " << text::format_double(model.r_squared)
          << " -> " << path << '\n';
    } catch (const Error& e) {
      log << "no " << (serial ? "serial" : "parallel") << " runtime model: " << e.what() << '\n';
    }
  }
}

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"generate", "fit", "predict", "sensitivity", "bench"};
  return names;
}

void run_subcommand(const std::string& name, const RunConfig& config, std::ostream& log) {
  if (name == "generate") return cmd_generate(config, log);
  if (name == "fit") return cmd_fit(config, log);
  if (name == "predict") return cmd_predict(config, log);
  if (name == "sensitivity") return cmd_sensitivity(config, log);
  if (name == "bench") return cmd_bench(config, log);
  throw ConfigError("subcommand", "unknown subcommand '" + name + "'");
}

}  // namespace pbart
