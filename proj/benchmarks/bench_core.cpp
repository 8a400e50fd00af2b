#include <benchmark/benchmark.h>

#include "pbart/protocol.hpp"
#include "pbart/rng.hpp"
#include "pbart/sampler/shard_engine.hpp"
#include "pbart/tree.hpp"

namespace {

using namespace pbart;

CutpointGrid grid_for(std::size_t d) {
  std::vector<std::vector<double>> cuts;
  for (std::size_t v = 0; v < d; ++v) cuts.push_back(cutpoints_between(-1.0, 1.0, 100));
  return CutpointGrid(std::move(cuts));
}

Tree grown_tree(std::size_t leaves, const CutpointGrid& grid, Rng& rng) {
  Tree t(0.0);
  while (t.leaf_count() < leaves) {
    auto nodes = t.nodes(NodeKind::Terminal);
    TreeNode* leaf = nodes[rng.index(nodes.size())];
    const auto v = static_cast<std::uint32_t>(rng.index(grid.num_variables()));
    const CutRange r = t.rule_range(*leaf, v, grid);
    if (r.size() == 0) continue;
    t.split(leaf->id, v, r.lo + static_cast<std::uint32_t>(rng.index(r.size())), rng.normal(), rng.normal());
  }
  return t;
}

Dataset uniform_data(std::size_t n, std::size_t d, Rng& rng) {
  Dataset data;
  data.x = RowMatrix(n, d);
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) data.x(i, j) = rng.uniform(-1.0, 1.0);
    data.y[i] = rng.normal();
  }
  return data;
}

void BM_FlatTreeEvaluate(benchmark::State& state) {
  const std::size_t d = 10, n = 4096;
  Rng rng(1);
  const auto grid = grid_for(d);
  const FlatTree flat(grown_tree(static_cast<std::size_t>(state.range(0)), grid, rng), grid);
  const Dataset data = uniform_data(n, d, rng);
  for (auto _ : state) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += flat.evaluate(data.x.data.data() + i * d);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FlatTreeEvaluate)->Arg(1)->Arg(4)->Arg(16);

void BM_MoveStats(benchmark::State& state) {
  const std::size_t d = 10;
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Dataset data = uniform_data(n, d, rng);
  auto engine = ShardEngine::with_blocks(std::move(data), 4);
  ModelSetup setup;
  setup.m = 1;
  setup.numcut = 100;
  setup.x_min.assign(d, -1.0);
  setup.x_max.assign(d, 1.0);
  engine.setup(setup);
  Proposal p;
  p.move = Move::Birth;
  p.node = 1;
  p.var = 3;
  p.cut = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.move_stats(p));
    engine.reject(0);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MoveStats)->Arg(10000)->Arg(100000);

void BM_CodecMuStats(benchmark::State& state) {
  protocol::MuStatsMsg msg;
  for (std::int64_t k = 0; k < state.range(0); ++k) msg.records.push_back({static_cast<std::uint32_t>(k), 0.5, 1.5});
  for (auto _ : state) {
    const auto bytes = protocol::encode(msg);
    benchmark::DoNotOptimize(protocol::decode(bytes));
  }
}
BENCHMARK(BM_CodecMuStats)->Arg(1)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
