#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <thread>

#include "pbart/cluster/local_cluster.hpp"
#include "pbart/cluster/master.hpp"
#include "pbart/cluster/reduce.hpp"
#include "pbart/cluster/sharding.hpp"
#include "pbart/cluster/transport.hpp"
#include "pbart/cluster/worker.hpp"
#include "pbart/error.hpp"
#include "pbart/protocol.hpp"
#include "support.hpp"

using namespace pbart;
using pbart::testing::toy_data;

namespace {

SamplerSettings small_settings(std::uint32_t m = 5) {
  SamplerSettings s;
  s.prior.m = m;
  s.prior.min_leaf = 3;
  return s;
}

void expect_same_chain(const ChainResult& a, const ChainResult& b) {
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    ASSERT_EQ(a.log[i], b.log[i]) << "iteration " << i;
    ASSERT_EQ(std::bit_cast<std::uint64_t>(a.log[i].sigma), std::bit_cast<std::uint64_t>(b.log[i].sigma));
  }
  EXPECT_TRUE(a.posterior == b.posterior);
}

}  // namespace

TEST(Sharding, SizesDifferByAtMostOne) {
  EXPECT_EQ(split_sizes(10, 3), (std::vector<std::size_t>{4, 3, 3}));
  const auto big = split_sizes(7016430, 192);
  ASSERT_EQ(big.size(), 192u);
  // 7016430 = 192 * 36543 + 174
  std::size_t total = 0, larger = 0;
  for (auto s : big) {
    EXPECT_TRUE(s == 36543 || s == 36544) << s;
    larger += s == 36544;
    total += s;
  }
  EXPECT_EQ(larger, 174u);
  EXPECT_EQ(total, 7016430u);
}

TEST(Sharding, ShardsConcatenateToTheDataset) {
  const Dataset data = toy_data(10, 2, 1);
  const auto shards = shard_data(data, 3);
  ASSERT_EQ(shards.size(), 3u);
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < shards.size(); ++r) {
    EXPECT_EQ(shards[r].rank, r + 1);
    EXPECT_EQ(shards[r].data.rows(), shards[r].range.size());
    xs.insert(xs.end(), shards[r].data.x.data.begin(), shards[r].data.x.data.end());
    ys.insert(ys.end(), shards[r].data.y.begin(), shards[r].data.y.end());
  }
  EXPECT_EQ(xs, data.x.data);
  EXPECT_EQ(ys, data.y);
}

TEST(Sharding, MoreWorkersThanRows) {
  try {
    shard_data(toy_data(3, 2, 1), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("more workers than rows"), std::string::npos);
  }
}

TEST(Sharding, BlockLayoutAlignsWorkersWithBlocks) {
  const BlockLayout layout{103, 2, 8};
  layout.validate();
  const auto blocks = layout.block_sizes();
  ASSERT_EQ(blocks.size(), 8u);
  std::size_t start = 0;
  for (std::size_t w = 0; w < 2; ++w) {
    const auto mine = layout.worker_block_sizes(w);
    ASSERT_EQ(mine.size(), 4u);
    EXPECT_TRUE(std::equal(mine.begin(), mine.end(), blocks.begin() + 4 * w));
    const RowRange r = layout.worker_rows(w);
    EXPECT_EQ(r.begin, start);
    std::size_t sum = 0;
    for (auto s : mine) sum += s;
    EXPECT_EQ(r.size(), sum);
    start = r.end;
  }
  EXPECT_EQ(start, 103u);
  EXPECT_THROW((BlockLayout{103, 3, 8}.validate()), ConfigError);
  EXPECT_THROW((BlockLayout{5, 1, 8}.validate()), ConfigError);
}

TEST(Reduce, ZerosAndIdentity) {
  auto add = [](double a, double b) { return a + b; };
  EXPECT_EQ(reduce_stats<double>({{1, 0.0}, {2, 0.0}, {3, 0.0}}, 3, add), 0.0);
  EXPECT_EQ(reduce_stats<double>({{1, 0.1234}}, 1, add), 0.1234);
}

TEST(Reduce, ArrivalOrderDoesNotChangeBits) {
  Rng rng(2);
  auto add = [](const SuffStats& a, const SuffStats& b) { return a + b; };
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t p = 2 + rng.index(15);
    std::vector<RankedPartial<SuffStats>> parts;
    for (std::size_t r = 1; r <= p; ++r) {
      parts.push_back({r, SuffStats{rng.index(1000), rng.normal() * 1e6, rng.uniform() * 1e-6}});
    }
    const SuffStats in_order = reduce_stats(parts, p, add);
    std::shuffle(parts.begin(), parts.end(), rng.engine());
    const SuffStats shuffled = reduce_stats(parts, p, add);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(in_order.sum), std::bit_cast<std::uint64_t>(shuffled.sum));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(in_order.sumsq), std::bit_cast<std::uint64_t>(shuffled.sumsq));
    EXPECT_EQ(in_order.n, shuffled.n);
  }
}

TEST(Reduce, MissingOrDuplicateRank) {
  auto add = [](double a, double b) { return a + b; };
  EXPECT_THROW(reduce_stats<double>({{1, 1.0}, {3, 1.0}}, 2, add), ProtocolError);
  EXPECT_THROW(reduce_stats<double>({{1, 1.0}, {1, 1.0}}, 2, add), ProtocolError);
  EXPECT_THROW(reduce_stats<double>({{1, 1.0}}, 2, add), ProtocolError);
}

TEST(Distributed, OneWorkerEqualsSerial) {
  const Dataset data = toy_data(200, 3, 3);
  const RunPlan plan{1000, 100, 1, 4};
  const auto serial = run_serial(data, small_settings(), plan, 1);
  LocalClusterOptions opt;
  opt.workers = 1;
  expect_same_chain(serial, run_local_cluster(data, small_settings(), plan, opt));
}

TEST(Distributed, FixedBlocksMakeWorkerCountIrrelevant) {
  const Dataset data = toy_data(301, 4, 5);
  const RunPlan plan{150, 50, 2, 6};
  LocalClusterOptions two, four;
  two.workers = 2;
  two.reduction_blocks = 4;
  four.workers = 4;
  four.debug_checks = true;
  const auto a = run_local_cluster(data, small_settings(8), plan, two);
  const auto b = run_local_cluster(data, small_settings(8), plan, four);
  expect_same_chain(a, b);
  expect_same_chain(a, run_serial(data, small_settings(8), plan, 4));
}

TEST(Distributed, PriorOnlyMatchesSerial) {
  const Dataset data = toy_data(120, 3, 7);
  auto s = small_settings(3);
  s.prior_only = true;
  s.prior.min_leaf = 0;
  const RunPlan plan{300, 0, 1, 8};
  LocalClusterOptions opt;
  opt.workers = 3;
  expect_same_chain(run_serial(data, s, plan, 3), run_local_cluster(data, s, plan, opt));
}

TEST(Distributed, WorkerResidualsStayConsistent) {
  const Dataset data = toy_data(240, 3, 9);
  const std::size_t p = 2;
  const BlockLayout layout{data.rows(), p, p};
  std::vector<std::unique_ptr<Channel>> master_side;
  std::vector<std::unique_ptr<Channel>> worker_side;
  std::vector<std::unique_ptr<ShardEngine>> engines;
  for (std::size_t r = 0; r < p; ++r) {
    auto [a, b] = make_inprocess_pair();
    master_side.push_back(std::move(a));
    worker_side.push_back(std::move(b));
    const RowRange rows = layout.worker_rows(r);
    engines.push_back(std::make_unique<ShardEngine>(data.slice(rows.begin, rows.end), layout.worker_block_sizes(r)));
  }
  std::vector<std::thread> threads;
  std::vector<std::size_t> served(p);
  for (std::size_t r = 0; r < p; ++r) {
    threads.emplace_back([&, r] { served[r] = run_worker(r + 1, *engines[r], *worker_side[r]); });
  }
  ClusterConfig config;
  config.workers = p;
  config.sampler = small_settings(6);
  config.plan = {40, 0, 1, 10};
  const ChainResult result = run_master(config, std::move(master_side));
  for (auto& t : threads) t.join();

  const Forest& master_forest = result.posterior.snapshots.back().trees;
  for (std::size_t r = 0; r < p; ++r) {
    EXPECT_EQ(served[r], 40u);
    const ShardEngine& e = *engines[r];
    EXPECT_EQ(forest_hash(e.forest()), forest_hash(master_forest));
    for (std::size_t i = 0; i < e.rows(); ++i) {
      double fit = 0.0;
      for (const auto& t : e.forest()) fit += t.evaluate(e.data().x.row(i), e.grid());
      EXPECT_NEAR(e.residual()[i], e.model_response()[i] - fit, 1e-8);
    }
  }
}

TEST(Handshake, OrdersByRankAndRejectsBadPeers) {
  auto hello = [](std::uint32_t version, std::uint32_t rank) {
    auto [m, w] = make_inprocess_pair();
    send_message(*w, protocol::HelloMsg{version, rank, 10});
    return std::pair{std::move(m), std::move(w)};
  };
  {
    auto [m2, w2] = hello(protocol::kVersion, 2);
    auto [m1, w1] = hello(protocol::kVersion, 1);
    std::vector<std::unique_ptr<Channel>> chans;
    Channel* second = m2.get();
    chans.push_back(std::move(m2));
    chans.push_back(std::move(m1));
    const auto ordered = handshake(std::move(chans));
    EXPECT_EQ(ordered[1].get(), second);
  }
  {
    auto [m, w] = hello(protocol::kVersion + 1, 1);
    std::vector<std::unique_ptr<Channel>> chans;
    chans.push_back(std::move(m));
    EXPECT_THROW(handshake(std::move(chans)), ProtocolError);
  }
  {
    auto [a, wa] = hello(protocol::kVersion, 1);
    auto [b, wb] = hello(protocol::kVersion, 1);
    std::vector<std::unique_ptr<Channel>> chans;
    chans.push_back(std::move(a));
    chans.push_back(std::move(b));
    EXPECT_THROW(handshake(std::move(chans)), ProtocolError);
  }
  {
    auto [m, w] = hello(protocol::kVersion, 3);
    std::vector<std::unique_ptr<Channel>> chans;
    chans.push_back(std::move(m));
    EXPECT_THROW(handshake(std::move(chans)), ProtocolError);
  }
}

TEST(Worker, MalformedMessageIsFatal) {
  auto engine = ShardEngine::with_blocks(toy_data(20, 2, 11), 1);
  auto [m, w] = make_inprocess_pair();
  const std::vector<std::uint8_t> junk{0x03, 1, 2};
  m->send(junk);
  EXPECT_THROW(run_worker(1, engine, *w), ProtocolError);
}

TEST(Worker, DisconnectAbortsMaster) {
  auto [m, w] = make_inprocess_pair();
  std::thread peer([ch = std::shared_ptr<Channel>(std::move(w))] {
    send_message(*ch, protocol::HelloMsg{protocol::kVersion, 1, 5});
    // Goes away without sending its shard summary.
  });
  peer.join();
  std::vector<std::unique_ptr<Channel>> chans;
  chans.push_back(std::move(m));
  ClusterConfig config;
  config.sampler = small_settings();
  config.plan = {10, 0, 1, 1};
  EXPECT_THROW(run_master(config, std::move(chans)), TransportError);
}

TEST(Worker, FailureSurfacesFromLocalCluster) {
  // Three rows per worker cannot hold four blocks each.
  LocalClusterOptions opt;
  opt.workers = 2;
  opt.reduction_blocks = 8;
  EXPECT_THROW(run_local_cluster(toy_data(6, 2, 12), small_settings(), {10, 0, 1, 1}, opt), ConfigError);
}

TEST(Tcp, TwoWorkersMatchSerial) {
  const Dataset data = toy_data(180, 3, 13);
  const std::size_t p = 2;
  const BlockLayout layout{data.rows(), p, p};
  TcpListener listener("127.0.0.1:0");
  ASSERT_NE(listener.port(), 0);
  const std::string address = "127.0.0.1:" + std::to_string(listener.port());
  std::vector<std::thread> threads;
  for (std::size_t r = 0; r < p; ++r) {
    threads.emplace_back([&, r] {
      const RowRange rows = layout.worker_rows(r);
      ShardEngine engine(data.slice(rows.begin, rows.end), layout.worker_block_sizes(r));
      auto ch = tcp_connect(address);
      run_worker(r + 1, engine, *ch);
    });
  }
  std::vector<std::unique_ptr<Channel>> chans;
  for (std::size_t r = 0; r < p; ++r) chans.push_back(listener.accept());
  ClusterConfig config;
  config.workers = p;
  config.sampler = small_settings();
  config.plan = {60, 10, 1, 14};
  config.debug_checks = true;
  const auto tcp = run_master(config, std::move(chans));
  for (auto& t : threads) t.join();
  expect_same_chain(tcp, run_serial(data, small_settings(), config.plan, p));
}
