#include <gtest/gtest.h>

#include <thread>

#include "pbart/cluster/local_cluster.hpp"
#include "pbart/cluster/master.hpp"
#include "pbart/cluster/sharding.hpp"
#include "pbart/cluster/transport.hpp"
#include "pbart/cluster/worker.hpp"
#include "pbart/error.hpp"
#include "pbart/protocol.hpp"
#include "pbart/sampler/shard_engine.hpp"
#include "support.hpp"
#include "trace_backend.hpp"

using namespace pbart;
using namespace pbart::protocol;
using pbart::testing::toy_data;
using pbart::testing::TraceBackend;

namespace {

std::vector<Message> random_messages(Rng& rng) {
  auto u32 = [&] { return static_cast<std::uint32_t>(rng.engine()()); };
  auto real = [&] { return rng.normal() * 1e3; };
  std::vector<Message> out;
  out.push_back(BirthProposalMsg{u32(), u32(), u32()});
  out.push_back(DeathProposalMsg{u32(), u32()});
  out.push_back(MoveStatsMsg{u32(), u32(), real(), real()});
  out.push_back(BirthAcceptMsg{u32(), u32(), u32(), real(), real()});
  out.push_back(DeathAcceptMsg{u32(), real()});
  out.push_back(RejectMsg{});
  MuStatsMsg ms;
  MuValuesMsg mv;
  const std::size_t b = 1 + rng.index(9);
  for (std::size_t k = 0; k < b; ++k) {
    ms.records.push_back({u32(), real(), std::abs(real())});
    mv.values.push_back(real());
  }
  out.push_back(ms);
  out.push_back(mv);
  out.push_back(RssPartialMsg{std::abs(real())});
  out.push_back(HelloMsg{kVersion, u32(), rng.engine()()});
  DataSummary s;
  s.n = rng.engine()();
  s.y_mean = real();
  s.y_m2 = std::abs(real());
  s.y_min = -1;
  s.y_max = 2;
  const std::size_t d = 1 + rng.index(4);
  for (std::size_t v = 0; v < d; ++v) {
    s.x_min.push_back(real());
    s.x_max.push_back(real());
  }
  out.push_back(ShardMetaMsg{s});
  ModelSetup setup;
  setup.m = u32();
  setup.numcut = u32();
  setup.scaling = ResponseScaling::from_range(-2.5, 7.0);
  setup.x_min = s.x_min;
  setup.x_max = s.x_max;
  out.push_back(ModelSetupMsg{setup});
  out.push_back(IterBeginMsg{u32(), static_cast<std::uint8_t>(rng.index(2))});
  out.push_back(ForestHashMsg{rng.engine()()});
  out.push_back(SigmaUpdateMsg{real()});
  out.push_back(ShutdownMsg{});
  return out;
}

struct Recording {
  std::vector<std::vector<std::uint8_t>> sent, received;
};

/// Keeps both directions of one endpoint verbatim.
class RecordingChannel final : public Channel {
 public:
  RecordingChannel(std::unique_ptr<Channel> inner, std::shared_ptr<Recording> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  void send(std::span<const std::uint8_t> m) override {
    log_->sent.emplace_back(m.begin(), m.end());
    inner_->send(m);
  }
  std::vector<std::uint8_t> receive() override {
    auto m = inner_->receive();
    log_->received.push_back(m);
    return m;
  }

 private:
  std::unique_ptr<Channel> inner_;
  std::shared_ptr<Recording> log_;
};


}  // namespace

TEST(Codec, PayloadSizesMatchTable) {
  EXPECT_EQ(encode(BirthProposalMsg{1, 3, 42}).size(), 1u + 12);
  EXPECT_EQ(encode(DeathProposalMsg{4, 5}).size(), 1u + 8);
  EXPECT_EQ(encode(MoveStatsMsg{}).size(), 1u + 24);
  EXPECT_EQ(encode(BirthAcceptMsg{}).size(), 1u + 28);
  EXPECT_EQ(encode(DeathAcceptMsg{}).size(), 1u + 28);
  EXPECT_EQ(encode(RejectMsg{}).size(), 1u);
  EXPECT_EQ(encode(MuStatsMsg{std::vector<MuStatsRecord>(7)}).size(), 1u + 140);
  EXPECT_EQ(encode(MuValuesMsg{std::vector<double>(7)}).size(), 1u + 56);
  EXPECT_EQ(encode(RssPartialMsg{}).size(), 1u + 8);
  EXPECT_EQ(payload_size(BirthProposalMsg{1, 3, 42}), 12u);
}

TEST(Codec, LittleEndianLayout) {
  const auto bytes = encode(BirthProposalMsg{0x01020304, 3, 42});
  const std::vector<std::uint8_t> expect{0x01, 0x04, 0x03, 0x02, 0x01, 3, 0, 0, 0, 42, 0, 0, 0};
  EXPECT_EQ(bytes, expect);
  const auto rss = encode(RssPartialMsg{1.0});
  // 1.0 = 0x3FF0000000000000
  const std::vector<std::uint8_t> one{0x09, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  EXPECT_EQ(rss, one);
  const auto death = encode(DeathAcceptMsg{9, 0.0});
  for (std::size_t i = 13; i < death.size(); ++i) EXPECT_EQ(death[i], 0) << i;
}

TEST(Codec, RoundTripEveryVariant) {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    for (const auto& msg : random_messages(rng)) {
      const auto bytes = encode(msg);
      EXPECT_EQ(bytes[0], static_cast<std::uint8_t>(opcode_of(msg)));
      EXPECT_EQ(bytes.size(), 1 + payload_size(msg));
      EXPECT_EQ(decode(bytes), msg) << name_of(opcode_of(msg));
    }
  }
}

TEST(Codec, TruncatedOrPaddedPayloadRejected) {
  auto bytes = encode(MoveStatsMsg{3, 4, 1.0, 2.0});
  bytes.pop_back();
  ASSERT_EQ(bytes.size() - 1, 23u);
  try {
    decode(bytes);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
  }
  auto longer = encode(RejectMsg{});
  longer.push_back(0);
  EXPECT_THROW(decode(longer), ProtocolError);
  auto mu = encode(MuValuesMsg{{1.0, 2.0}});
  mu.pop_back();
  EXPECT_THROW(decode(mu), ProtocolError);
}

TEST(Codec, EveryTruncationOfEveryVariantErrors) {
  Rng rng(6);
  for (const auto& msg : random_messages(rng)) {
    const auto bytes = encode(msg);
    for (std::size_t len = 1; len < bytes.size(); ++len) {
      const std::span<const std::uint8_t> cut(bytes.data(), len);
      // MU_* records may legitimately be cut to a shorter whole message.
      if (std::holds_alternative<MuStatsMsg>(msg) && (len - 1) % 20 == 0) continue;
      if (std::holds_alternative<MuValuesMsg>(msg) && (len - 1) % 8 == 0) continue;
      if (std::holds_alternative<ShardMetaMsg>(msg) || std::holds_alternative<ModelSetupMsg>(msg)) {
        EXPECT_ANY_THROW(decode(cut));
        continue;
      }
      EXPECT_THROW(decode(cut), ProtocolError) << name_of(opcode_of(msg)) << " len " << len;
    }
  }
}

TEST(Codec, UnknownOpcodeAndEmptyFrameRejected) {
  const std::vector<std::uint8_t> bad{0x30};
  EXPECT_THROW(decode(bad), ProtocolError);
  EXPECT_THROW(decode(std::span<const std::uint8_t>{}), ProtocolError);
}

TEST(Codec, NonZeroDeathPaddingRejected) {
  auto bytes = encode(DeathAcceptMsg{2, 0.5});
  bytes.back() = 1;
  EXPECT_THROW(decode(bytes), ProtocolError);
}

TEST(Codec, RecordCountChecked) {
  const MuStatsMsg ms{std::vector<MuStatsRecord>(3)};
  EXPECT_NO_THROW(encode(ms, 3));
  EXPECT_THROW(encode(ms, 4), ProtocolError);
  const auto bytes = encode(MuValuesMsg{{1, 2, 3}});
  EXPECT_THROW(decode(bytes, 2), ProtocolError);
  EXPECT_NO_THROW(decode(bytes, 3));
}

TEST(Codec, SizesIndependentOfShardSize) {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<std::uint32_t>(rng.engine()());
    EXPECT_EQ(encode(MoveStatsMsg{n, n / 2, 1e300, -1e-300}).size(), 25u);
    EXPECT_EQ(encode(MuStatsMsg{{{n, 1.0, 2.0}}}).size(), 21u);
  }
}

TEST(ByteCount, SingleTreeBirthExample) {
  const std::vector<TreeTrace> trace{{Move::Birth, true, 2}};
  EXPECT_EQ(iteration_byte_count(trace, 1), 128u);
  EXPECT_EQ(iteration_byte_count(trace, 3), 384u);
  EXPECT_EQ(iteration_byte_count(trace, 0), 0u);
}

TEST(ByteCount, AllRejectedFormula) {
  std::vector<TreeTrace> trace;
  for (int j = 0; j < 10; ++j) trace.push_back({j % 2 ? Move::Death : Move::Birth, false, 3});
  // births: 12 + 24; deaths: 8 + 24; plus mu stats/values 28 b; plus rss 8.
  const std::uint64_t per_worker = 5 * 36 + 5 * 32 + 10 * 28 * 3 + 8;
  EXPECT_EQ(iteration_byte_count(trace, 4), 4 * per_worker);
}

TEST(ByteCount, MatchesInstrumentedRun) {
  for (std::size_t n : {240u, 2400u}) {
    const Dataset data = toy_data(n, 3, 8);
    SamplerSettings s;
    s.prior.m = 6;
    s.prior.min_leaf = 2;
    const RunPlan plan{25, 0, 1, 9};
    const std::size_t p = 3;

    auto engine = ShardEngine::with_blocks(data, p);
    TraceBackend tracer(engine);
    run_chain(s, tracer, plan);

    auto counters = std::make_shared<ByteCounters>();
    LocalClusterOptions opt;
    opt.workers = p;
    opt.counters = counters;
    std::vector<std::uint64_t> per_iteration;
    std::uint64_t last = 0;
    run_local_cluster(data, s, plan, opt, [&](const IterationLog&) {
      const std::uint64_t now = counters->sampler_payload_bytes();
      per_iteration.push_back(now - last);
      last = now;
    });
    ASSERT_EQ(per_iteration.size(), tracer.iterations.size());
    for (std::size_t k = 0; k < per_iteration.size(); ++k) {
      EXPECT_EQ(per_iteration[k], iteration_byte_count(tracer.iterations[k], p)) << "n " << n << " iteration " << k;
    }
  }
}

TEST(GoldenTrace, CapturedStreamReplays) {
  const Dataset data = toy_data(300, 3, 10);
  SamplerSettings s;
  s.prior.m = 4;
  const RunPlan plan{15, 5, 1, 11};
  const std::size_t p = 2;
  const BlockLayout layout{data.rows(), p, p};

  std::vector<std::unique_ptr<Channel>> master_side;
  std::vector<std::shared_ptr<Recording>> recorders;
  std::vector<std::thread> threads;
  std::vector<std::unique_ptr<Channel>> worker_side;
  for (std::size_t r = 0; r < p; ++r) {
    auto [a, b] = make_inprocess_pair();
    recorders.push_back(std::make_shared<Recording>());
    master_side.push_back(std::make_unique<RecordingChannel>(std::move(a), recorders.back()));
    worker_side.push_back(std::move(b));
  }
  for (std::size_t r = 0; r < p; ++r) {
    threads.emplace_back([&, r] {
      const RowRange rows = layout.worker_rows(r);
      ShardEngine engine(data.slice(rows.begin, rows.end), layout.worker_block_sizes(r));
      run_worker(r + 1, engine, *worker_side[r]);
    });
  }
  ClusterConfig config;
  config.workers = p;
  config.sampler = s;
  config.plan = plan;
  const ChainResult original = run_master(config, std::move(master_side));
  for (auto& t : threads) t.join();

  for (std::size_t r = 0; r < p; ++r) {
    const auto& to_worker = recorders[r]->sent;
    const auto& from_worker = recorders[r]->received;
    ASSERT_FALSE(to_worker.empty());
    // Decoding then re-encoding is the identity on the captured frames.
    for (const auto& frame : to_worker) EXPECT_EQ(encode(decode(frame)), frame);
    for (const auto& frame : from_worker) EXPECT_EQ(encode(decode(frame)), frame);

    // A fresh worker fed the captured master frames answers with the same bytes.
    auto [master_end, worker_end] = make_inprocess_pair();
    const RowRange rows = layout.worker_rows(r);
    ShardEngine engine(data.slice(rows.begin, rows.end), layout.worker_block_sizes(r));
    for (const auto& frame : to_worker) master_end->send(frame);
    run_worker(r + 1, engine, *worker_end);
    std::vector<std::vector<std::uint8_t>> replies;
    for (std::size_t k = 0; k < from_worker.size(); ++k) replies.push_back(master_end->receive());
    EXPECT_EQ(replies, from_worker);
    std::vector<Message> a, b;
    for (const auto& f : replies) a.push_back(decode(f));
    for (const auto& f : from_worker) b.push_back(decode(f));
    EXPECT_EQ(a, b);
  }
  EXPECT_EQ(original.posterior.snapshots.size(), 10u);
}
