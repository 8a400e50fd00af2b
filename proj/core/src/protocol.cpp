#include "pbart/protocol.hpp"

#include <bit>
#include <limits>
#include <string>
#include <type_traits>

#include "pbart/error.hpp"

namespace pbart::protocol {

namespace {

class Writer {
 public:
  explicit Writer(Opcode op) { out_.push_back(static_cast<std::uint8_t>(op)); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> payload, Opcode op) : bytes_(payload), op_(op) {}
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void skip_zeros(std::size_t n) {
    need(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (bytes_[pos_ + i] != 0) throw ProtocolError(std::string(name_of(op_)) + ": non-zero padding");
    }
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void finish() const {
    if (pos_ != bytes_.size()) {
      throw ProtocolError(std::string(name_of(op_)) + ": length mismatch (" + std::to_string(bytes_.size() - pos_) +
                          " trailing bytes)");
    }
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw ProtocolError(std::string(name_of(op_)) + ": length mismatch (payload truncated at " +
                          std::to_string(bytes_.size()) + " bytes)");
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  Opcode op_;
};

void expect_exact(std::span<const std::uint8_t> payload, std::size_t size, Opcode op) {
  if (payload.size() != size) {
    throw ProtocolError(std::string(name_of(op)) + ": length mismatch (expected " + std::to_string(size) +
                        " payload bytes, got " + std::to_string(payload.size()) + ")");
  }
}

void check_records(std::size_t actual, std::optional<std::size_t> expected, Opcode op) {
  if (expected && actual != *expected) {
    throw ProtocolError(std::string(name_of(op)) + ": record count " + std::to_string(actual) +
                        " does not match the tree's " + std::to_string(*expected) + " terminal nodes");
  }
  if (actual > std::numeric_limits<std::uint32_t>::max()) throw ProtocolError("record count overflow");
}

std::uint32_t checked_count(std::uint64_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ProtocolError("row count does not fit in 32 bits");
  return static_cast<std::uint32_t>(n);
}

void write_summary(Writer& w, const DataSummary& s) {
  w.u64(s.n);
  w.f64(s.y_mean);
  w.f64(s.y_m2);
  w.f64(s.y_min);
  w.f64(s.y_max);
  w.u32(static_cast<std::uint32_t>(s.x_min.size()));
  for (double v : s.x_min) w.f64(v);
  for (double v : s.x_max) w.f64(v);
}

DataSummary read_summary(Reader& r) {
  DataSummary s;
  s.n = r.u64();
  s.y_mean = r.f64();
  s.y_m2 = r.f64();
  s.y_min = r.f64();
  s.y_max = r.f64();
  const std::uint32_t d = r.u32();
  if (r.remaining() != 16ull * d) throw ProtocolError("ShardMeta: length mismatch");
  s.x_min.resize(d);
  s.x_max.resize(d);
  for (auto& v : s.x_min) v = r.f64();
  for (auto& v : s.x_max) v = r.f64();
  return s;
}

}  // namespace

Opcode opcode_of(const Message& msg) {
  return std::visit(
      [](const auto& m) -> Opcode {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BirthProposalMsg>) return Opcode::BirthProposal;
        else if constexpr (std::is_same_v<T, DeathProposalMsg>) return Opcode::DeathProposal;
        else if constexpr (std::is_same_v<T, MoveStatsMsg>) return Opcode::MoveStats;
        else if constexpr (std::is_same_v<T, BirthAcceptMsg>) return Opcode::BirthAccept;
        else if constexpr (std::is_same_v<T, DeathAcceptMsg>) return Opcode::DeathAccept;
        else if constexpr (std::is_same_v<T, RejectMsg>) return Opcode::Reject;
        else if constexpr (std::is_same_v<T, MuStatsMsg>) return Opcode::MuStats;
        else if constexpr (std::is_same_v<T, MuValuesMsg>) return Opcode::MuValues;
        else if constexpr (std::is_same_v<T, RssPartialMsg>) return Opcode::RssPartial;
        else if constexpr (std::is_same_v<T, HelloMsg>) return Opcode::Hello;
        else if constexpr (std::is_same_v<T, ShardMetaMsg>) return Opcode::ShardMeta;
        else if constexpr (std::is_same_v<T, ModelSetupMsg>) return Opcode::ModelSetup;
        else if constexpr (std::is_same_v<T, IterBeginMsg>) return Opcode::IterBegin;
        else if constexpr (std::is_same_v<T, ForestHashMsg>) return Opcode::ForestHash;
        else if constexpr (std::is_same_v<T, SigmaUpdateMsg>) return Opcode::SigmaUpdate;
        else return Opcode::Shutdown;
      },
      msg);
}

const char* name_of(Opcode op) {
  switch (op) {
    case Opcode::BirthProposal: return "BIRTH_PROPOSAL";
    case Opcode::DeathProposal: return "DEATH_PROPOSAL";
    case Opcode::MoveStats: return "MOVE_STATS";
    case Opcode::BirthAccept: return "BIRTH_ACCEPT";
    case Opcode::DeathAccept: return "DEATH_ACCEPT";
    case Opcode::Reject: return "REJECT";
    case Opcode::MuStats: return "MU_STATS";
    case Opcode::MuValues: return "MU_VALUES";
    case Opcode::RssPartial: return "RSS_PARTIAL";
    case Opcode::Hello: return "HELLO";
    case Opcode::ShardMeta: return "SHARD_META";
    case Opcode::ModelSetup: return "MODEL_SETUP";
    case Opcode::IterBegin: return "ITER_BEGIN";
    case Opcode::ForestHash: return "FOREST_HASH";
    case Opcode::SigmaUpdate: return "SIGMA_UPDATE";
    case Opcode::Shutdown: return "SHUTDOWN";
  }
  return "UNKNOWN";
}

bool is_sampler_opcode(Opcode op) { return static_cast<std::uint8_t>(op) < 0x40; }

std::vector<std::uint8_t> encode(const Message& msg, std::optional<std::size_t> expected_records) {
  Writer w(opcode_of(msg));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BirthProposalMsg>) {
          w.u32(m.node);
          w.u32(m.var);
          w.u32(m.cut);
        } else if constexpr (std::is_same_v<T, DeathProposalMsg>) {
          w.u32(m.left);
          w.u32(m.right);
        } else if constexpr (std::is_same_v<T, MoveStatsMsg>) {
          w.u32(m.n_left);
          w.u32(m.n_right);
          w.f64(m.sum_left);
          w.f64(m.sum_right);
        } else if constexpr (std::is_same_v<T, BirthAcceptMsg>) {
          w.u32(m.node);
          w.u32(m.var);
          w.u32(m.cut);
          w.f64(m.mu_left);
          w.f64(m.mu_right);
        } else if constexpr (std::is_same_v<T, DeathAcceptMsg>) {
          w.u32(m.node);
          w.f64(m.mu);
          w.zeros(16);
        } else if constexpr (std::is_same_v<T, MuStatsMsg>) {
          check_records(m.records.size(), expected_records, Opcode::MuStats);
          for (const auto& r : m.records) {
            w.u32(r.n);
            w.f64(r.sum);
            w.f64(r.sumsq);
          }
        } else if constexpr (std::is_same_v<T, MuValuesMsg>) {
          check_records(m.values.size(), expected_records, Opcode::MuValues);
          for (double v : m.values) w.f64(v);
        } else if constexpr (std::is_same_v<T, RssPartialMsg>) {
          w.f64(m.rss);
        } else if constexpr (std::is_same_v<T, HelloMsg>) {
          w.u32(m.version);
          w.u32(m.rank);
          w.u64(m.rows);
        } else if constexpr (std::is_same_v<T, ShardMetaMsg>) {
          write_summary(w, m.summary);
        } else if constexpr (std::is_same_v<T, ModelSetupMsg>) {
          const auto& s = m.setup;
          if (s.x_min.size() != s.x_max.size()) throw ProtocolError("MODEL_SETUP: mismatched ranges");
          w.u32(s.m);
          w.u32(s.numcut);
          w.u8(s.scaling.identity ? 1 : 0);
          w.f64(s.scaling.lo);
          w.f64(s.scaling.hi);
          w.u32(static_cast<std::uint32_t>(s.x_min.size()));
          for (double v : s.x_min) w.f64(v);
          for (double v : s.x_max) w.f64(v);
        } else if constexpr (std::is_same_v<T, IterBeginMsg>) {
          w.u32(m.iteration);
          w.u8(m.phase);
        } else if constexpr (std::is_same_v<T, ForestHashMsg>) {
          w.u64(m.hash);
        } else if constexpr (std::is_same_v<T, SigmaUpdateMsg>) {
          w.f64(m.sigma);
        }
        // RejectMsg and ShutdownMsg carry no payload.
      },
      msg);
  return w.take();
}

Message decode(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_records) {
  if (bytes.empty()) throw ProtocolError("empty message");
  const auto raw = bytes[0];
  const auto payload = bytes.subspan(1);
  const auto op = static_cast<Opcode>(raw);
  Reader r(payload, op);
  switch (op) {
    case Opcode::BirthProposal: {
      expect_exact(payload, 12, op);
      BirthProposalMsg m;
      m.node = r.u32();
      m.var = r.u32();
      m.cut = r.u32();
      return m;
    }
    case Opcode::DeathProposal: {
      expect_exact(payload, 8, op);
      DeathProposalMsg m;
      m.left = r.u32();
      m.right = r.u32();
      return m;
    }
    case Opcode::MoveStats: {
      expect_exact(payload, 24, op);
      MoveStatsMsg m;
      m.n_left = r.u32();
      m.n_right = r.u32();
      m.sum_left = r.f64();
      m.sum_right = r.f64();
      return m;
    }
    case Opcode::BirthAccept: {
      expect_exact(payload, 28, op);
      BirthAcceptMsg m;
      m.node = r.u32();
      m.var = r.u32();
      m.cut = r.u32();
      m.mu_left = r.f64();
      m.mu_right = r.f64();
      return m;
    }
    case Opcode::DeathAccept: {
      expect_exact(payload, 28, op);
      DeathAcceptMsg m;
      m.node = r.u32();
      m.mu = r.f64();
      r.skip_zeros(16);
      return m;
    }
    case Opcode::Reject:
      expect_exact(payload, 0, op);
      return RejectMsg{};
    case Opcode::MuStats: {
      if (payload.size() % 20 != 0) expect_exact(payload, payload.size() / 20 * 20, op);
      MuStatsMsg m;
      m.records.resize(payload.size() / 20);
      check_records(m.records.size(), expected_records, op);
      for (auto& rec : m.records) {
        rec.n = r.u32();
        rec.sum = r.f64();
        rec.sumsq = r.f64();
      }
      return m;
    }
    case Opcode::MuValues: {
      if (payload.size() % 8 != 0) expect_exact(payload, payload.size() / 8 * 8, op);
      MuValuesMsg m;
      m.values.resize(payload.size() / 8);
      check_records(m.values.size(), expected_records, op);
      for (auto& v : m.values) v = r.f64();
      return m;
    }
    case Opcode::RssPartial: {
      expect_exact(payload, 8, op);
      return RssPartialMsg{r.f64()};
    }
    case Opcode::Hello: {
      expect_exact(payload, 16, op);
      HelloMsg m;
      m.version = r.u32();
      m.rank = r.u32();
      m.rows = r.u64();
      return m;
    }
    case Opcode::ShardMeta: {
      ShardMetaMsg m;
      m.summary = read_summary(r);
      r.finish();
      return m;
    }
    case Opcode::ModelSetup: {
      ModelSetupMsg m;
      m.setup.m = r.u32();
      m.setup.numcut = r.u32();
      const std::uint8_t identity = r.u8();
      if (identity > 1) throw ProtocolError("MODEL_SETUP: bad scaling flag");
      m.setup.scaling.identity = identity == 1;
      m.setup.scaling.lo = r.f64();
      m.setup.scaling.hi = r.f64();
      const std::uint32_t d = r.u32();
      if (r.remaining() != 16ull * d) throw ProtocolError("MODEL_SETUP: length mismatch");
      m.setup.x_min.resize(d);
      m.setup.x_max.resize(d);
      for (auto& v : m.setup.x_min) v = r.f64();
      for (auto& v : m.setup.x_max) v = r.f64();
      return m;
    }
    case Opcode::IterBegin: {
      expect_exact(payload, 5, op);
      IterBeginMsg m;
      m.iteration = r.u32();
      m.phase = r.u8();
      if (m.phase > 1) throw ProtocolError("ITER_BEGIN: unknown phase");
      return m;
    }
    case Opcode::ForestHash:
      expect_exact(payload, 8, op);
      return ForestHashMsg{r.u64()};
    case Opcode::SigmaUpdate:
      expect_exact(payload, 8, op);
      return SigmaUpdateMsg{r.f64()};
    case Opcode::Shutdown:
      expect_exact(payload, 0, op);
      return ShutdownMsg{};
  }
  throw ProtocolError("unknown opcode " + std::to_string(raw));
}

std::size_t payload_size(const Message& msg) { return encode(msg).size() - 1; }

MoveStatsMsg to_wire(const MoveStats& s) {
  return {checked_count(s.left.n), checked_count(s.right.n), s.left.sum, s.right.sum};
}

MoveStats from_wire(const MoveStatsMsg& m) {
  MoveStats s;
  s.left.n = m.n_left;
  s.left.sum = m.sum_left;
  s.right.n = m.n_right;
  s.right.sum = m.sum_right;
  return s;
}

MuStatsMsg to_wire(const std::vector<SuffStats>& stats) {
  MuStatsMsg m;
  m.records.reserve(stats.size());
  for (const auto& s : stats) m.records.push_back({checked_count(s.n), s.sum, s.sumsq});
  return m;
}

std::vector<SuffStats> from_wire(const MuStatsMsg& m) {
  std::vector<SuffStats> out;
  out.reserve(m.records.size());
  for (const auto& r : m.records) out.push_back({r.n, r.sum, r.sumsq});
  return out;
}

std::uint64_t iteration_byte_count(std::span<const TreeTrace> trace, std::size_t workers) {
  if (workers == 0) return 0;
  std::uint64_t per_worker = 0;
  for (const auto& t : trace) {
    if (t.move == Move::Birth) per_worker += 12 + 24 + (t.accepted ? 28 : 0);
    if (t.move == Move::Death) per_worker += 8 + 24 + (t.accepted ? 28 : 0);
    per_worker += 20ull * t.leaves_after + 8ull * t.leaves_after;
  }
  per_worker += 8;  // RSS partial
  return per_worker * workers;
}

}  // namespace pbart::protocol
