#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pbart/dataset.hpp"
#include "pbart/sampler/backend.hpp"
#include "pbart/sampler/conjugate.hpp"
#include "pbart/sampler/proposal.hpp"
#include "pbart/tree.hpp"

namespace pbart::protocol {

inline constexpr std::uint32_t kVersion = 1;

/// One opcode byte precedes every payload. Integers are u32 little-endian,
/// reals IEEE-754 binary64 little-endian.
enum class Opcode : std::uint8_t {
  BirthProposal = 0x01,  // node, v, c                        12 B
  DeathProposal = 0x02,  // left child id, right child id      8 B
  MoveStats = 0x03,      // n_l, n_r, sum_l, sum_r            24 B
  BirthAccept = 0x04,    // node, v, c, mu_l, mu_r            28 B
  DeathAccept = 0x05,    // node, mu, 16 zero bytes           28 B
  Reject = 0x06,         //                                    0 B
  MuStats = 0x07,        // b x (n, sum, sumsq)             20b B
  MuValues = 0x08,       // b x mu                           8b B
  RssPartial = 0x09,     // rss                                8 B

  // Control plane.
  Hello = 0x40,        // version, rank, shard rows (u64)
  ShardMeta = 0x41,    // shard data summary
  ModelSetup = 0x42,   // m, numcut, scaling, variable ranges
  IterBegin = 0x43,    // iteration, phase (0 = tree sweep, 1 = sigma)
  ForestHash = 0x44,   // u64 hash (debug replica check)
  SigmaUpdate = 0x45,  // sigma (debug only)
  Shutdown = 0x46,
};

struct BirthProposalMsg {
  NodeId node = 0;
  std::uint32_t var = 0;
  std::uint32_t cut = 0;
  friend bool operator==(const BirthProposalMsg&, const BirthProposalMsg&) = default;
};
struct DeathProposalMsg {
  NodeId left = 0;
  NodeId right = 0;
  friend bool operator==(const DeathProposalMsg&, const DeathProposalMsg&) = default;
};
struct MoveStatsMsg {
  std::uint32_t n_left = 0;
  std::uint32_t n_right = 0;
  double sum_left = 0.0;
  double sum_right = 0.0;
  friend bool operator==(const MoveStatsMsg&, const MoveStatsMsg&) = default;
};
struct BirthAcceptMsg {
  NodeId node = 0;
  std::uint32_t var = 0;
  std::uint32_t cut = 0;
  double mu_left = 0.0;
  double mu_right = 0.0;
  friend bool operator==(const BirthAcceptMsg&, const BirthAcceptMsg&) = default;
};
struct DeathAcceptMsg {
  NodeId node = 0;
  double mu = 0.0;
  friend bool operator==(const DeathAcceptMsg&, const DeathAcceptMsg&) = default;
};
struct RejectMsg {
  friend bool operator==(const RejectMsg&, const RejectMsg&) = default;
};
struct MuStatsRecord {
  std::uint32_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;
  friend bool operator==(const MuStatsRecord&, const MuStatsRecord&) = default;
};
struct MuStatsMsg {
  std::vector<MuStatsRecord> records;  // ascending node id
  friend bool operator==(const MuStatsMsg&, const MuStatsMsg&) = default;
};
struct MuValuesMsg {
  std::vector<double> values;  // ascending node id
  friend bool operator==(const MuValuesMsg&, const MuValuesMsg&) = default;
};
struct RssPartialMsg {
  double rss = 0.0;
  friend bool operator==(const RssPartialMsg&, const RssPartialMsg&) = default;
};
struct HelloMsg {
  std::uint32_t version = kVersion;
  std::uint32_t rank = 0;
  std::uint64_t rows = 0;
  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};
struct ShardMetaMsg {
  DataSummary summary;
  friend bool operator==(const ShardMetaMsg&, const ShardMetaMsg&) = default;
};
struct ModelSetupMsg {
  pbart::ModelSetup setup;
  friend bool operator==(const ModelSetupMsg&, const ModelSetupMsg&) = default;
};
struct IterBeginMsg {
  std::uint32_t iteration = 0;
  std::uint8_t phase = 0;
  friend bool operator==(const IterBeginMsg&, const IterBeginMsg&) = default;
};
struct ForestHashMsg {
  std::uint64_t hash = 0;
  friend bool operator==(const ForestHashMsg&, const ForestHashMsg&) = default;
};
struct SigmaUpdateMsg {
  double sigma = 0.0;
  friend bool operator==(const SigmaUpdateMsg&, const SigmaUpdateMsg&) = default;
};
struct ShutdownMsg {
  friend bool operator==(const ShutdownMsg&, const ShutdownMsg&) = default;
};

using Message = std::variant<BirthProposalMsg, DeathProposalMsg, MoveStatsMsg, BirthAcceptMsg, DeathAcceptMsg,
                             RejectMsg, MuStatsMsg, MuValuesMsg, RssPartialMsg, HelloMsg, ShardMetaMsg,
                             ModelSetupMsg, IterBeginMsg, ForestHashMsg, SigmaUpdateMsg, ShutdownMsg>;

Opcode opcode_of(const Message& msg);
const char* name_of(Opcode op);
/// Table-2 payload opcodes (everything except the control plane).
bool is_sampler_opcode(Opcode op);

/// Opcode byte followed by the payload. For MuStats / MuValues,
/// `expected_records` (when given) must equal the record count.
std::vector<std::uint8_t> encode(const Message& msg, std::optional<std::size_t> expected_records = std::nullopt);

/// Inverse of encode. Throws ProtocolError on an unknown opcode or on any
/// length mismatch (missing or trailing bytes).
Message decode(std::span<const std::uint8_t> bytes, std::optional<std::size_t> expected_records = std::nullopt);

/// Payload size of a message (wire bytes minus the opcode byte).
std::size_t payload_size(const Message& msg);

/// Sampler-side helpers.
MoveStatsMsg to_wire(const MoveStats& stats);
MoveStats from_wire(const MoveStatsMsg& msg);
MuStatsMsg to_wire(const std::vector<SuffStats>& stats);
std::vector<SuffStats> from_wire(const MuStatsMsg& msg);

/// What happened to one tree in one iteration, for byte accounting.
struct TreeTrace {
  Move move = Move::None;  // None = null proposal
  bool accepted = false;
  std::uint32_t leaves_after = 1;  // b_j after the structural step
};

/// Exact Table-2 payload bytes exchanged between the master and all workers
/// in one iteration (both directions, control plane excluded).
std::uint64_t iteration_byte_count(std::span<const TreeTrace> trace, std::size_t workers);

}  // namespace pbart::protocol
