#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbart/protocol.hpp"

namespace pbart {

/// Ordered, reliable, point-to-point duplex channel carrying whole encoded
/// messages. receive() blocks; it throws TransportError once the peer is
/// gone and nothing is left to read.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(std::span<const std::uint8_t> message) = 0;
  virtual std::vector<std::uint8_t> receive() = 0;
};

void send_message(Channel& ch, const protocol::Message& msg, std::optional<std::size_t> expected_records = std::nullopt);
protocol::Message receive_message(Channel& ch, std::optional<std::size_t> expected_records = std::nullopt);

/// Two connected in-process endpoints (FIFO queues guarded by a mutex).
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inprocess_pair();

/// Per-opcode byte tallies. Counters are atomics so a test thread can read
/// them while a run is in progress.
struct ByteCounters {
  std::array<std::atomic<std::uint64_t>, 256> sent_bytes{};
  std::array<std::atomic<std::uint64_t>, 256> sent_messages{};
  std::array<std::atomic<std::uint64_t>, 256> received_bytes{};
  std::array<std::atomic<std::uint64_t>, 256> received_messages{};

  /// Payload bytes (opcode byte excluded) of Table-2 opcodes, both directions.
  std::uint64_t sampler_payload_bytes() const;
  std::uint64_t payload_bytes(protocol::Opcode op) const;
  void reset();
};

/// Decorator that counts what passes through another channel. Also keeps an
/// optional verbatim trace of received frames.
class CountingChannel final : public Channel {
 public:
  CountingChannel(std::unique_ptr<Channel> inner, std::shared_ptr<ByteCounters> counters, bool keep_trace = false);
  void send(std::span<const std::uint8_t> message) override;
  std::vector<std::uint8_t> receive() override;

  const std::vector<std::vector<std::uint8_t>>& sent_trace() const { return sent_trace_; }

 private:
  std::unique_ptr<Channel> inner_;
  std::shared_ptr<ByteCounters> counters_;
  bool keep_trace_;
  std::vector<std::vector<std::uint8_t>> sent_trace_;
};

/// TCP stream transport. Each message travels as a u32 little-endian length
/// followed by the encoded message.
class TcpListener {
 public:
  /// `address` is "host:port"; port 0 picks a free port.
  explicit TcpListener(const std::string& address);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<Channel> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Connects to "host:port", retrying for up to `timeout_ms`.
std::unique_ptr<Channel> tcp_connect(const std::string& address, int timeout_ms = 10000);

}  // namespace pbart
