#include "pbart/cluster/transport.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>

#include "pbart/error.hpp"

namespace pbart {

void send_message(Channel& ch, const protocol::Message& msg, std::optional<std::size_t> expected_records) {
  const auto bytes = protocol::encode(msg, expected_records);
  ch.send(bytes);
}

protocol::Message receive_message(Channel& ch, std::optional<std::size_t> expected_records) {
  const auto bytes = ch.receive();
  return protocol::decode(bytes, expected_records);
}

namespace {

struct Queue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> items;
  bool closed = false;
};

class InProcessChannel final : public Channel {
 public:
  InProcessChannel(std::shared_ptr<Queue> out, std::shared_ptr<Queue> in) : out_(std::move(out)), in_(std::move(in)) {}
  ~InProcessChannel() override {
    for (auto* q : {out_.get(), in_.get()}) {
      std::lock_guard lock(q->mu);
      q->closed = true;
      q->cv.notify_all();
    }
  }

  void send(std::span<const std::uint8_t> message) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw TransportError("peer disconnected");
    out_->items.emplace_back(message.begin(), message.end());
    out_->cv.notify_one();
  }

  std::vector<std::uint8_t> receive() override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->items.empty() || in_->closed; });
    if (in_->items.empty()) throw TransportError("peer disconnected");
    auto msg = std::move(in_->items.front());
    in_->items.pop_front();
    return msg;
  }

 private:
  std::shared_ptr<Queue> out_;
  std::shared_ptr<Queue> in_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inprocess_pair() {
  auto a_to_b = std::make_shared<Queue>();
  auto b_to_a = std::make_shared<Queue>();
  return {std::make_unique<InProcessChannel>(a_to_b, b_to_a), std::make_unique<InProcessChannel>(b_to_a, a_to_b)};
}

std::uint64_t ByteCounters::payload_bytes(protocol::Opcode op) const {
  const auto i = static_cast<std::size_t>(op);
  // Each message's opcode byte is excluded.
  return sent_bytes[i] - sent_messages[i] + received_bytes[i] - received_messages[i];
}

std::uint64_t ByteCounters::sampler_payload_bytes() const {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    if (protocol::is_sampler_opcode(static_cast<protocol::Opcode>(i))) {
      total += payload_bytes(static_cast<protocol::Opcode>(i));
    }
  }
  return total;
}

void ByteCounters::reset() {
  for (std::size_t i = 0; i < 256; ++i) {
    sent_bytes[i] = 0;
    sent_messages[i] = 0;
    received_bytes[i] = 0;
    received_messages[i] = 0;
  }
}

CountingChannel::CountingChannel(std::unique_ptr<Channel> inner, std::shared_ptr<ByteCounters> counters,
                                 bool keep_trace)
    : inner_(std::move(inner)), counters_(std::move(counters)), keep_trace_(keep_trace) {}

void CountingChannel::send(std::span<const std::uint8_t> message) {
  if (!message.empty()) {
    counters_->sent_bytes[message[0]] += message.size();
    counters_->sent_messages[message[0]] += 1;
  }
  if (keep_trace_) sent_trace_.emplace_back(message.begin(), message.end());
  inner_->send(message);
}

std::vector<std::uint8_t> CountingChannel::receive() {
  auto msg = inner_->receive();
  if (!msg.empty()) {
    counters_->received_bytes[msg[0]] += msg.size();
    counters_->received_messages[msg[0]] += 1;
  }
  return msg;
}

}  // namespace pbart
