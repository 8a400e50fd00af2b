#include "pbart/cluster/worker.hpp"

#include <string>

#include "pbart/error.hpp"

namespace pbart {

using namespace protocol;

namespace {

[[noreturn]] void unexpected(const Message& msg, const char* state) {
  throw ProtocolError(std::string("unexpected ") + name_of(opcode_of(msg)) + " while " + state);
}

}  // namespace

std::size_t run_worker(std::size_t rank, ShardEngine& engine, Channel& channel) {
  send_message(channel, HelloMsg{kVersion, static_cast<std::uint32_t>(rank), engine.rows()});
  send_message(channel, ShardMetaMsg{engine.summarize()});

  std::uint32_t cursor = 0;  // tree the next proposal refers to
  std::size_t iterations = 0;
  bool ready = false;

  for (;;) {
    Message msg = receive_message(channel);

    if (std::holds_alternative<ShutdownMsg>(msg)) return iterations;
    if (const auto* s = std::get_if<ModelSetupMsg>(&msg)) {
      engine.setup(s->setup);
      ready = true;
      continue;
    }
    if (!ready) unexpected(msg, "waiting for MODEL_SETUP");

    if (const auto* it = std::get_if<IterBeginMsg>(&msg)) {
      if (it->phase == 0) {
        cursor = 0;
        ++iterations;
      } else if (it->phase == 1) {
        send_message(channel, RssPartialMsg{engine.rss()});
      } else {
        throw ProtocolError("ITER_BEGIN with unknown phase " + std::to_string(it->phase));
      }
      continue;
    }
    if (std::holds_alternative<ForestHashMsg>(msg)) {
      send_message(channel, ForestHashMsg{forest_hash(engine.forest())});
      continue;
    }
    // Sigma never enters a worker computation; the update only exists so
    // debug runs can log it.
    if (std::holds_alternative<SigmaUpdateMsg>(msg)) continue;

    // Tree step: a proposal, or a bare REJECT for a null proposal.
    if (cursor >= engine.forest().size()) unexpected(msg, "all trees of the iteration are done");
    const std::uint32_t tree = cursor;
    if (std::holds_alternative<RejectMsg>(msg)) {
      engine.reject(tree);
    } else {
      Proposal p;
      p.tree = tree;
      if (const auto* b = std::get_if<BirthProposalMsg>(&msg)) {
        p.move = Move::Birth;
        p.node = b->node;
        p.var = b->var;
        p.cut = b->cut;
      } else if (const auto* d = std::get_if<DeathProposalMsg>(&msg)) {
        if (d->left < 2 || d->right != d->left + 1 || d->left % 2 != 0) {
          throw ProtocolError("DEATH_PROPOSAL children are not siblings");
        }
        p.move = Move::Death;
        p.node = parent_id(d->left);
      } else {
        unexpected(msg, "waiting for a proposal");
      }
      send_message(channel, to_wire(engine.move_stats(p)));

      const Message decision = receive_message(channel);
      if (const auto* a = std::get_if<BirthAcceptMsg>(&decision)) {
        engine.accept_birth(tree, a->node, a->var, a->cut, a->mu_left, a->mu_right);
      } else if (const auto* a = std::get_if<DeathAcceptMsg>(&decision)) {
        engine.accept_death(tree, a->node, a->mu);
      } else if (std::holds_alternative<RejectMsg>(decision)) {
        engine.reject(tree);
      } else {
        unexpected(decision, "waiting for the move decision");
      }
    }

    const auto stats = engine.leaf_stats(tree);
    send_message(channel, to_wire(stats), stats.size());
    const Message values = receive_message(channel, stats.size());
    const auto* mv = std::get_if<MuValuesMsg>(&values);
    if (mv == nullptr) unexpected(values, "waiting for MU_VALUES");
    engine.set_leaf_values(tree, mv->values);
    ++cursor;
  }
}

}  // namespace pbart
