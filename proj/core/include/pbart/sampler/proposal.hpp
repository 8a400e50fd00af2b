#pragma once

#include <cstddef>
#include <cstdint>

#include "pbart/rng.hpp"
#include "pbart/sampler/conjugate.hpp"
#include "pbart/sampler/prior.hpp"
#include "pbart/tree.hpp"

namespace pbart {

enum class Move : std::uint8_t { None, Birth, Death };

/// A structural move on one tree plus the counts its acceptance ratio needs.
/// Move::None is the null proposal (no legal rule at the chosen node), which
/// is always rejected.
struct Proposal {
  Move move = Move::None;
  std::uint32_t tree = 0;
  NodeId node = 0;  // birth: terminal node to split; death: nog node to collapse
  std::uint32_t var = 0;
  std::uint32_t cut = 0;

  int depth = 0;                 // depth of `node`
  std::size_t leaves_small = 0;  // terminal count of the tree without the split at `node`
  std::size_t nogs_large = 0;    // nog count of the tree with the split at `node`
  bool small_is_single = false;  // the tree without the split is a lone root
  std::size_t vars_available = 0;
  std::size_t cuts_available = 0;

  bool is_null() const { return move == Move::None; }
};

/// Birth with probability 1 on a lone root and 1/2 otherwise. Birth picks a
/// terminal node, then a variable with at least one rule-consistent cutpoint,
/// then one of those cutpoints, all uniformly. Death picks a nog node
/// uniformly.
Proposal propose(const Tree& tree, std::uint32_t tree_index, const CutpointGrid& grid, Rng& rng);

/// Log MH ratio for the move. `stats` are the two children's statistics
/// (proposed children for a birth, dying children for a death). When
/// `use_likelihood` is false the data term is dropped (prior-only mode).
/// A birth leaving fewer than min_leaf rows in either child returns -inf.
double accept_log_ratio(const Proposal& proposal, const MoveStats& stats, double sigma, const PriorParams& prior,
                        bool use_likelihood = true);

}  // namespace pbart
