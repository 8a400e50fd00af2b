#include "pbart/sampler/proposal.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace pbart {

namespace {

constexpr double kBirthProb = 0.5;  // when the tree has more than one node

}  // namespace

Proposal propose(const Tree& tree, std::uint32_t tree_index, const CutpointGrid& grid, Rng& rng) {
  Proposal p;
  p.tree = tree_index;
  const bool single = tree.is_single();
  const bool birth = single || rng.uniform() < kBirthProb;

  if (birth) {
    auto leaves = tree.nodes(NodeKind::Terminal);
    const TreeNode& node = *leaves[rng.index(leaves.size())];
    p.node = node.id;
    p.depth = depth_of(node.id);
    if (p.depth >= kMaxDepth) return p;

    std::vector<std::uint32_t> vars;
    std::vector<CutRange> ranges;
    for (std::uint32_t v = 0; v < grid.num_variables(); ++v) {
      auto r = tree.rule_range(node, v, grid);
      if (r.size() > 0) {
        vars.push_back(v);
        ranges.push_back(r);
      }
    }
    if (vars.empty()) return p;

    const std::size_t pick = rng.index(vars.size());
    p.var = vars[pick];
    p.cut = ranges[pick].lo + static_cast<std::uint32_t>(rng.index(ranges[pick].size()));
    p.vars_available = vars.size();
    p.cuts_available = ranges[pick].size();

    p.move = Move::Birth;
    p.leaves_small = leaves.size();
    p.small_is_single = single;
    // The split node becomes a nog; its parent stops being one if it was.
    std::size_t nogs = tree.nog_count() + 1;
    if (node.parent != nullptr && node.parent->is_nog()) --nogs;
    p.nogs_large = nogs;
    return p;
  }

  auto nogs = tree.nodes(NodeKind::Nog);
  const TreeNode& node = *nogs[rng.index(nogs.size())];
  p.move = Move::Death;
  p.node = node.id;
  p.depth = depth_of(node.id);
  p.leaves_small = tree.leaf_count() - 1;
  p.nogs_large = nogs.size();
  p.small_is_single = node.parent == nullptr;
  return p;
}

double accept_log_ratio(const Proposal& p, const MoveStats& stats, double sigma, const PriorParams& prior,
                        bool use_likelihood) {
  if (p.is_null()) return -std::numeric_limits<double>::infinity();
  if (p.move == Move::Birth && std::min(stats.left.n, stats.right.n) < prior.min_leaf) {
    return -std::numeric_limits<double>::infinity();
  }

  const double ps = split_prior_prob(p.depth, prior.alpha, prior.beta);
  const double ps_child = split_prior_prob(p.depth + 1, prior.alpha, prior.beta);
  const double birth_prob_small = p.small_is_single ? 1.0 : kBirthProb;
  const double death_prob_large = 1.0 - kBirthProb;

  // Grow ratio from the small tree to the large tree; the uniform rule prior
  // cancels against the uniform rule proposal.
  double log_ratio = std::log(ps) + 2.0 * std::log1p(-ps_child) - std::log1p(-ps) +
                     std::log(death_prob_large * static_cast<double>(p.leaves_small)) -
                     std::log(birth_prob_small * static_cast<double>(p.nogs_large));
  if (use_likelihood) {
    log_ratio += log_marginal_likelihood(stats.left, sigma, prior.tau) +
                 log_marginal_likelihood(stats.right, sigma, prior.tau) -
                 log_marginal_likelihood(stats.merged(), sigma, prior.tau);
  }
  return p.move == Move::Birth ? log_ratio : -log_ratio;
}

}  // namespace pbart
