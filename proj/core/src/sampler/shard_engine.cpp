#include "pbart/sampler/shard_engine.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "pbart/cluster/sharding.hpp"
#include "pbart/error.hpp"

namespace pbart {

CutpointGrid ModelSetup::grid() const {
  if (x_min.size() != x_max.size()) throw Error("model setup has mismatched variable ranges");
  std::vector<std::vector<double>> cuts;
  cuts.reserve(x_min.size());
  for (std::size_t v = 0; v < x_min.size(); ++v) {
    cuts.push_back(cutpoints_between(x_min[v], x_max[v], static_cast<int>(numcut)));
  }
  return CutpointGrid(std::move(cuts));
}

ShardEngine::ShardEngine(Dataset data, std::vector<std::size_t> block_sizes)
    : data_(std::move(data)), block_sizes_(std::move(block_sizes)) {
  if (block_sizes_.empty()) throw Error("shard needs at least one reduction block");
  std::size_t start = 0;
  for (std::size_t s : block_sizes_) {
    if (s == 0) throw Error("empty reduction block");
    block_starts_.push_back(start);
    start += s;
  }
  if (start != data_.rows()) throw Error("reduction blocks do not cover the shard");
  if (data_.y.size() != data_.rows()) throw Error("response length does not match the inputs");
}

ShardEngine ShardEngine::with_blocks(Dataset data, std::size_t blocks) {
  auto sizes = split_sizes(data.rows(), blocks);
  return ShardEngine(std::move(data), std::move(sizes));
}

template <class Acc, class RowFn>
std::vector<Acc> ShardEngine::per_block(const Acc& zero, RowFn&& fn) const {
  std::vector<Acc> out(block_sizes_.size(), zero);
  for (std::size_t b = 0; b < block_sizes_.size(); ++b) {
    Acc& acc = out[b];
    const std::size_t end = block_starts_[b] + block_sizes_[b];
    for (std::size_t i = block_starts_[b]; i < end; ++i) fn(i, acc);
  }
  return out;
}

DataSummary ShardEngine::summarize() {
  std::vector<DataSummary> parts;
  parts.reserve(block_sizes_.size());
  for (std::size_t b = 0; b < block_sizes_.size(); ++b) {
    parts.push_back(DataSummary::of(data_, block_starts_[b], block_starts_[b] + block_sizes_[b]));
  }
  return pairwise_reduce<DataSummary>(parts, DataSummary::combine);
}

void ShardEngine::setup(const ModelSetup& setup) {
  if (setup.x_min.size() != data_.cols()) throw Error("model setup dimension does not match the shard");
  grid_ = setup.grid();
  forest_.assign(setup.m, Tree(0.0));
  const std::size_t n = rows();
  y_.resize(n);
  for (std::size_t i = 0; i < n; ++i) y_[i] = setup.scaling.to_model(data_.y[i]);
  fit_.assign(n, 0.0);
  residual_ = y_;
  side_.assign(n, 0);
  slot_.assign(n, 0);
  has_pending_ = false;
}

MoveStats ShardEngine::move_stats(const Proposal& p) {
  if (p.is_null()) throw Error("move_stats called with a null proposal");
  if (p.tree >= forest_.size()) throw ProtocolError("proposal names tree " + std::to_string(p.tree) + " out of range");
  const Tree& tree = forest_[p.tree];
  const FlatTree flat(tree, grid_);
  const auto& ids = flat.leaf_ids();
  const auto& mus = flat.leaf_values();
  auto slot_of = [&](NodeId id) -> std::uint32_t {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) throw ProtocolError("proposal names node " + std::to_string(id) + " which is not terminal");
    return static_cast<std::uint32_t>(it - ids.begin());
  };
  const std::size_t d = data_.cols();
  const double* x = data_.x.data.data();
  std::vector<MoveStats> blocks;

  if (p.move == Move::Birth) {
    const std::uint32_t target = slot_of(p.node);
    if (p.var >= grid_.num_variables() || p.cut >= grid_.count(p.var)) throw ProtocolError("birth rule out of range");
    const double threshold = grid_.value(p.var, p.cut);
    const double mu = mus[target];
    blocks = per_block(MoveStats{}, [&](std::size_t i, MoveStats& acc) {
      const double* row = x + i * d;
      if (flat.slot(row) != target) {
        side_[i] = 0;
        return;
      }
      const double r = residual_[i] + mu;
      if (row[p.var] < threshold) {
        side_[i] = 1;
        acc.left.add(r);
      } else {
        side_[i] = 2;
        acc.right.add(r);
      }
    });
  } else {
    const TreeNode* nog = tree.find(p.node);
    if (nog == nullptr || !nog->is_nog()) throw ProtocolError("death names node " + std::to_string(p.node) + " which is not a nog node");
    const std::uint32_t ls = slot_of(left_id(p.node));
    const std::uint32_t rs = slot_of(right_id(p.node));
    blocks = per_block(MoveStats{}, [&](std::size_t i, MoveStats& acc) {
      const std::uint32_t s = flat.slot(x + i * d);
      if (s == ls) {
        side_[i] = 1;
        acc.left.add(residual_[i] + mus[s]);
      } else if (s == rs) {
        side_[i] = 2;
        acc.right.add(residual_[i] + mus[s]);
      } else {
        side_[i] = 0;
      }
    });
  }
  pending_ = p;
  has_pending_ = true;
  return pairwise_reduce<MoveStats>(blocks, [](const MoveStats& a, const MoveStats& b) { return a + b; });
}

void ShardEngine::accept_birth(std::uint32_t tree, NodeId node, std::uint32_t var, std::uint32_t cut, double mu_left,
                               double mu_right) {
  if (!has_pending_ || pending_.move != Move::Birth || pending_.tree != tree || pending_.node != node ||
      pending_.var != var || pending_.cut != cut) {
    throw ProtocolError("birth accept does not match the pending proposal");
  }
  const double old_mu = forest_[tree].find(node)->mu;
  forest_[tree].split(node, var, cut, mu_left, mu_right);
  const double dl = mu_left - old_mu;
  const double dr = mu_right - old_mu;
  for (std::size_t i = 0; i < rows(); ++i) {
    if (side_[i] == 0) continue;
    const double delta = side_[i] == 1 ? dl : dr;
    fit_[i] += delta;
    residual_[i] -= delta;
  }
  has_pending_ = false;
}

void ShardEngine::accept_death(std::uint32_t tree, NodeId node, double mu) {
  if (!has_pending_ || pending_.move != Move::Death || pending_.tree != tree || pending_.node != node) {
    throw ProtocolError("death accept does not match the pending proposal");
  }
  TreeNode* nog = forest_[tree].find(node);
  const double dl = mu - nog->left->mu;
  const double dr = mu - nog->right->mu;
  forest_[tree].collapse(node, mu);
  for (std::size_t i = 0; i < rows(); ++i) {
    if (side_[i] == 0) continue;
    const double delta = side_[i] == 1 ? dl : dr;
    fit_[i] += delta;
    residual_[i] -= delta;
  }
  has_pending_ = false;
}

void ShardEngine::reject(std::uint32_t /*tree*/) { has_pending_ = false; }

std::vector<SuffStats> ShardEngine::leaf_stats(std::uint32_t tree) {
  if (tree >= forest_.size()) throw ProtocolError("leaf stats requested for tree out of range");
  const FlatTree flat(forest_[tree], grid_);
  slot_mus_ = flat.leaf_values();
  slot_tree_ = tree;
  const std::size_t d = data_.cols();
  const double* x = data_.x.data.data();
  const std::size_t b = flat.leaf_count();
  auto blocks = per_block(std::vector<SuffStats>(b), [&](std::size_t i, std::vector<SuffStats>& acc) {
    const std::uint32_t s = flat.slot(x + i * d);
    slot_[i] = s;
    acc[s].add(residual_[i] + slot_mus_[s]);
  });
  return pairwise_reduce<std::vector<SuffStats>>(blocks, [](const std::vector<SuffStats>& l, const std::vector<SuffStats>& r) {
    std::vector<SuffStats> out(l.size());
    for (std::size_t k = 0; k < l.size(); ++k) out[k] = l[k] + r[k];
    return out;
  });
}

void ShardEngine::set_leaf_values(std::uint32_t tree, std::span<const double> mus) {
  if (tree != slot_tree_ || mus.size() != slot_mus_.size()) {
    throw ProtocolError("leaf values do not match the last leaf statistics pass");
  }
  std::vector<double> delta(mus.size());
  for (std::size_t k = 0; k < mus.size(); ++k) delta[k] = mus[k] - slot_mus_[k];
  auto leaves = forest_[tree].nodes(NodeKind::Terminal);
  for (std::size_t k = 0; k < leaves.size(); ++k) leaves[k]->mu = mus[k];
  for (std::size_t i = 0; i < rows(); ++i) {
    const double dlt = delta[slot_[i]];
    fit_[i] += dlt;
    residual_[i] -= dlt;
  }
}

double ShardEngine::rss() {
  auto blocks = per_block(0.0, [&](std::size_t i, double& acc) { acc += residual_[i] * residual_[i]; });
  return pairwise_reduce<double>(blocks, [](double a, double b) { return a + b; });
}

}  // namespace pbart
