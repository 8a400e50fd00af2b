#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pbart/error.hpp"
#include "pbart/tree.hpp"
#include "support.hpp"

using namespace pbart;
using pbart::testing::random_tree;
using pbart::testing::uniform_grid;

namespace {

// Independent router: recursive descent over the node structure.
double descend(const TreeNode& node, const CutpointGrid& grid, std::span<const double> x) {
  if (!node.left) return node.mu;
  return x[node.var] < grid.value(node.var, node.cut) ? descend(*node.left, grid, x) : descend(*node.right, grid, x);
}

std::size_t count_kind(const TreeNode& node, NodeKind kind) {
  std::size_t here = 0;
  if (kind == NodeKind::Terminal && !node.left) here = 1;
  if (kind == NodeKind::Internal && node.left) here = 1;
  if (kind == NodeKind::Nog && node.left && !node.left->left && !node.right->left) here = 1;
  if (!node.left) return here;
  return here + count_kind(*node.left, kind) + count_kind(*node.right, kind);
}

}  // namespace

TEST(Cutpoints, EqualSpacingInsideRange) {
  const std::vector<double> col{0.0, 1.0, 0.3};
  EXPECT_EQ(build_cutpoints(col, 3), (std::vector<double>{0.25, 0.5, 0.75}));
}

TEST(Cutpoints, ConstantColumnGivesSingleCut) {
  const std::vector<double> col{2.0, 2.0, 2.0};
  EXPECT_EQ(build_cutpoints(col, 100), std::vector<double>{2.0});
}

TEST(Cutpoints, EmptyColumnThrows) {
  const std::vector<double> col;
  EXPECT_THROW(
      {
        try {
          build_cutpoints(col, 10);
        } catch (const Error& e) {
          EXPECT_NE(std::string(e.what()).find("empty variable"), std::string::npos);
          throw;
        }
      },
      Error);
}

TEST(Cutpoints, UniformSampleMatchesLinspace) {
  Rng rng(11);
  std::vector<double> col(1000);
  for (auto& v : col) v = rng.uniform(-1.0, 1.0);
  const double lo = *std::min_element(col.begin(), col.end());
  const double hi = *std::max_element(col.begin(), col.end());
  const auto cuts = build_cutpoints(col, 100);
  ASSERT_EQ(cuts.size(), 100u);
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    EXPECT_GT(cuts[k], lo);
    EXPECT_LT(cuts[k], hi);
    if (k > 0) EXPECT_LT(cuts[k - 1], cuts[k]);
    const double direct = lo + (hi - lo) * static_cast<double>(k + 1) / 101.0;
    EXPECT_NEAR(cuts[k], direct, 1e-12);
  }
}

TEST(Cutpoints, GridRejectsUnsortedOrEmpty) {
  EXPECT_THROW(CutpointGrid(std::vector<std::vector<double>>{{0.5, 0.2}}), Error);
  EXPECT_THROW(CutpointGrid(std::vector<std::vector<double>>{{}}), Error);
}

TEST(NodeIds, Codec) {
  for (NodeId id = 1; id < 5000; ++id) {
    EXPECT_EQ(parent_id(left_id(id)), id);
    EXPECT_EQ(parent_id(right_id(id)), id);
    EXPECT_EQ(depth_of(id), static_cast<int>(std::floor(std::log2(static_cast<double>(id)))));
  }
  EXPECT_EQ(depth_of(1), 0);
  EXPECT_EQ(depth_of(5), 2);
}

TEST(TreeEval, SingleNode) {
  const Tree t(7.5);
  const auto grid = uniform_grid(3, 10);
  const std::vector<double> x{0.1, -0.4, 0.9};
  EXPECT_EQ(t.evaluate(x, grid), 7.5);
}

TEST(TreeEval, DepthOneRuleGoesLeft) {
  const CutpointGrid grid({{-0.5, 0.0, 0.5}});
  Tree t(0.0);
  t.split(1, 0, 1, -1.0, 1.0);
  const std::vector<double> x{-0.3};
  EXPECT_EQ(t.evaluate(x, grid), -1.0);
  const std::vector<double> at{0.0};
  EXPECT_EQ(t.evaluate(at, grid), 1.0);  // not strictly less
}

TEST(TreeEval, MatchesRecursiveOracleAndFlatTree) {
  Rng rng(3);
  const auto grid = uniform_grid(4, 20);
  for (int rep = 0; rep < 20; ++rep) {
    const Tree t = random_tree(12, grid, rng, 4);
    const FlatTree flat(t, grid);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(4);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      const double expect = descend(t.root(), grid, x);
      EXPECT_EQ(t.evaluate(x, grid), expect);
      EXPECT_EQ(flat.evaluate(x.data()), expect);
    }
  }
}

TEST(TreeNodes, SingleNodeLists) {
  const Tree t(1.0);
  ASSERT_EQ(t.nodes(NodeKind::Terminal).size(), 1u);
  EXPECT_EQ(t.nodes(NodeKind::Terminal)[0]->id, 1u);
  EXPECT_TRUE(t.nodes(NodeKind::Nog).empty());
  EXPECT_TRUE(t.nodes(NodeKind::Internal).empty());
}

TEST(TreeNodes, CountsAgreeWithWalkAndAreSorted) {
  Rng rng(5);
  const auto grid = uniform_grid(3, 50);
  for (int rep = 0; rep < 30; ++rep) {
    const Tree t = random_tree(7, grid, rng);
    for (auto kind : {NodeKind::Terminal, NodeKind::Nog, NodeKind::Internal}) {
      const auto list = t.nodes(kind);
      EXPECT_EQ(list.size(), count_kind(t.root(), kind));
      for (std::size_t i = 1; i < list.size(); ++i) EXPECT_LT(list[i - 1]->id, list[i]->id);
    }
    const std::size_t b = t.leaf_count();
    EXPECT_EQ(t.nodes(NodeKind::Internal).size() + 1, b);
    EXPECT_EQ(t.node_count(), 2 * b - 1);
  }
}

TEST(TreeNodes, DepthByParentWalkMatchesIdArithmetic) {
  Rng rng(8);
  const auto grid = uniform_grid(2, 100);
  int checked = 0;
  while (checked < 50) {
    const Tree t = random_tree(10, grid, rng);
    for (const TreeNode* n : t.nodes(NodeKind::Terminal)) {
      EXPECT_EQ(node_depth(*n), static_cast<int>(std::floor(std::log2(static_cast<double>(n->id)))));
      ++checked;
    }
  }
}

TEST(TreeRules, AncestorRuleTruncatesRange) {
  const CutpointGrid grid({cutpoints_between(0.0, 1.0, 100)});
  Tree t(0.0);
  t.split(1, 0, 50, 0.0, 0.0);
  const CutRange left = t.rule_range(*t.find(2), 0, grid);
  EXPECT_EQ(left.lo, 0u);
  EXPECT_EQ(left.hi, 50u);
  const CutRange right = t.rule_range(*t.find(3), 0, grid);
  EXPECT_EQ(right.lo, 51u);
  EXPECT_EQ(right.hi, 100u);
}

TEST(TreeRules, EveryPointReachesExactlyOneLeaf) {
  Rng rng(9);
  const auto grid = uniform_grid(3, 8);
  const Tree t = random_tree(15, grid, rng);
  const FlatTree flat(t, grid);
  std::vector<int> hits(t.leaf_count(), 0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> x(3);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto slot = flat.slot(x.data());
    ASSERT_LT(slot, hits.size());
    EXPECT_EQ(flat.leaf_ids()[slot], t.leaf_for(x, grid).id);
  }
}

TEST(TreeMoves, BirthThenDeathRestoresStructure) {
  Rng rng(10);
  const auto grid = uniform_grid(3, 20);
  for (int rep = 0; rep < 50; ++rep) {
    Tree t = random_tree(5, grid, rng);
    const Tree before = t;
    const auto leaves = t.nodes(NodeKind::Terminal);
    const NodeId id = leaves[rng.index(leaves.size())]->id;
    const CutRange r = t.rule_range(*t.find(id), 0, grid);
    if (r.size() == 0) continue;
    t.split(id, 0, r.lo, 1.0, 2.0);
    EXPECT_FALSE(t.same_structure(before));
    t.collapse(id, 3.0);
    EXPECT_TRUE(t.same_structure(before));
  }
}

TEST(TreeText, RoundTrip) {
  Rng rng(12);
  const auto grid = uniform_grid(4, 30);
  for (int rep = 0; rep < 30; ++rep) {
    const Tree t = random_tree(rng.index(12), grid, rng);
    const auto lines = t.to_lines();
    const Tree back = Tree::from_lines(lines);
    EXPECT_TRUE(back == t);
    std::ostringstream a;
    back.write(a);
    std::ostringstream b;
    t.write(b);
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(TreeText, MalformedLinesThrow) {
  EXPECT_THROW(Tree::from_lines(std::vector<std::string>{"i 1 0 3", "l 2 0.5"}), ParseError);
  EXPECT_THROW(Tree::from_lines(std::vector<std::string>{"l 2 0.5"}), ParseError);
  EXPECT_THROW(Tree::from_lines(std::vector<std::string>{"l 1 zz"}), ParseError);
}

TEST(ForestHash, SensitiveToLeafValues) {
  Forest f{Tree(1.0), Tree(2.0)};
  const auto h = forest_hash(f);
  EXPECT_EQ(h, forest_hash(Forest{Tree(1.0), Tree(2.0)}));
  f[1].root().mu = 2.0000000000000004;
  EXPECT_NE(h, forest_hash(f));
}
