#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pbart {

/// Heap-path node code: root is 1, children of k are 2k and 2k+1.
using NodeId = std::uint32_t;

/// Node ids must fit in 31 bits, so no node may sit deeper than this.
inline constexpr int kMaxDepth = 30;

inline constexpr NodeId parent_id(NodeId id) { return id / 2; }
inline constexpr NodeId left_id(NodeId id) { return 2 * id; }
inline constexpr NodeId right_id(NodeId id) { return 2 * id + 1; }
int depth_of(NodeId id);

/// Equally spaced values strictly inside (lo, hi); a single value when lo == hi.
std::vector<double> cutpoints_between(double lo, double hi, int numcut);

/// Cutpoints for one input column. Throws Error("empty variable") on an
/// empty column.
std::vector<double> build_cutpoints(std::span<const double> column, int numcut);

/// Per-variable sorted cutpoint lists. A rule (v, c) means "go left iff
/// x[v] < value(v, c)".
class CutpointGrid {
 public:
  CutpointGrid() = default;
  explicit CutpointGrid(std::vector<std::vector<double>> cuts);

  std::size_t num_variables() const { return cuts_.size(); }
  std::uint32_t count(std::size_t v) const { return static_cast<std::uint32_t>(cuts_[v].size()); }
  double value(std::size_t v, std::uint32_t c) const { return cuts_[v][c]; }
  const std::vector<double>& cutpoints(std::size_t v) const { return cuts_[v]; }

  friend bool operator==(const CutpointGrid&, const CutpointGrid&) = default;

 private:
  std::vector<std::vector<double>> cuts_;
};

/// Six-member tree node: mu, (v, c), parent and two children; the id is the
/// heap-path code used on the wire.
struct TreeNode {
  double mu = 0.0;
  std::uint32_t var = 0;
  std::uint32_t cut = 0;
  TreeNode* parent = nullptr;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
  NodeId id = 1;

  bool is_leaf() const { return !left; }
  bool is_nog() const { return left && left->is_leaf() && right->is_leaf(); }
};

/// Parent steps to the root.
int node_depth(const TreeNode& node);

enum class NodeKind { Terminal, Nog, Internal };

/// Half-open range [lo, hi) of cutpoint indices on one variable that are
/// consistent with every ancestor rule of a node.
struct CutRange {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  std::uint32_t size() const { return hi > lo ? hi - lo : 0; }
};

class Tree {
 public:
  explicit Tree(double mu = 0.0);
  Tree(const Tree& other);
  Tree& operator=(const Tree& other);
  Tree(Tree&&) noexcept = default;
  Tree& operator=(Tree&&) noexcept = default;
  ~Tree() = default;

  const TreeNode& root() const { return *root_; }
  TreeNode& root() { return *root_; }
  bool is_single() const { return root_->is_leaf(); }

  /// Node with the given id, or nullptr. Walks the id's path bits.
  const TreeNode* find(NodeId id) const;
  TreeNode* find(NodeId id);

  /// Nodes of one kind, ascending by id.
  std::vector<const TreeNode*> nodes(NodeKind kind) const;
  std::vector<TreeNode*> nodes(NodeKind kind);
  std::size_t leaf_count() const;
  std::size_t nog_count() const;
  std::size_t node_count() const;

  /// Turns terminal node `id` into an internal node with rule (v, c).
  void split(NodeId id, std::uint32_t var, std::uint32_t cut, double mu_left, double mu_right);
  /// Removes both (terminal) children of nog node `id`, making it terminal.
  void collapse(NodeId id, double mu);

  /// Cutpoints on `var` still reachable at `node` given its ancestors' rules.
  CutRange rule_range(const TreeNode& node, std::uint32_t var, const CutpointGrid& grid) const;

  const TreeNode& leaf_for(std::span<const double> x, const CutpointGrid& grid) const;
  double evaluate(std::span<const double> x, const CutpointGrid& grid) const {
    return leaf_for(x, grid).mu;
  }

  /// Preorder lines: "i <id> <v> <c>" for internal nodes, "l <id> <mu>" for
  /// terminal nodes, mu at shortest round-trip precision.
  void write(std::ostream& os) const;
  std::vector<std::string> to_lines() const;
  /// Parses the preorder form produced by to_lines; throws ParseError.
  static Tree from_lines(std::span<const std::string> lines);

  bool same_structure(const Tree& other) const;
  friend bool operator==(const Tree& a, const Tree& b);

 private:
  std::unique_ptr<TreeNode> root_;
};

double evaluate(const Tree& tree, const CutpointGrid& grid, std::span<const double> x);
std::vector<const TreeNode*> enumerate_nodes(const Tree& tree, NodeKind kind);

using Forest = std::vector<Tree>;

/// FNV-1a over the serialized form; used to check replica coherence.
std::uint64_t forest_hash(const Forest& forest);

/// Array-packed copy of a tree for fast row routing. Terminal nodes are
/// numbered 0..b-1 in ascending id order ("slots").
class FlatTree {
 public:
  FlatTree() = default;
  FlatTree(const Tree& tree, const CutpointGrid& grid);

  std::uint32_t slot(const double* x) const {
    const Entry* e = entries_.data();
    while (e->var != kLeaf) {
      e = entries_.data() + (x[e->var] < e->threshold ? e->left : e->right);
    }
    return e->left;
  }
  double evaluate(const double* x) const { return mus_[slot(x)]; }

  std::size_t leaf_count() const { return mus_.size(); }
  const std::vector<double>& leaf_values() const { return mus_; }
  const std::vector<NodeId>& leaf_ids() const { return leaf_ids_; }

 private:
  static constexpr std::uint32_t kLeaf = 0xFFFFFFFFu;
  struct Entry {
    double threshold;
    std::uint32_t var;
    std::uint32_t left;  // slot index for leaves
    std::uint32_t right;
  };
  std::vector<Entry> entries_;
  std::vector<double> mus_;
  std::vector<NodeId> leaf_ids_;
};

}  // namespace pbart
