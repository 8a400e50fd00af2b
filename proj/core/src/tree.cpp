#include "pbart/tree.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <ostream>

#include "pbart/error.hpp"
#include "pbart/text.hpp"

namespace pbart {

namespace text {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc() && res.ptr == token.data() + token.size() && std::isfinite(out);
}

bool parse_uint(std::string_view token, unsigned long long& out) {
  if (token.empty()) return false;
  auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc() && res.ptr == token.data() + token.size();
}

bool parse_int(std::string_view token, long long& out) {
  if (token.empty()) return false;
  auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc() && res.ptr == token.data() + token.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace text

int depth_of(NodeId id) { return static_cast<int>(std::bit_width(id)) - 1; }

std::vector<double> cutpoints_between(double lo, double hi, int numcut) {
  if (numcut < 1) throw Error("numcut must be at least 1");
  if (!(lo < hi)) return {lo};
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(numcut));
  const double width = hi - lo;
  for (int k = 1; k <= numcut; ++k) {
    double c = lo + width * (static_cast<double>(k) / (numcut + 1));
    // Very narrow ranges can collapse neighbours or touch an endpoint.
    if (c <= lo || c >= hi) continue;
    if (!cuts.empty() && c <= cuts.back()) continue;
    cuts.push_back(c);
  }
  if (cuts.empty()) cuts.push_back(lo + 0.5 * width);
  return cuts;
}

std::vector<double> build_cutpoints(std::span<const double> column, int numcut) {
  if (column.empty()) throw Error("empty variable");
  auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  return cutpoints_between(*lo, *hi, numcut);
}

CutpointGrid::CutpointGrid(std::vector<std::vector<double>> cuts) : cuts_(std::move(cuts)) {
  for (std::size_t v = 0; v < cuts_.size(); ++v) {
    const auto& c = cuts_[v];
    if (c.empty()) throw Error("cutpoint list for variable " + std::to_string(v) + " is empty");
    for (std::size_t i = 1; i < c.size(); ++i) {
      if (!(c[i - 1] < c[i])) {
        throw Error("cutpoints for variable " + std::to_string(v) + " are not strictly increasing");
      }
    }
  }
}

int node_depth(const TreeNode& node) {
  int d = 0;
  for (const TreeNode* n = node.parent; n != nullptr; n = n->parent) ++d;
  return d;
}

namespace {

std::unique_ptr<TreeNode> clone(const TreeNode& src, TreeNode* parent) {
  auto n = std::make_unique<TreeNode>();
  n->mu = src.mu;
  n->var = src.var;
  n->cut = src.cut;
  n->id = src.id;
  n->parent = parent;
  if (!src.is_leaf()) {
    n->left = clone(*src.left, n.get());
    n->right = clone(*src.right, n.get());
  }
  return n;
}

template <class Node, class Out>
void collect(Node* n, NodeKind kind, Out& out) {
  if (n->is_leaf()) {
    if (kind == NodeKind::Terminal) out.push_back(n);
    return;
  }
  if (kind == NodeKind::Internal || (kind == NodeKind::Nog && n->is_nog())) out.push_back(n);
  collect(n->left.get(), kind, out);
  collect(n->right.get(), kind, out);
}

template <class Node>
Node* find_impl(Node* root, NodeId id) {
  if (id == 0) return nullptr;
  const int depth = depth_of(id);
  Node* n = root;
  for (int bit = depth - 1; bit >= 0; --bit) {
    if (n->is_leaf()) return nullptr;
    n = ((id >> bit) & 1u) ? n->right.get() : n->left.get();
  }
  return n;
}

void write_node(const TreeNode& n, std::vector<std::string>& out) {
  if (n.is_leaf()) {
    out.push_back("l " + std::to_string(n.id) + " " + text::format_double(n.mu));
    return;
  }
  out.push_back("i " + std::to_string(n.id) + " " + std::to_string(n.var) + " " + std::to_string(n.cut));
  write_node(*n.left, out);
  write_node(*n.right, out);
}

bool same_structure_rec(const TreeNode& a, const TreeNode& b) {
  if (a.id != b.id || a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return true;
  return a.var == b.var && a.cut == b.cut && same_structure_rec(*a.left, *b.left) &&
         same_structure_rec(*a.right, *b.right);
}

bool equal_rec(const TreeNode& a, const TreeNode& b) {
  if (a.id != b.id || a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.mu == b.mu;
  return a.var == b.var && a.cut == b.cut && equal_rec(*a.left, *b.left) && equal_rec(*a.right, *b.right);
}

}  // namespace

Tree::Tree(double mu) : root_(std::make_unique<TreeNode>()) { root_->mu = mu; }

Tree::Tree(const Tree& other) : root_(clone(*other.root_, nullptr)) {}

Tree& Tree::operator=(const Tree& other) {
  if (this != &other) root_ = clone(*other.root_, nullptr);
  return *this;
}

const TreeNode* Tree::find(NodeId id) const { return find_impl(root_.get(), id); }
TreeNode* Tree::find(NodeId id) { return find_impl(root_.get(), id); }

std::vector<const TreeNode*> Tree::nodes(NodeKind kind) const {
  std::vector<const TreeNode*> out;
  collect(static_cast<const TreeNode*>(root_.get()), kind, out);
  std::sort(out.begin(), out.end(), [](const TreeNode* a, const TreeNode* b) { return a->id < b->id; });
  return out;
}

std::vector<TreeNode*> Tree::nodes(NodeKind kind) {
  std::vector<TreeNode*> out;
  collect(root_.get(), kind, out);
  std::sort(out.begin(), out.end(), [](const TreeNode* a, const TreeNode* b) { return a->id < b->id; });
  return out;
}

std::size_t Tree::leaf_count() const {
  std::size_t count = 0;
  std::vector<const TreeNode*> stack{root_.get()};
  while (!stack.empty()) {
    const TreeNode* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      ++count;
    } else {
      stack.push_back(n->left.get());
      stack.push_back(n->right.get());
    }
  }
  return count;
}

std::size_t Tree::nog_count() const {
  std::size_t count = 0;
  std::vector<const TreeNode*> stack{root_.get()};
  while (!stack.empty()) {
    const TreeNode* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) continue;
    if (n->is_nog()) ++count;
    stack.push_back(n->left.get());
    stack.push_back(n->right.get());
  }
  return count;
}

std::size_t Tree::node_count() const { return 2 * leaf_count() - 1; }

void Tree::split(NodeId id, std::uint32_t var, std::uint32_t cut, double mu_left, double mu_right) {
  TreeNode* n = find(id);
  if (n == nullptr || !n->is_leaf()) throw Error("split target " + std::to_string(id) + " is not a terminal node");
  if (depth_of(id) >= kMaxDepth) throw Error("split would exceed the maximum tree depth");
  n->var = var;
  n->cut = cut;
  n->mu = 0.0;
  n->left = std::make_unique<TreeNode>();
  n->left->parent = n;
  n->left->id = left_id(id);
  n->left->mu = mu_left;
  n->right = std::make_unique<TreeNode>();
  n->right->parent = n;
  n->right->id = right_id(id);
  n->right->mu = mu_right;
}

void Tree::collapse(NodeId id, double mu) {
  TreeNode* n = find(id);
  if (n == nullptr || !n->is_nog()) throw Error("collapse target " + std::to_string(id) + " is not a nog node");
  n->left.reset();
  n->right.reset();
  n->var = 0;
  n->cut = 0;
  n->mu = mu;
}

CutRange Tree::rule_range(const TreeNode& node, std::uint32_t var, const CutpointGrid& grid) const {
  CutRange r{0, grid.count(var)};
  const TreeNode* child = &node;
  for (const TreeNode* a = node.parent; a != nullptr; child = a, a = a->parent) {
    if (a->var != var) continue;
    if (a->left.get() == child) {
      r.hi = std::min(r.hi, a->cut);
    } else {
      r.lo = std::max(r.lo, a->cut + 1);
    }
  }
  return r;
}

const TreeNode& Tree::leaf_for(std::span<const double> x, const CutpointGrid& grid) const {
  const TreeNode* n = root_.get();
  while (!n->is_leaf()) {
    n = x[n->var] < grid.value(n->var, n->cut) ? n->left.get() : n->right.get();
  }
  return *n;
}

void Tree::write(std::ostream& os) const {
  for (const auto& line : to_lines()) os << line << '\n';
}

std::vector<std::string> Tree::to_lines() const {
  std::vector<std::string> out;
  write_node(*root_, out);
  return out;
}

Tree Tree::from_lines(std::span<const std::string> lines) {
  if (lines.empty()) throw ParseError("empty tree");
  Tree tree;
  // Each line must name the next node in preorder.
  std::size_t index = 0;
  auto parse_line = [&](TreeNode& target, NodeId expected) {
    if (index >= lines.size()) throw ParseError("tree truncated");
    auto tok = text::split_whitespace(lines[index]);
    ++index;
    unsigned long long id = 0;
    if (tok.size() < 3 || !text::parse_uint(tok[1], id) || id != expected) {
      throw ParseError("bad tree line '" + lines[index - 1] + "'");
    }
    target.id = expected;
    if (tok[0] == "l" && tok.size() == 3) {
      if (!text::parse_double(tok[2], target.mu)) throw ParseError("bad leaf value in '" + lines[index - 1] + "'");
      return false;
    }
    unsigned long long v = 0, c = 0;
    if (tok[0] == "i" && tok.size() == 4 && text::parse_uint(tok[2], v) && text::parse_uint(tok[3], c)) {
      if (depth_of(expected) >= kMaxDepth) throw ParseError("tree deeper than the maximum depth");
      target.var = static_cast<std::uint32_t>(v);
      target.cut = static_cast<std::uint32_t>(c);
      return true;
    }
    throw ParseError("bad tree line '" + lines[index - 1] + "'");
  };
  std::vector<std::pair<TreeNode*, bool>> work;  // (internal node, left child read)
  if (parse_line(*tree.root_, 1)) work.emplace_back(tree.root_.get(), false);
  while (!work.empty()) {
    auto& [node, left_done] = work.back();
    if (!left_done) {
      left_done = true;
      node->left = std::make_unique<TreeNode>();
      node->left->parent = node;
      TreeNode* l = node->left.get();
      if (parse_line(*l, left_id(node->id))) work.emplace_back(l, false);
    } else {
      TreeNode* parent = node;
      work.pop_back();
      parent->right = std::make_unique<TreeNode>();
      parent->right->parent = parent;
      TreeNode* r = parent->right.get();
      if (parse_line(*r, right_id(parent->id))) work.emplace_back(r, false);
    }
  }
  if (index != lines.size()) throw ParseError("trailing lines after tree");
  return tree;
}

bool Tree::same_structure(const Tree& other) const { return same_structure_rec(*root_, *other.root_); }

bool operator==(const Tree& a, const Tree& b) { return equal_rec(*a.root_, *b.root_); }

double evaluate(const Tree& tree, const CutpointGrid& grid, std::span<const double> x) {
  return tree.evaluate(x, grid);
}

std::vector<const TreeNode*> enumerate_nodes(const Tree& tree, NodeKind kind) { return tree.nodes(kind); }

std::uint64_t forest_hash(const Forest& forest) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  for (std::size_t j = 0; j < forest.size(); ++j) {
    mix("tree " + std::to_string(j) + "\n");
    for (const auto& line : forest[j].to_lines()) {
      mix(line);
      mix("\n");
    }
  }
  return h;
}

FlatTree::FlatTree(const Tree& tree, const CutpointGrid& grid) {
  auto leaves = tree.nodes(NodeKind::Terminal);
  mus_.reserve(leaves.size());
  leaf_ids_.reserve(leaves.size());
  for (const auto* l : leaves) {
    mus_.push_back(l->mu);
    leaf_ids_.push_back(l->id);
  }
  auto slot_of = [&](NodeId id) {
    auto it = std::lower_bound(leaf_ids_.begin(), leaf_ids_.end(), id);
    return static_cast<std::uint32_t>(it - leaf_ids_.begin());
  };
  // Preorder layout; children indices are patched after they are placed.
  std::vector<std::pair<const TreeNode*, std::size_t>> stack;
  entries_.push_back({});
  stack.emplace_back(&tree.root(), 0);
  while (!stack.empty()) {
    auto [n, at] = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      entries_[at] = Entry{0.0, kLeaf, slot_of(n->id), 0};
      continue;
    }
    const auto l = entries_.size();
    entries_.push_back({});
    const auto r = entries_.size();
    entries_.push_back({});
    entries_[at] = Entry{grid.value(n->var, n->cut), n->var, static_cast<std::uint32_t>(l),
                         static_cast<std::uint32_t>(r)};
    stack.emplace_back(n->right.get(), r);
    stack.emplace_back(n->left.get(), l);
  }
}

}  // namespace pbart
