#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vbrp {

using Label = int;
inline constexpr Label no_label = -1;

/// Rooted tree with integer node decorations, always held in canonical form.
///
/// Nodes are numbered in preorder with node 0 the root. Children of every node
/// are sorted by (label, subtree key), so isomorphic trees compare equal.
/// A tree whose root carries no label is an element of the undecorated-root
/// family; a decorated root marks the hat family.
class DecoratedTree {
 public:
  /// The bare undecorated root.
  DecoratedTree();

  /// Canonicalizes an arbitrary parent/label description. Exactly one entry of
  /// `parent` is -1 (the root). Non-root nodes must carry a label >= 0.
  /// If `new_index` is given it receives, for each input node, its canonical index.
  static DecoratedTree from_parents(const std::vector<int>& parent, const std::vector<Label>& label,
                                    std::vector<int>* new_index = nullptr);

  /// Parses the nested-parenthesis text form, e.g. `((0)(1))2` or `(((0)(1))2(3))`.
  static DecoratedTree parse(std::string_view text);

  /// Single decorated node.
  static DecoratedTree dot(Label i);

  int size() const { return static_cast<int>(parent_.size()); }
  int grade() const;
  bool decorated_root() const { return label_[0] != no_label; }
  bool is_unit() const { return size() == 1 && !decorated_root(); }
  bool is_planted() const { return !decorated_root() && children_[0].size() == 1; }

  int parent(int v) const { return parent_[v]; }
  Label label(int v) const { return label_[v]; }
  const std::vector<int>& children(int v) const { return children_[v]; }
  const std::vector<int>& parents() const { return parent_; }
  const std::vector<Label>& labels() const { return label_; }

  /// Decorated nodes in preorder.
  std::vector<int> decorated_nodes() const;
  /// Nodes of the subtree rooted at v, in preorder.
  std::vector<int> subtree(int v) const;
  std::vector<int> leaves() const;
  int max_label() const;
  int depth(int v) const;
  bool is_ancestor(int a, int v) const;

  const std::string& key() const { return node_keys_[0]; }
  /// Key of the subtree rooted at v (v's own label included).
  const std::string& subtree_key(int v) const { return node_keys_[v]; }

  friend bool operator==(const DecoratedTree& a, const DecoratedTree& b) { return a.key() == b.key(); }
  friend std::strong_ordering operator<=>(const DecoratedTree& a, const DecoratedTree& b) {
    return a.key() <=> b.key();
  }

 private:
  std::vector<int> parent_;
  std::vector<Label> label_;
  std::vector<std::vector<int>> children_;
  std::vector<std::string> node_keys_;
};

std::string to_string(const DecoratedTree& h);

/// Commutative product of trees; the empty forest is the unit.
class Forest {
 public:
  Forest() = default;
  explicit Forest(std::vector<DecoratedTree> trees);

  const std::vector<DecoratedTree>& trees() const { return trees_; }
  std::size_t size() const { return trees_.size(); }
  bool empty() const { return trees_.empty(); }
  int grade() const;
  std::string key() const;

  friend Forest operator*(const Forest& a, const Forest& b);
  friend bool operator==(const Forest& a, const Forest& b) { return a.trees_ == b.trees_; }
  friend std::strong_ordering operator<=>(const Forest& a, const Forest& b) {
    return a.trees_ <=> b.trees_;
  }

 private:
  std::vector<DecoratedTree> trees_;
};

/// Tree together with the identity of each of its nodes inside an ambient tree.
/// `ids[v]` is the ambient node of canonical node v.
struct IdentifiedTree {
  DecoratedTree tree;
  std::vector<int> ids;

  /// Canonical node carrying ambient id `id`, or -1.
  int local(int id) const;
};

IdentifiedTree identify(const DecoratedTree& h);

/// Restriction of an ambient tree to a connected node set containing `root`.
/// The new root keeps its label unless `root_label` overrides it.
IdentifiedTree restrict_tree(const IdentifiedTree& ambient, const std::vector<int>& local_nodes, int local_root,
                             std::optional<Label> root_label);

DecoratedTree b_plus(const Forest& f, std::optional<Label> dec = std::nullopt);
Forest b_minus(const DecoratedTree& h);

/// Planted tree over h: h's root becomes a node decorated i under a new bare root.
DecoratedTree graft(Label i, const DecoratedTree& h);
/// Same as graft with identification; ids point into h, the new root maps to -1.
IdentifiedTree graft_identified(Label i, const DecoratedTree& h);

/// Root-merging product of undecorated-root trees.
DecoratedTree tree_product(const DecoratedTree& a, const DecoratedTree& b);

/// Planted factors of h, one per root child, identified with nodes of h.
std::vector<IdentifiedTree> planted_factors(const DecoratedTree& h);

/// Grafts a forest of undecorated-root trees onto a tree: each forest tree's root
/// is identified with node `at[j]` of `base`.
DecoratedTree attach(const DecoratedTree& base, const std::vector<DecoratedTree>& pruned, const std::vector<int>& at);

/// All canonical undecorated-root trees of grade <= n_max with labels in {0..d},
/// sorted by (grade, key).
std::vector<DecoratedTree> enumerate_trees(int n_max, int d, std::size_t cap = 200000);

/// Planted trees of grade in [1, n_max].
std::vector<DecoratedTree> enumerate_planted(int n_max, int d, std::size_t cap = 200000);

/// Order of the decoration-preserving automorphism group.
long long symmetry_factor(const DecoratedTree& h);

/// Number of nodes decorated by `i`.
int count_label(const DecoratedTree& h, Label i);

// Convenience builders used throughout tests and examples.
DecoratedTree planted_dot(Label i);                       ///< B+(dot i)
DecoratedTree ladder(const std::vector<Label>& labels);   ///< chain, labels from the root upward
DecoratedTree cherry(Label i, Label j);                   ///< bare root with two leaves

}  // namespace vbrp
