#include "vbrp/trees.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "vbrp/error.hpp"

namespace vbrp {

namespace {

std::string node_key(Label label, const std::vector<std::string>& child_keys) {
  std::string s = "(";
  if (child_keys.empty()) {
    if (label != no_label) s += std::to_string(label);
    s += ')';
    return s;
  }
  for (const auto& c : child_keys) s += c;
  s += ')';
  if (label != no_label) s += std::to_string(label);
  return s;
}

long long factorial(int m) {
  long long f = 1;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  DecoratedTree run() {
    skip();
    node(-1);
    skip();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return DecoratedTree::from_parents(parent_, label_);
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool digit() const { return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])); }

  Label number() {
    std::size_t start = pos_;
    long long v = 0;
    while (digit()) {
      v = v * 10 + (text_[pos_] - '0');
      if (v > 1'000'000) throw ParseError("label too large", start);
      ++pos_;
    }
    return static_cast<Label>(v);
  }

  void node(int parent) {
    skip();
    if (pos_ >= text_.size() || text_[pos_] != '(') throw ParseError("expected '('", pos_);
    ++pos_;
    int self = static_cast<int>(parent_.size());
    parent_.push_back(parent);
    label_.push_back(no_label);
    skip();
    if (digit()) {
      label_[self] = number();
      skip();
      if (pos_ >= text_.size() || text_[pos_] != ')') throw ParseError("expected ')' after leaf label", pos_);
      ++pos_;
      if (digit()) throw ParseError("leaf carries two labels", pos_);
      return;
    }
    while (true) {
      skip();
      if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses", pos_);
      if (text_[pos_] == ')') break;
      node(self);
    }
    ++pos_;
    if (digit()) label_[self] = number();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<int> parent_;
  std::vector<Label> label_;
};

}  // namespace

DecoratedTree::DecoratedTree() : parent_{-1}, label_{no_label}, children_(1), node_keys_{"()"} {}

DecoratedTree DecoratedTree::from_parents(const std::vector<int>& parent, const std::vector<Label>& label,
                                          std::vector<int>* new_index) {
  const int n = static_cast<int>(parent.size());
  if (n == 0 || static_cast<int>(label.size()) != n) throw PreconditionError("tree: parent/label size mismatch");
  int root = -1;
  std::vector<std::vector<int>> kids(n);
  for (int v = 0; v < n; ++v) {
    if (parent[v] == -1) {
      if (root != -1) throw PreconditionError("tree: more than one root");
      root = v;
    } else {
      if (parent[v] < 0 || parent[v] >= n) throw PreconditionError("tree: parent index out of range");
      if (label[v] < 0) throw PreconditionError("tree: non-root node without label");
      kids[parent[v]].push_back(v);
    }
  }
  if (root == -1) throw PreconditionError("tree: no root");
  if (label[root] < no_label) throw PreconditionError("tree: invalid root label");

  // Depth-first order from the root; detects cycles and unreachable nodes.
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (seen[v]) throw PreconditionError("tree: parent map is cyclic");
    seen[v] = 1;
    order.push_back(v);
    for (int c : kids[v]) stack.push_back(c);
  }
  if (static_cast<int>(order.size()) != n) throw PreconditionError("tree: parent map does not reach the root");

  std::vector<std::string> key(n);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    auto& ch = kids[v];
    std::sort(ch.begin(), ch.end(), [&](int a, int b) {
      if (label[a] != label[b]) return label[a] < label[b];
      return key[a] < key[b];
    });
    std::vector<std::string> ck;
    ck.reserve(ch.size());
    for (int c : ch) ck.push_back(key[c]);
    key[v] = node_key(label[v], ck);
  }

  DecoratedTree t;
  t.parent_.assign(n, -1);
  t.label_.assign(n, no_label);
  t.children_.assign(n, {});
  t.node_keys_.assign(n, {});
  std::vector<int> idx(n, -1);
  int next = 0;
  std::function<void(int, int)> visit = [&](int v, int p) {
    int me = next++;
    idx[v] = me;
    t.parent_[me] = p;
    t.label_[me] = label[v];
    t.node_keys_[me] = key[v];
    if (p >= 0) t.children_[p].push_back(me);
    for (int c : kids[v]) visit(c, me);
  };
  visit(root, -1);
  if (new_index) *new_index = std::move(idx);
  return t;
}

DecoratedTree DecoratedTree::parse(std::string_view text) { return Parser(text).run(); }

DecoratedTree DecoratedTree::dot(Label i) {
  if (i < 0) throw PreconditionError("dot: label must be >= 0");
  return from_parents({-1}, {i});
}

int DecoratedTree::grade() const {
  int g = 0;
  for (Label l : label_) g += (l != no_label);
  return g;
}

std::vector<int> DecoratedTree::decorated_nodes() const {
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (label_[v] != no_label) out.push_back(v);
  return out;
}

std::vector<int> DecoratedTree::subtree(int v) const {
  // Preorder numbering makes every subtree a contiguous index range.
  int end = v + 1;
  while (end < size() && is_ancestor(v, end)) ++end;
  std::vector<int> out(end - v);
  std::iota(out.begin(), out.end(), v);
  return out;
}

std::vector<int> DecoratedTree::leaves() const {
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (children_[v].empty()) out.push_back(v);
  return out;
}

int DecoratedTree::max_label() const {
  int m = no_label;
  for (Label l : label_) m = std::max(m, l);
  return m;
}

int DecoratedTree::depth(int v) const {
  int d = 0;
  while (parent_[v] != -1) {
    v = parent_[v];
    ++d;
  }
  return d;
}

bool DecoratedTree::is_ancestor(int a, int v) const {
  while (v != -1) {
    if (v == a) return true;
    v = parent_[v];
  }
  return false;
}

std::string to_string(const DecoratedTree& h) { return h.key(); }

Forest::Forest(std::vector<DecoratedTree> trees) : trees_(std::move(trees)) { std::sort(trees_.begin(), trees_.end()); }

int Forest::grade() const {
  int g = 0;
  for (const auto& t : trees_) g += t.grade();
  return g;
}

std::string Forest::key() const {
  if (trees_.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    if (i) s += ' ';
    s += trees_[i].key();
  }
  return s;
}

Forest operator*(const Forest& a, const Forest& b) {
  std::vector<DecoratedTree> all = a.trees_;
  all.insert(all.end(), b.trees_.begin(), b.trees_.end());
  return Forest(std::move(all));
}

int IdentifiedTree::local(int id) const {
  for (std::size_t v = 0; v < ids.size(); ++v)
    if (ids[v] == id) return static_cast<int>(v);
  return -1;
}

IdentifiedTree identify(const DecoratedTree& h) {
  std::vector<int> ids(h.size());
  std::iota(ids.begin(), ids.end(), 0);
  return {h, ids};
}

IdentifiedTree restrict_tree(const IdentifiedTree& ambient, const std::vector<int>& local_nodes, int local_root,
                             std::optional<Label> root_label) {
  const auto& t = ambient.tree;
  std::vector<int> pos(t.size(), -1);
  for (std::size_t k = 0; k < local_nodes.size(); ++k) pos[local_nodes[k]] = static_cast<int>(k);
  std::vector<int> parent(local_nodes.size());
  std::vector<Label> label(local_nodes.size());
  for (std::size_t k = 0; k < local_nodes.size(); ++k) {
    int v = local_nodes[k];
    label[k] = t.label(v);
    if (v == local_root) {
      parent[k] = -1;
      if (root_label) label[k] = *root_label;
    } else {
      int p = t.parent(v);
      if (p < 0 || pos[p] < 0) throw PreconditionError("restrict_tree: node set is not connected");
      parent[k] = pos[p];
    }
  }
  std::vector<int> idx;
  auto tree = DecoratedTree::from_parents(parent, label, &idx);
  std::vector<int> ids(local_nodes.size());
  for (std::size_t k = 0; k < local_nodes.size(); ++k) ids[idx[k]] = ambient.ids[local_nodes[k]];
  return {std::move(tree), std::move(ids)};
}

DecoratedTree b_plus(const Forest& f, std::optional<Label> dec) {
  std::vector<int> parent{-1};
  std::vector<Label> label{dec.value_or(no_label)};
  for (const auto& t : f.trees()) {
    if (!t.decorated_root()) throw PreconditionError("b_plus: forest trees must have decorated roots");
    int off = static_cast<int>(parent.size());
    for (int v = 0; v < t.size(); ++v) {
      parent.push_back(v == 0 ? 0 : t.parent(v) + off);
      label.push_back(t.label(v));
    }
  }
  return DecoratedTree::from_parents(parent, label);
}

Forest b_minus(const DecoratedTree& h) {
  std::vector<DecoratedTree> out;
  IdentifiedTree ih = identify(h);
  for (int c : h.children(0)) out.push_back(restrict_tree(ih, h.subtree(c), c, std::nullopt).tree);
  return Forest(std::move(out));
}

IdentifiedTree graft_identified(Label i, const DecoratedTree& h) {
  if (h.decorated_root()) throw PreconditionError("graft: tree must have an undecorated root");
  if (i < 0) throw PreconditionError("graft: label must be >= 0");
  std::vector<int> parent{-1};
  std::vector<Label> label{no_label};
  for (int v = 0; v < h.size(); ++v) {
    parent.push_back(h.parent(v) + 1);
    label.push_back(v == 0 ? i : h.label(v));
  }
  parent[1] = 0;
  std::vector<int> idx;
  auto tree = DecoratedTree::from_parents(parent, label, &idx);
  std::vector<int> ids(tree.size());
  ids[idx[0]] = -1;
  for (int v = 0; v < h.size(); ++v) ids[idx[v + 1]] = v;
  return {std::move(tree), std::move(ids)};
}

DecoratedTree graft(Label i, const DecoratedTree& h) { return graft_identified(i, h).tree; }

DecoratedTree tree_product(const DecoratedTree& a, const DecoratedTree& b) {
  if (a.decorated_root() || b.decorated_root()) throw PreconditionError("tree_product: roots must be undecorated");
  std::vector<int> parent = a.parents();
  std::vector<Label> label = a.labels();
  int off = a.size() - 1;
  for (int v = 1; v < b.size(); ++v) {
    int p = b.parent(v);
    parent.push_back(p == 0 ? 0 : p + off);
    label.push_back(b.label(v));
  }
  return DecoratedTree::from_parents(parent, label);
}

std::vector<IdentifiedTree> planted_factors(const DecoratedTree& h) {
  std::vector<IdentifiedTree> out;
  IdentifiedTree ih = identify(h);
  for (int c : h.children(0)) {
    auto nodes = h.subtree(c);
    nodes.insert(nodes.begin(), 0);
    out.push_back(restrict_tree(ih, nodes, 0, std::nullopt));
  }
  return out;
}

DecoratedTree attach(const DecoratedTree& base, const std::vector<DecoratedTree>& pruned, const std::vector<int>& at) {
  if (pruned.size() != at.size()) throw PreconditionError("attach: arity mismatch");
  std::vector<int> parent = base.parents();
  std::vector<Label> label = base.labels();
  for (std::size_t j = 0; j < pruned.size(); ++j) {
    const auto& t = pruned[j];
    if (at[j] < 0 || at[j] >= base.size()) throw PreconditionError("attach: attachment node out of range");
    std::vector<int> map(t.size());
    map[0] = at[j];
    for (int v = 1; v < t.size(); ++v) {
      map[v] = static_cast<int>(parent.size());
      parent.push_back(map[t.parent(v)]);
      label.push_back(t.label(v));
    }
  }
  return DecoratedTree::from_parents(parent, label);
}

std::vector<DecoratedTree> enumerate_trees(int n_max, int d, std::size_t cap) {
  if (n_max < 0 || d < 0) throw PreconditionError("enumerate_trees: n_max and d must be >= 0");
  std::vector<DecoratedTree> all{DecoratedTree()};
  std::vector<DecoratedTree> layer{DecoratedTree()};
  for (int g = 1; g <= n_max; ++g) {
    std::set<DecoratedTree> next;
    for (const auto& t : layer) {
      for (int v = 0; v < t.size(); ++v) {
        for (Label i = 0; i <= d; ++i) {
          auto parent = t.parents();
          auto label = t.labels();
          parent.push_back(v);
          label.push_back(i);
          next.insert(DecoratedTree::from_parents(parent, label));
          if (all.size() + next.size() > cap)
            throw ResourceError("enumerate_trees: more than " + std::to_string(cap) + " trees");
        }
      }
    }
    layer.assign(next.begin(), next.end());
    all.insert(all.end(), layer.begin(), layer.end());
  }
  return all;
}

std::vector<DecoratedTree> enumerate_planted(int n_max, int d, std::size_t cap) {
  std::vector<DecoratedTree> out;
  for (auto& t : enumerate_trees(n_max, d, cap))
    if (t.is_planted()) out.push_back(std::move(t));
  return out;
}

long long symmetry_factor(const DecoratedTree& h) {
  long long s = 1;
  for (int v = 0; v < h.size(); ++v) {
    const auto& ch = h.children(v);
    std::size_t k = 0;
    while (k < ch.size()) {
      std::size_t m = k + 1;
      while (m < ch.size() && h.subtree_key(ch[m]) == h.subtree_key(ch[k])) ++m;
      s *= factorial(static_cast<int>(m - k));
      k = m;
    }
  }
  return s;
}

int count_label(const DecoratedTree& h, Label i) {
  int c = 0;
  for (Label l : h.labels()) c += (l == i);
  return c;
}

DecoratedTree planted_dot(Label i) { return DecoratedTree::from_parents({-1, 0}, {no_label, i}); }

DecoratedTree ladder(const std::vector<Label>& labels) {
  std::vector<int> parent{-1};
  std::vector<Label> label{no_label};
  for (std::size_t k = 0; k < labels.size(); ++k) {
    parent.push_back(static_cast<int>(k));
    label.push_back(labels[k]);
  }
  return DecoratedTree::from_parents(parent, label);
}

DecoratedTree cherry(Label i, Label j) { return DecoratedTree::from_parents({-1, 0, 0}, {no_label, i, j}); }

}  // namespace vbrp
