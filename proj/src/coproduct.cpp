#include "vbrp/coproduct.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "vbrp/error.hpp"

namespace vbrp {

namespace {

// Cuts inside the subtree of v, not including the edge above v.
std::vector<Cut> cuts_below(const DecoratedTree& h, int v) {
  std::vector<Cut> acc{Cut{}};
  for (int c : h.children(v)) {
    std::vector<Cut> options{Cut{c}};
    auto inner = cuts_below(h, c);
    options.insert(options.end(), inner.begin(), inner.end());
    std::vector<Cut> next;
    next.reserve(acc.size() * options.size());
    for (const auto& a : acc) {
      for (const auto& o : options) {
        Cut m = a;
        m.insert(m.end(), o.begin(), o.end());
        next.push_back(std::move(m));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

std::vector<PlainTerm> hat_recursive(const DecoratedTree& t);

// Multiplicative extension over a forest of decorated-root trees:
// left factors stay separate trees, right factors multiply.
std::vector<std::pair<std::vector<DecoratedTree>, Forest>> hat_forest(const std::vector<DecoratedTree>& f) {
  std::vector<std::pair<std::vector<DecoratedTree>, Forest>> acc{{{}, Forest{}}};
  for (const auto& t : f) {
    auto terms = hat_recursive(t);
    std::vector<std::pair<std::vector<DecoratedTree>, Forest>> next;
    for (const auto& [l, r] : acc) {
      for (const auto& [tl, tr] : terms) {
        auto nl = l;
        nl.push_back(tl);
        next.emplace_back(std::move(nl), r * tr);
      }
    }
    acc = std::move(next);
  }
  return acc;
}

// Sum over subsets of the root's children: the chosen ones go right under a
// bare root, the others are expanded recursively.
std::vector<PlainTerm> expand_root(const std::vector<DecoratedTree>& kids, std::optional<Label> root_label) {
  std::vector<PlainTerm> out;
  const std::size_t n = kids.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<DecoratedTree> chosen, rest;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? chosen : rest).push_back(kids[i]);
    Forest planted = chosen.empty() ? Forest{} : Forest({b_plus(Forest(chosen))});
    for (const auto& [l, r] : hat_forest(rest)) out.emplace_back(b_plus(Forest(l), root_label), r * planted);
  }
  return out;
}

std::vector<PlainTerm> hat_recursive(const DecoratedTree& t) {
  return expand_root(b_minus(t).trees(), t.label(0));
}

std::vector<std::pair<DecoratedTree, Forest>> ck_hat(const DecoratedTree& t);

std::vector<std::pair<Forest, Forest>> ck_hat_forest(const std::vector<DecoratedTree>& f) {
  std::vector<std::pair<Forest, Forest>> acc{{Forest{}, Forest{}}};
  for (const auto& t : f) {
    auto terms = ck_hat(t);
    std::vector<std::pair<Forest, Forest>> next;
    for (const auto& [l, r] : acc)
      for (const auto& [tl, tr] : terms) next.emplace_back(l * Forest({tl}), r * tr);
    acc = std::move(next);
  }
  return acc;
}

std::vector<std::pair<DecoratedTree, Forest>> ck_hat(const DecoratedTree& t) {
  std::vector<std::pair<DecoratedTree, Forest>> out;
  const auto kids = b_minus(t).trees();
  const std::size_t n = kids.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<DecoratedTree> chosen, rest;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? chosen : rest).push_back(kids[i]);
    for (const auto& [l, r] : ck_hat_forest(rest)) out.emplace_back(b_plus(l, t.label(0)), r * Forest(chosen));
  }
  return out;
}

}  // namespace

Forest CutTerm::pruned_forest() const {
  std::vector<DecoratedTree> ts;
  ts.reserve(pruned.size());
  for (const auto& p : pruned) ts.push_back(p.tree);
  return Forest(std::move(ts));
}

std::string CutTerm::to_string() const {
  std::ostringstream os;
  os << trunk.tree.key() << " ⊗ " << pruned_forest().key() << " ;";
  for (std::size_t j = 0; j < pruned.size(); ++j) os << ' ' << pruned[j].tree.key() << '@' << pruned[j].ids[0];
  return os.str();
}

std::vector<Cut> admissible_cuts(const DecoratedTree& h) {
  auto cuts = cuts_below(h, 0);
  for (auto& c : cuts) std::sort(c.begin(), c.end());
  std::sort(cuts.begin(), cuts.end(), [](const Cut& a, const Cut& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return cuts;
}

bool is_full_cut(const DecoratedTree& h, const Cut& cut) {
  const auto& rc = h.children(0);
  if (rc.empty()) return false;
  return std::all_of(rc.begin(), rc.end(), [&](int c) { return std::find(cut.begin(), cut.end(), c) != cut.end(); });
}

CutTerm cut_term(const IdentifiedTree& h, const Cut& cut) {
  const auto& t = h.tree;
  std::vector<char> removed(t.size(), 0);
  for (int c : cut) {
    if (c <= 0 || c >= t.size()) throw PreconditionError("cut_term: edge out of range");
    for (int other : cut)
      if (other != c && t.is_ancestor(other, c)) throw PreconditionError("cut_term: cut is not admissible");
    for (int v : t.subtree(c)) removed[v] = 1;
  }
  std::vector<int> trunk_nodes;
  for (int v = 0; v < t.size(); ++v)
    if (!removed[v]) trunk_nodes.push_back(v);

  CutTerm term;
  term.trunk = restrict_tree(h, trunk_nodes, 0, std::nullopt);
  // Group cut edges by their parent, which always lies in the trunk.
  std::map<int, std::vector<int>> groups;
  for (int c : cut) groups[t.parent(c)].push_back(c);
  for (const auto& [p, edges] : groups) {
    std::vector<int> nodes{p};
    for (int c : edges) {
      auto sub = t.subtree(c);
      nodes.insert(nodes.end(), sub.begin(), sub.end());
    }
    term.pruned.push_back(restrict_tree(h, nodes, p, no_label));
    term.attachment.push_back(term.trunk.local(h.ids[p]));
  }
  term.cut.reserve(cut.size());
  for (int c : cut) term.cut.push_back(h.ids[c]);
  std::sort(term.cut.begin(), term.cut.end());
  return term;
}

std::vector<CutTerm> coproduct(const IdentifiedTree& h) {
  std::vector<CutTerm> out;
  for (const auto& c : admissible_cuts(h.tree)) out.push_back(cut_term(h, c));
  return out;
}

std::vector<CutTerm> coproduct(const DecoratedTree& h) {
  if (h.decorated_root()) throw PreconditionError("coproduct: tree must have an undecorated root");
  return coproduct(identify(h));
}

std::vector<CutTerm> reduced_coproduct(const IdentifiedTree& h) {
  std::vector<CutTerm> out;
  for (const auto& c : admissible_cuts(h.tree)) {
    if (c.empty() || is_full_cut(h.tree, c)) continue;
    out.push_back(cut_term(h, c));
  }
  return out;
}

std::vector<CutTerm> reduced_coproduct(const DecoratedTree& h) {
  if (h.decorated_root()) throw PreconditionError("reduced_coproduct: tree must have an undecorated root");
  return reduced_coproduct(identify(h));
}

std::vector<IteratedTerm> iterated_coproduct(const DecoratedTree& h, int k) {
  if (k < 0) throw PreconditionError("iterated_coproduct: depth must be >= 0");
  if (h.decorated_root()) throw PreconditionError("iterated_coproduct: tree must have an undecorated root");
  std::vector<IteratedTerm> acc{IteratedTerm{identify(h), {}}};
  for (int level = 0; level < k; ++level) {
    std::vector<IteratedTerm> next;
    for (const auto& term : acc) {
      for (auto& ct : reduced_coproduct(term.trunk)) {
        IteratedTerm t;
        t.trunk = std::move(ct.trunk);
        t.forests.push_back(std::move(ct.pruned));
        t.forests.insert(t.forests.end(), term.forests.begin(), term.forests.end());
        next.push_back(std::move(t));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

std::vector<ForestCutTerm> coproduct_forest(const std::vector<IdentifiedTree>& f) {
  std::vector<ForestCutTerm> acc{ForestCutTerm{}};
  for (const auto& t : f) {
    auto terms = coproduct(t);
    std::vector<ForestCutTerm> next;
    for (const auto& a : acc) {
      for (const auto& ct : terms) {
        ForestCutTerm n = a;
        n.left.push_back(ct.trunk);
        n.right.insert(n.right.end(), ct.pruned.begin(), ct.pruned.end());
        next.push_back(std::move(n));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

int counting_function(const DecoratedTree& sigma, const DecoratedTree& h, const Forest& rho) {
  if (sigma.decorated_root()) return 0;
  int n = 0;
  for (const auto& t : reduced_coproduct(sigma))
    if (t.trunk.tree == h && t.pruned_forest() == rho) ++n;
  return n;
}

std::string edge_signature(const IdentifiedTree& t) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < t.tree.size(); ++v) edges.emplace_back(t.ids[t.tree.parent(v)], t.ids[v]);
  std::sort(edges.begin(), edges.end());
  std::ostringstream os;
  os << t.ids[0] << ':';
  for (const auto& [p, c] : edges) os << '(' << p << ',' << c << ')';
  return os.str();
}

std::string edge_signature(const std::vector<IdentifiedTree>& f) {
  std::vector<std::string> parts;
  for (const auto& t : f)
    if (t.tree.size() > 1) parts.push_back(edge_signature(t));
  std::sort(parts.begin(), parts.end());
  std::string s = "{";
  for (const auto& p : parts) s += p + ';';
  return s + '}';
}

std::vector<PlainTerm> coproduct_recursive(const DecoratedTree& h) {
  if (h.decorated_root()) throw PreconditionError("coproduct_recursive: tree must have an undecorated root");
  return expand_root(b_minus(h).trees(), std::nullopt);
}

std::vector<std::pair<Forest, Forest>> ck_coproduct(const Forest& f) {
  std::vector<std::pair<Forest, Forest>> out;
  const auto& trees = f.trees();
  const std::size_t n = trees.size();
  for (const auto& t : trees)
    if (!t.decorated_root()) throw PreconditionError("ck_coproduct: trees must have decorated roots");
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<DecoratedTree> chosen, rest;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? chosen : rest).push_back(trees[i]);
    for (const auto& [l, r] : ck_hat_forest(rest)) out.emplace_back(l, r * Forest(chosen));
  }
  return out;
}

}  // namespace vbrp
