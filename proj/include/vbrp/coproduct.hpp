#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vbrp/trees.hpp"

namespace vbrp {

/// Edge set of a tree, each edge named by its child node.
using Cut = std::vector<int>;

/// One term R ⊗ P of the plugging coproduct.
///
/// Node ids refer to the tree the coproduct was taken of. Each pruned tree has
/// an undecorated root identified with trunk node `attachment[j]` (a canonical
/// index of `trunk.tree`).
struct CutTerm {
  IdentifiedTree trunk;
  std::vector<IdentifiedTree> pruned;
  std::vector<int> attachment;
  Cut cut;

  Forest pruned_forest() const;
  /// `trunk ⊗ forest ; tree@id ...` with the ambient id of each attachment node.
  std::string to_string() const;
};

/// All admissible cuts, sorted by (size, edges); includes the empty and the full cut.
std::vector<Cut> admissible_cuts(const DecoratedTree& h);

/// True if `cut` removes every edge leaving the root.
bool is_full_cut(const DecoratedTree& h, const Cut& cut);

CutTerm cut_term(const IdentifiedTree& h, const Cut& cut);

std::vector<CutTerm> coproduct(const DecoratedTree& h);
std::vector<CutTerm> coproduct(const IdentifiedTree& h);
/// Coproduct without the empty and the full cut.
std::vector<CutTerm> reduced_coproduct(const DecoratedTree& h);
std::vector<CutTerm> reduced_coproduct(const IdentifiedTree& h);

/// h^(1) ⊗ ... ⊗ h^(k+1): `trunk` is h^(1) and `forests[j]` is h^(j+2).
struct IteratedTerm {
  IdentifiedTree trunk;
  std::vector<std::vector<IdentifiedTree>> forests;
};

/// k applications of the reduced coproduct, each acting on the leftmost factor.
std::vector<IteratedTerm> iterated_coproduct(const DecoratedTree& h, int k);

/// Term of the coproduct of a product of identified trees.
struct ForestCutTerm {
  std::vector<IdentifiedTree> left;
  std::vector<IdentifiedTree> right;
};

/// Multiplicative extension of the full coproduct to forests.
std::vector<ForestCutTerm> coproduct_forest(const std::vector<IdentifiedTree>& f);

/// Multiplicity of h ⊗ rho in the reduced coproduct of sigma.
int counting_function(const DecoratedTree& sigma, const DecoratedTree& h, const Forest& rho);

/// Order-independent text of an identified tree: root id and sorted (parent,child) edges.
std::string edge_signature(const IdentifiedTree& t);
/// Signature of a forest factor; trees without edges are units and are dropped.
std::string edge_signature(const std::vector<IdentifiedTree>& f);

/// Unidentified term trunk ⊗ forest.
using PlainTerm = std::pair<DecoratedTree, Forest>;

/// Coproduct computed from the recursion over B+ rather than from cuts.
std::vector<PlainTerm> coproduct_recursive(const DecoratedTree& h);

/// Connes–Kreimer coproduct of a forest of decorated-root trees.
std::vector<std::pair<Forest, Forest>> ck_coproduct(const Forest& f);

}  // namespace vbrp
