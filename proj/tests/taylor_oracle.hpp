#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vbrp/trees.hpp"
#include "vbrp/vector_field.hpp"

namespace vbrp::oracle {

/// Coefficients of f(y_t) − f(y_s) = Σ_m D^m f / m! (Σ_g Z_g Y_g)^m, collected by the tree
/// product of each ordered tuple of planted trees g with values Y_g, up to a total grade.
inline std::map<std::string, double> taylor_by_tree(const VectorField& f, double y0,
                                                    const std::vector<std::pair<DecoratedTree, double>>& planted,
                                                    int max_grade) {
  std::map<std::string, double> out;
  std::function<void(const DecoratedTree&, int, double, int)> expand = [&](const DecoratedTree& product, int m,
                                                                           double weight, int grade) {
    if (m > 0) {
      double fact = 1;
      for (int k = 2; k <= m; ++k) fact *= k;
      out[product.key()] += f.derivative(m, y0) / fact * weight;
    }
    for (const auto& [g, value] : planted) {
      if (grade + g.grade() > max_grade) continue;
      expand(tree_product(product, g), m + 1, weight * value, grade + g.grade());
    }
  };
  expand(DecoratedTree(), 0, 1.0, 0);
  return out;
}

}  // namespace vbrp::oracle
