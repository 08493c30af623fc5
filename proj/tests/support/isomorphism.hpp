// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "memopt/molgraph.hpp"

namespace memopt::testing {

// Plain backtracking graph isomorphism, deliberately independent of the
// canonicalizer. Atoms must agree on every field, bonds on order.
inline bool isomorphic(const Molecule &a, const Molecule &b) {
  const int n = a.num_atoms();
  if (n != b.num_atoms() || a.num_bonds() != b.num_bonds()) return false;
  std::vector<int> map(n, -1);
  std::vector<bool> used(n, false);

  auto consistent = [&](int u, int v) {
    if (!(a.atom(u) == b.atom(v)) || a.degree(u) != b.degree(v)) return false;
    for (int w = 0; w < n; ++w) {
      if (map[w] < 0) continue;
      const int ab = a.find_bond(u, w);
      const int bb = b.find_bond(v, map[w]);
      if ((ab < 0) != (bb < 0)) return false;
      if (ab >= 0 && a.bond(ab).order != b.bond(bb).order) return false;
    }
    return true;
  };

  // Visit atoms of `a` in BFS order so candidates can be restricted to
  // neighbours of an already mapped atom.
  std::vector<int> order;
  std::vector<int> parent(n, -1);
  std::vector<bool> seen(n, false);
  for (int root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = true;
    order.push_back(root);
    for (std::size_t k = order.size() - 1; k < order.size(); ++k) {
      for (const Neighbor &nb : a.neighbors(order[k])) {
        if (seen[nb.atom]) continue;
        seen[nb.atom] = true;
        parent[nb.atom] = order[k];
        order.push_back(nb.atom);
      }
    }
  }

  auto solve = [&](auto &&self, int k) -> bool {
    if (k == n) return true;
    const int u = order[k];
    auto attempt = [&](int v) {
      if (used[v] || !consistent(u, v)) return false;
      map[u] = v;
      used[v] = true;
      if (self(self, k + 1)) return true;
      map[u] = -1;
      used[v] = false;
      return false;
    };
    if (parent[u] >= 0) {
      for (const Neighbor &nb : b.neighbors(map[parent[u]]))
        if (attempt(nb.atom)) return true;
    } else {
      for (int v = 0; v < n; ++v)
        if (attempt(v)) return true;
    }
    return false;
  };
  return solve(solve, 0);
}

}  // namespace memopt::testing
