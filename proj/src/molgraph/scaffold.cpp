// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "memopt/molgraph.hpp"

namespace memopt {

Scaffold scaffold_of(const Molecule &m) {
  const int n = m.num_atoms();
  std::vector<bool> removed(n, false);
  std::vector<int> degree(n);
  std::vector<int> queue;
  for (int i = 0; i < n; ++i) {
    degree[i] = m.degree(i);
    if (!m.atom_in_ring(i) && degree[i] <= 1)
      queue.push_back(i);
  }

  // Peel terminal acyclic atoms until none remain.
  while (!queue.empty()) {
    int a = queue.back();
    queue.pop_back();
    if (removed[a])
      continue;
    removed[a] = true;
    for (const auto &nb : m.neighbors(a)) {
      if (removed[nb.atom])
        continue;
      if (--degree[nb.atom] <= 1 && !m.atom_in_ring(nb.atom))
        queue.push_back(nb.atom);
    }
  }

  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (!removed[i])
      keep.push_back(i);
  }
  Scaffold s;
  s.core = extract_fragment(m, keep);
  s.ring_count = s.core.ring_count();
  s.atoms = std::move(keep);
  return s;
}

}  // namespace memopt
