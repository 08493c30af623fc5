// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <vector>

#include "memopt/error.hpp"
#include "memopt/molgraph.hpp"
#include "memopt/random.hpp"
#include "support/corpus.hpp"

namespace memopt::testing {

// The corpus plus seeded single-edit descendants, distinct by canonical
// string, at least `n` molecules. Deterministic.
inline std::vector<Molecule> molecule_pool(std::size_t n) {
  std::vector<Molecule> pool;
  std::set<std::string> seen;
  for (Molecule &m : corpus_molecules()) {
    if (seen.insert(m.canonical()).second) pool.push_back(std::move(m));
  }
  constexpr EditKind kinds[] = {EditKind::kSubstituteAtom, EditKind::kAppendTerminalAtom,
                                EditKind::kDeleteTerminalAtom, EditKind::kChangeBondOrder};
  std::uint64_t seed = 0;
  for (std::size_t i = 0; pool.size() < n; ++i) {
    const Molecule parent = pool[i % pool.size()];
    ++seed;
    try {
      Molecule child = mutate(parent, {kinds[seed % 4], std::nullopt}, mix_seed(99, seed));
      if (seen.insert(child.canonical()).second) pool.push_back(std::move(child));
    } catch (const Error &) {
    }
  }
  return pool;
}

}  // namespace memopt::testing
