// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "memopt/molgraph.hpp"

namespace memopt {

struct Labelling {
  std::string smiles;
  std::vector<int> order;
};

// Canonical SMILES and emission order. Components are written separately
// and joined with '.' in sorted order.
Labelling canonical_labelling(const Molecule &m);

std::string write_with_priority(const Molecule &m, std::span<const int> priority);

}  // namespace memopt
