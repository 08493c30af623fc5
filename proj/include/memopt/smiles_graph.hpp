// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "memopt/molgraph.hpp"

namespace memopt::smiles {

// Atom as written, before any chemistry is applied.
struct RawAtom {
  std::optional<Element> element;  // empty for wildcards
  bool aromatic = false;
  bool any_aromaticity = false;  // '*' or [#n]
  bool wildcard_aromatic = false;  // 'a'
  bool bracket = false;
  std::optional<int> hydrogens;  // bracket H count
  int formal_charge = 0;
  std::optional<int> isotope;
};

struct RawBond {
  int begin;
  int end;
  std::optional<BondOrder> order;  // empty when implicit
};

struct RawGraph {
  std::vector<RawAtom> atoms;
  std::vector<RawBond> bonds;
};

struct GraphOptions {
  // Accept '*', 'a' and [#n] atoms (substructure patterns only).
  bool allow_wildcards = false;
};

// Tokenizes and assembles the graph. Stereo marks are discarded. Throws
// kSyntax, kUnmatchedRing, kMultiFragment or kUnsupportedAtom.
RawGraph parse_graph(std::string_view text, const GraphOptions &options = {});

// Implicit bonds are aromatic between two aromatic atoms, single otherwise.
BondOrder resolve_order(const RawGraph &g, const RawBond &b);

}  // namespace memopt::smiles
