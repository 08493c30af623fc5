// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memopt {

// Supported elements, valued by atomic number.
enum class Element : std::uint8_t {
  kB = 5,
  kC = 6,
  kN = 7,
  kO = 8,
  kF = 9,
  kP = 15,
  kS = 16,
  kCl = 17,
  kBr = 35,
  kI = 53,
};

std::string_view element_symbol(Element e);
std::optional<Element> element_from_symbol(std::string_view symbol);
inline int atomic_number(Element e) { return static_cast<int>(e); }
bool is_halogen(Element e);

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

// Contribution of a bond to its endpoints' valence; aromatic bonds count 1.
int valence_contribution(BondOrder order);

struct Atom {
  Element element = Element::kC;
  bool aromatic = false;
  int formal_charge = 0;
  // Total attached hydrogens, whether implicit or written in a bracket atom.
  int hydrogens = 0;
  std::optional<int> isotope;

  friend bool operator==(const Atom &, const Atom &) = default;
};

struct Bond {
  int begin;
  int end;
  BondOrder order;

  int other(int atom) const { return atom == begin ? end : begin; }
};

struct Neighbor {
  int atom;
  int bond;
};

// Per-element maximum valence, loaded from `element<TAB>max_valence` lines.
class ValenceTable {
public:
  static const ValenceTable &defaults();
  static ValenceTable parse(std::string_view text);

  int max_valence(Element e) const;
  // max_valence plus |formal_charge|.
  int allowed_valence(const Atom &atom) const;

private:
  std::map<Element, int> max_;
};

// Molecular graph with hydrogens folded into heavy atoms. Immutable after
// construction; the canonical string is computed eagerly.
//
// A Molecule obtained from parse_smiles() is connected and chemically
// validated. Molecules built with from_graph() may be disconnected (used
// for edit fragments) and are only checked structurally.
class Molecule {
public:
  Molecule();

  static Molecule from_graph(std::vector<Atom> atoms, std::vector<Bond> bonds);

  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  const Atom &atom(int i) const { return atoms_[i]; }
  const Bond &bond(int i) const { return bonds_[i]; }
  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }
  bool empty() const { return atoms_.empty(); }

  std::span<const Neighbor> neighbors(int atom) const { return adjacency_[atom]; }
  int degree(int atom) const { return static_cast<int>(adjacency_[atom].size()); }
  // Bond index between two atoms, or -1.
  int find_bond(int a, int b) const;

  bool atom_in_ring(int atom) const { return atom_in_ring_[atom]; }
  bool bond_in_ring(int bond) const { return bond_in_ring_[bond]; }
  // Sum of valence_contribution() over incident bonds.
  int bond_order_sum(int atom) const;

  int num_components() const { return num_components_; }
  bool connected() const { return num_components_ <= 1; }
  // Cyclomatic number |bonds| - |atoms| + components.
  int ring_count() const;

  const std::string &canonical() const { return canonical_; }
  // Atom indices in the order they appear in canonical(). Gives a labelling
  // that depends only on the graph, not on the input order.
  std::span<const int> canonical_order() const { return canonical_order_; }

  // Writes a valid SMILES whose DFS follows `priority` (lower first).
  std::string to_smiles(std::span<const int> priority) const;

private:
  void build_topology();

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<bool> atom_in_ring_;
  std::vector<bool> bond_in_ring_;
  int num_components_ = 0;
  std::string canonical_;
  std::vector<int> canonical_order_;
};

// Hydrogen count a bare (non-bracket) atom of this kind would receive.
int default_hydrogens(Element e, bool aromatic, int bond_order_sum);

// Throws kValence / kSyntax / kMultiFragment when `m` violates the
// molecule invariants.
void validate(const Molecule &m, const ValenceTable &valence = ValenceTable::defaults());

Molecule parse_smiles(std::string_view smiles,
                      const ValenceTable &valence = ValenceTable::defaults());

std::optional<Molecule> try_parse_smiles(std::string_view smiles,
                                         const ValenceTable &valence = ValenceTable::defaults());

inline const std::string &canonicalize(const Molecule &m) { return m.canonical(); }

// Canonical form of a SMILES string; throws like parse_smiles().
std::string canonical_smiles(std::string_view smiles);

// Molecule with the given atoms relabelled: new index i holds old atom
// perm[i].
Molecule permute_atoms(const Molecule &m, std::span<const int> perm);

// Induced subgraph on `keep`; each bond cut from a kept atom is replaced by
// hydrogens of the same order. May be disconnected.
Molecule extract_fragment(const Molecule &m, std::span<const int> keep);

struct Scaffold {
  Molecule core;
  int ring_count = 0;
  // Indices of the source atoms that make up `core`, ascending.
  std::vector<int> atoms;
};

Scaffold scaffold_of(const Molecule &m);

enum class EditKind {
  kSubstituteAtom,
  kAppendTerminalAtom,
  kDeleteTerminalAtom,
  kChangeBondOrder,
};

std::string_view edit_kind_name(EditKind kind);
std::optional<EditKind> edit_kind_from_name(std::string_view name);

struct EditOp {
  EditKind kind;
  // Element to introduce for substitute/append; random from the palette
  // when absent.
  std::optional<Element> element;
};

// Elements the mutation operators draw from when none is given.
std::span<const Element> default_edit_palette();

// One local edit, deterministic in `seed`. Throws kNoApplicableSite when
// the operator has no site, kValence when every site breaks valence.
Molecule mutate(const Molecule &m, const EditOp &op, std::uint64_t seed);

// Every distinct molecule reachable by a single edit of any kind, sorted by
// canonical string.
std::vector<Molecule> single_edit_neighbors(const Molecule &m);

// One SMILES per line; blank lines and `#` comments skipped; only the first
// whitespace-separated token of each line is kept.
std::vector<std::string> read_smiles_lines(std::string_view text);

}  // namespace memopt
