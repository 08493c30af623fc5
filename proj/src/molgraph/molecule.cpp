// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <functional>
#include <string>

#include "canon.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/molgraph.hpp"
#include "memopt/smiles_graph.hpp"

namespace memopt {

std::string_view element_symbol(Element e) {
  switch (e) {
  case Element::kB:
    return "B";
  case Element::kC:
    return "C";
  case Element::kN:
    return "N";
  case Element::kO:
    return "O";
  case Element::kF:
    return "F";
  case Element::kP:
    return "P";
  case Element::kS:
    return "S";
  case Element::kCl:
    return "Cl";
  case Element::kBr:
    return "Br";
  case Element::kI:
    return "I";
  }
  return "?";
}

std::optional<Element> element_from_symbol(std::string_view symbol) {
  constexpr Element kAll[] = {Element::kB, Element::kC, Element::kN,  Element::kO,  Element::kF,
                              Element::kP, Element::kS, Element::kCl, Element::kBr, Element::kI};
  for (Element e : kAll) {
    if (element_symbol(e) == symbol)
      return e;
  }
  return std::nullopt;
}

bool is_halogen(Element e) {
  return e == Element::kF || e == Element::kCl || e == Element::kBr || e == Element::kI;
}

int valence_contribution(BondOrder order) {
  return order == BondOrder::kAromatic ? 1 : static_cast<int>(order);
}

// ---------------------------------------------------------------------------

const ValenceTable &ValenceTable::defaults() {
  static const ValenceTable table = parse(shipped_data("valence.tsv"));
  return table;
}

ValenceTable ValenceTable::parse(std::string_view text) {
  ValenceTable table;
  for (const auto &row : parse_tsv(text)) {
    if (row.fields.size() < 2)
      throw Error(ErrorCode::kConfig, "valence table line " + std::to_string(row.line)
                                          + ": expected element<TAB>max_valence");
    auto e = element_from_symbol(trim(row.fields[0]));
    if (!e)
      throw Error(ErrorCode::kConfig, "valence table line " + std::to_string(row.line)
                                          + ": unknown element " + row.fields[0]);
    try {
      table.max_[*e] = std::stoi(row.fields[1]);
    } catch (const std::exception &) {
      throw Error(ErrorCode::kConfig,
                  "valence table line " + std::to_string(row.line) + ": bad valence");
    }
  }
  return table;
}

int ValenceTable::max_valence(Element e) const {
  auto it = max_.find(e);
  if (it == max_.end())
    throw Error(ErrorCode::kConfig,
                "valence table has no entry for " + std::string(element_symbol(e)));
  return it->second;
}

int ValenceTable::allowed_valence(const Atom &atom) const {
  return max_valence(atom.element) + std::abs(atom.formal_charge);
}

// ---------------------------------------------------------------------------

namespace {

std::span<const int> normal_valences(Element e) {
  static constexpr int kB[] = {3}, kC[] = {4}, kN[] = {3, 5}, kO[] = {2}, kP[] = {3, 5},
                       kS[] = {2, 4, 6}, kHal[] = {1};
  switch (e) {
  case Element::kB:
    return kB;
  case Element::kC:
    return kC;
  case Element::kN:
    return kN;
  case Element::kO:
    return kO;
  case Element::kP:
    return kP;
  case Element::kS:
    return kS;
  default:
    return kHal;
  }
}

}  // namespace

int default_hydrogens(Element e, bool aromatic, int bond_order_sum) {
  auto valences = normal_valences(e);
  if (aromatic)
    return std::max(0, valences.front() - (bond_order_sum + 1));
  for (int v : valences) {
    if (v >= bond_order_sum)
      return v - bond_order_sum;
  }
  return 0;
}

// ---------------------------------------------------------------------------

Molecule::Molecule() = default;

Molecule Molecule::from_graph(std::vector<Atom> atoms, std::vector<Bond> bonds) {
  Molecule m;
  m.atoms_ = std::move(atoms);
  m.bonds_ = std::move(bonds);
  for (const auto &b : m.bonds_) {
    if (b.begin < 0 || b.end < 0 || b.begin >= m.num_atoms() || b.end >= m.num_atoms()
        || b.begin == b.end)
      throw Error(ErrorCode::kSyntax, "bond endpoints out of range");
  }
  for (const auto &a : m.atoms_) {
    if (a.hydrogens < 0)
      throw Error(ErrorCode::kValence, "negative hydrogen count");
  }
  m.build_topology();
  auto labelling = canonical_labelling(m);
  m.canonical_ = std::move(labelling.smiles);
  m.canonical_order_ = std::move(labelling.order);
  return m;
}

void Molecule::build_topology() {
  const int n = num_atoms();
  adjacency_.assign(n, {});
  for (int i = 0; i < num_bonds(); ++i) {
    const auto &b = bonds_[i];
    for (const auto &nb : adjacency_[b.begin]) {
      if (nb.atom == b.end)
        throw Error(ErrorCode::kSyntax, "duplicate bond between atoms");
    }
    adjacency_[b.begin].push_back({b.end, i});
    adjacency_[b.end].push_back({b.begin, i});
  }

  // Bridges are the only non-ring bonds.
  bond_in_ring_.assign(num_bonds(), true);
  atom_in_ring_.assign(n, false);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  num_components_ = 0;
  std::function<void(int, int)> dfs = [&](int v, int parent_bond) {
    disc[v] = low[v] = timer++;
    for (const auto &nb : adjacency_[v]) {
      if (nb.bond == parent_bond)
        continue;
      if (disc[nb.atom] < 0) {
        dfs(nb.atom, nb.bond);
        low[v] = std::min(low[v], low[nb.atom]);
        if (low[nb.atom] > disc[v])
          bond_in_ring_[nb.bond] = false;
      } else {
        low[v] = std::min(low[v], disc[nb.atom]);
      }
    }
  };
  for (int v = 0; v < n; ++v) {
    if (disc[v] < 0) {
      ++num_components_;
      dfs(v, -1);
    }
  }
  for (int i = 0; i < num_bonds(); ++i) {
    if (bond_in_ring_[i]) {
      atom_in_ring_[bonds_[i].begin] = true;
      atom_in_ring_[bonds_[i].end] = true;
    }
  }
}

int Molecule::find_bond(int a, int b) const {
  for (const auto &nb : adjacency_[a]) {
    if (nb.atom == b)
      return nb.bond;
  }
  return -1;
}

int Molecule::bond_order_sum(int atom) const {
  int sum = 0;
  for (const auto &nb : adjacency_[atom])
    sum += valence_contribution(bonds_[nb.bond].order);
  return sum;
}

int Molecule::ring_count() const {
  return num_bonds() - num_atoms() + num_components_;
}

std::string Molecule::to_smiles(std::span<const int> priority) const {
  return write_with_priority(*this, priority);
}

// ---------------------------------------------------------------------------

void validate(const Molecule &m, const ValenceTable &valence) {
  if (!m.connected())
    throw Error(ErrorCode::kMultiFragment, "molecule is not connected");
  for (int i = 0; i < m.num_atoms(); ++i) {
    const Atom &a = m.atom(i);
    if (a.aromatic && !m.atom_in_ring(i))
      throw Error(ErrorCode::kSyntax, "aromatic atom " + std::to_string(i) + " is not in a ring");
    if (a.aromatic && is_halogen(a.element))
      throw Error(ErrorCode::kSyntax, "aromatic halogen");
    const int used = m.bond_order_sum(i) + a.hydrogens;
    if (used > valence.allowed_valence(a))
      throw Error(ErrorCode::kValence, "atom " + std::to_string(i) + " ("
                                           + std::string(element_symbol(a.element))
                                           + ") exceeds its maximum valence");
  }
  for (const auto &b : m.bonds()) {
    if (b.order == BondOrder::kAromatic && !(m.atom(b.begin).aromatic && m.atom(b.end).aromatic))
      throw Error(ErrorCode::kSyntax, "aromatic bond between non-aromatic atoms");
  }
}

Molecule parse_smiles(std::string_view smiles, const ValenceTable &valence) {
  const auto raw = smiles::parse_graph(trim(smiles));

  std::vector<Bond> bonds;
  bonds.reserve(raw.bonds.size());
  std::vector<int> order_sum(raw.atoms.size(), 0);
  for (const auto &rb : raw.bonds) {
    const BondOrder order = smiles::resolve_order(raw, rb);
    bonds.push_back({rb.begin, rb.end, order});
    order_sum[rb.begin] += valence_contribution(order);
    order_sum[rb.end] += valence_contribution(order);
  }

  std::vector<Atom> atoms;
  atoms.reserve(raw.atoms.size());
  for (std::size_t i = 0; i < raw.atoms.size(); ++i) {
    const auto &ra = raw.atoms[i];
    Atom a;
    a.element = *ra.element;
    a.aromatic = ra.aromatic;
    a.formal_charge = ra.formal_charge;
    a.isotope = ra.isotope;
    a.hydrogens = ra.bracket ? ra.hydrogens.value_or(0)
                             : default_hydrogens(a.element, a.aromatic, order_sum[i]);
    atoms.push_back(a);
  }

  Molecule m = Molecule::from_graph(std::move(atoms), std::move(bonds));
  validate(m, valence);
  return m;
}

std::optional<Molecule> try_parse_smiles(std::string_view smiles, const ValenceTable &valence) {
  try {
    return parse_smiles(smiles, valence);
  } catch (const Error &) {
    return std::nullopt;
  }
}

std::string canonical_smiles(std::string_view smiles) {
  return parse_smiles(smiles).canonical();
}

Molecule permute_atoms(const Molecule &m, std::span<const int> perm) {
  std::vector<int> new_index(m.num_atoms());
  std::vector<Atom> atoms;
  atoms.reserve(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    new_index[perm[i]] = static_cast<int>(i);
    atoms.push_back(m.atom(perm[i]));
  }
  std::vector<Bond> bonds;
  bonds.reserve(m.num_bonds());
  for (const auto &b : m.bonds())
    bonds.push_back({new_index[b.begin], new_index[b.end], b.order});
  return Molecule::from_graph(std::move(atoms), std::move(bonds));
}

Molecule extract_fragment(const Molecule &m, std::span<const int> keep) {
  std::vector<int> new_index(m.num_atoms(), -1);
  std::vector<Atom> atoms;
  atoms.reserve(keep.size());
  for (int a : keep) {
    new_index[a] = static_cast<int>(atoms.size());
    atoms.push_back(m.atom(a));
  }
  std::vector<Bond> bonds;
  for (const auto &b : m.bonds()) {
    const int x = new_index[b.begin], y = new_index[b.end];
    if (x >= 0 && y >= 0) {
      bonds.push_back({x, y, b.order});
    } else if (x >= 0) {
      atoms[x].hydrogens += valence_contribution(b.order);
    } else if (y >= 0) {
      atoms[y].hydrogens += valence_contribution(b.order);
    }
  }
  return Molecule::from_graph(std::move(atoms), std::move(bonds));
}

std::vector<std::string> read_smiles_lines(std::string_view text) {
  std::vector<std::string> out;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view {} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#')
      continue;
    out.emplace_back(line.substr(0, line.find_first_of(" \t")));
  }
  return out;
}

}  // namespace memopt
