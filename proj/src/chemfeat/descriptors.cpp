// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "memopt/chemfeat.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"

namespace memopt {

ValueTable ValueTable::parse(std::string_view text, std::string_view what) {
  ValueTable t;
  for (const TsvRow &row : parse_tsv(text)) {
    const auto where = std::string(what) + " line " + std::to_string(row.line);
    if (row.fields.size() != 2) throw Error(ErrorCode::kConfig, where + ": expected key, value");
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(row.fields[1], &used);
      if (used != row.fields[1].size() || !std::isfinite(v)) throw std::invalid_argument("");
    } catch (const std::exception &) {
      throw Error(ErrorCode::kConfig, where + ": bad number '" + row.fields[1] + "'");
    }
    if (!t.values_.emplace(row.fields[0], v).second)
      throw Error(ErrorCode::kConfig, where + ": duplicate key " + row.fields[0]);
  }
  return t;
}

std::optional<double> ValueTable::find(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double ValueTable::at(std::string_view key) const {
  auto v = find(key);
  if (!v) throw Error(ErrorCode::kConfig, "missing table entry " + std::string(key));
  return *v;
}

const ValueTable &atomic_mass_table() {
  static const ValueTable t = ValueTable::parse(shipped_data("atomic_mass.tsv"), "atomic_mass.tsv");
  return t;
}

const ValueTable &psa_table() {
  static const ValueTable t = ValueTable::parse(shipped_data("psa.tsv"), "psa.tsv");
  return t;
}

DescriptorDelta operator-(const DescriptorVector &after, const DescriptorVector &before) {
  return {after.mw - before.mw,
          after.ring_count - before.ring_count,
          after.hbd - before.hbd,
          after.hba - before.hba,
          after.psa_lite - before.psa_lite,
          after.rotatable_bonds - before.rotatable_bonds};
}

std::string psa_class(const Molecule &m, int atom) {
  const Atom &a = m.atom(atom);
  std::string key(element_symbol(a.element));
  if (a.aromatic) key[0] = static_cast<char>(key[0] - 'A' + 'a');
  key += 'H';
  key += std::to_string(a.hydrogens);
  bool triple = false;
  bool dbl = false;
  for (const Neighbor &nb : m.neighbors(atom)) {
    triple |= m.bond(nb.bond).order == BondOrder::kTriple;
    dbl |= m.bond(nb.bond).order == BondOrder::kDouble;
  }
  if (triple)
    key += '#';
  else if (dbl)
    key += '=';
  if (a.formal_charge > 0) key += '+';
  if (a.formal_charge < 0) key += '-';
  return key;
}

DescriptorVector descriptors(const Molecule &m) {
  const ValueTable &mass = atomic_mass_table();
  const ValueTable &psa = psa_table();
  const double h_mass = mass.at("H");
  DescriptorVector d;
  for (int i = 0; i < m.num_atoms(); ++i) {
    const Atom &a = m.atom(i);
    d.mw += mass.at(element_symbol(a.element)) + a.hydrogens * h_mass;
    if (a.element == Element::kN || a.element == Element::kO) {
      ++d.hba;
      if (a.hydrogens > 0) ++d.hbd;
      // Environments absent from the table contribute nothing.
      d.psa_lite += psa.find(psa_class(m, i)).value_or(0.0);
    }
  }
  d.ring_count = m.ring_count();
  for (int b = 0; b < m.num_bonds(); ++b) {
    const Bond &bond = m.bond(b);
    if (bond.order != BondOrder::kSingle || m.bond_in_ring(b)) continue;
    if (m.degree(bond.begin) >= 2 && m.degree(bond.end) >= 2) ++d.rotatable_bonds;
  }
  return d;
}

}  // namespace memopt
