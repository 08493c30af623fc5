// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <functional>
#include <map>
#include <string>

#include "memopt/error.hpp"
#include "memopt/molgraph.hpp"
#include "memopt/random.hpp"

namespace memopt {
namespace {

constexpr Element kPalette[] = {Element::kC, Element::kN, Element::kO,
                                Element::kS, Element::kF, Element::kCl};

struct Graph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
};

Graph copy_graph(const Molecule &m) {
  return {{m.atoms().begin(), m.atoms().end()}, {m.bonds().begin(), m.bonds().end()}};
}

// A candidate edit; returns nullopt when the site cannot take it.
using Candidate = std::function<std::optional<Graph>(const Molecule &)>;

std::vector<Element> elements_for(const EditOp &op) {
  if (op.element)
    return {*op.element};
  return {std::begin(kPalette), std::end(kPalette)};
}

std::vector<Candidate> candidates(const Molecule &m, const EditOp &op) {
  std::vector<Candidate> out;
  const auto order = m.canonical_order();

  switch (op.kind) {
  case EditKind::kSubstituteAtom:
    for (int a : order) {
      for (Element e : elements_for(op)) {
        out.push_back([a, e](const Molecule &mol) -> std::optional<Graph> {
          const Atom &old = mol.atom(a);
          if (old.element == e)
            return std::nullopt;
          if (old.aromatic && e != Element::kC && e != Element::kN)
            return std::nullopt;
          Graph g = copy_graph(mol);
          Atom &atom = g.atoms[a];
          atom.element = e;
          atom.formal_charge = 0;
          atom.isotope.reset();
          atom.hydrogens = default_hydrogens(e, atom.aromatic, mol.bond_order_sum(a));
          return g;
        });
      }
    }
    break;

  case EditKind::kAppendTerminalAtom:
    for (int a : order) {
      for (Element e : elements_for(op)) {
        out.push_back([a, e](const Molecule &mol) -> std::optional<Graph> {
          if (mol.atom(a).hydrogens < 1)
            return std::nullopt;
          Graph g = copy_graph(mol);
          g.atoms[a].hydrogens -= 1;
          Atom added;
          added.element = e;
          added.hydrogens = default_hydrogens(e, false, 1);
          g.atoms.push_back(added);
          g.bonds.push_back({a, static_cast<int>(g.atoms.size()) - 1, BondOrder::kSingle});
          return g;
        });
      }
    }
    break;

  case EditKind::kDeleteTerminalAtom:
    for (int a : order) {
      out.push_back([a](const Molecule &mol) -> std::optional<Graph> {
        if (mol.num_atoms() < 2 || mol.degree(a) != 1)
          return std::nullopt;
        std::vector<int> keep;
        for (int i = 0; i < mol.num_atoms(); ++i) {
          if (i != a)
            keep.push_back(i);
        }
        Molecule frag = extract_fragment(mol, keep);
        return copy_graph(frag);
      });
    }
    break;

  case EditKind::kChangeBondOrder: {
    // Sites follow the canonical order of the lower-ranked endpoint.
    std::vector<int> position(m.num_atoms());
    for (std::size_t i = 0; i < order.size(); ++i)
      position[order[i]] = static_cast<int>(i);
    std::vector<int> bonds(m.num_bonds());
    for (int i = 0; i < m.num_bonds(); ++i)
      bonds[i] = i;
    std::sort(bonds.begin(), bonds.end(), [&](int x, int y) {
      auto key = [&](int b) {
        int p = position[m.bond(b).begin], q = position[m.bond(b).end];
        return std::pair(std::min(p, q), std::max(p, q));
      };
      return key(x) < key(y);
    });
    for (int b : bonds) {
      for (int delta : {+1, -1}) {
        out.push_back([b, delta](const Molecule &mol) -> std::optional<Graph> {
          const Bond &bond = mol.bond(b);
          if (bond.order == BondOrder::kAromatic)
            return std::nullopt;
          const int order = static_cast<int>(bond.order) + delta;
          if (order < 1 || order > 3)
            return std::nullopt;
          Graph g = copy_graph(mol);
          for (int end : {bond.begin, bond.end}) {
            g.atoms[end].hydrogens -= delta;
            if (g.atoms[end].hydrogens < 0)
              return std::nullopt;
          }
          g.bonds[b].order = static_cast<BondOrder>(order);
          return g;
        });
      }
    }
    break;
  }
  }
  return out;
}

std::optional<Molecule> realize(const Graph &g, bool &valence_failure) {
  try {
    Molecule m = Molecule::from_graph(g.atoms, g.bonds);
    validate(m);
    return m;
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kValence)
      valence_failure = true;
    return std::nullopt;
  }
}

}  // namespace

std::string_view edit_kind_name(EditKind kind) {
  switch (kind) {
  case EditKind::kSubstituteAtom:
    return "substitute_atom";
  case EditKind::kAppendTerminalAtom:
    return "append_terminal_atom";
  case EditKind::kDeleteTerminalAtom:
    return "delete_terminal_atom";
  case EditKind::kChangeBondOrder:
    return "change_bond_order";
  }
  return "?";
}

std::optional<EditKind> edit_kind_from_name(std::string_view name) {
  for (EditKind k : {EditKind::kSubstituteAtom, EditKind::kAppendTerminalAtom,
                     EditKind::kDeleteTerminalAtom, EditKind::kChangeBondOrder}) {
    if (edit_kind_name(k) == name)
      return k;
  }
  return std::nullopt;
}

std::span<const Element> default_edit_palette() {
  return kPalette;
}

Molecule mutate(const Molecule &m, const EditOp &op, std::uint64_t seed) {
  auto sites = candidates(m, op);
  Rng rng(seed);
  shuffle_in_place(sites, rng);

  bool any_site = false;
  bool valence_failure = false;
  for (const auto &site : sites) {
    auto g = site(m);
    if (!g)
      continue;
    any_site = true;
    if (auto out = realize(*g, valence_failure))
      return *std::move(out);
  }
  if (any_site && valence_failure)
    throw Error(ErrorCode::kValence,
                std::string(edit_kind_name(op.kind)) + " breaks valence at every site");
  throw Error(ErrorCode::kNoApplicableSite,
              std::string(edit_kind_name(op.kind)) + " has no applicable site");
}

std::vector<Molecule> single_edit_neighbors(const Molecule &m) {
  std::map<std::string, Molecule> found;
  for (EditKind kind : {EditKind::kSubstituteAtom, EditKind::kAppendTerminalAtom,
                        EditKind::kDeleteTerminalAtom, EditKind::kChangeBondOrder}) {
    for (const auto &site : candidates(m, {kind, std::nullopt})) {
      auto g = site(m);
      if (!g)
        continue;
      bool ignored = false;
      if (auto out = realize(*g, ignored); out && out->canonical() != m.canonical())
        found.emplace(out->canonical(), *std::move(out));
    }
  }
  std::vector<Molecule> out;
  out.reserve(found.size());
  for (auto &[key, mol] : found)
    out.push_back(std::move(mol));
  return out;
}

}  // namespace memopt
