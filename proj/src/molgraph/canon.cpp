// SPDX-License-Identifier: Apache-2.0

// Canonical ranking by iterative refinement of atom invariants, with
// remaining ties resolved by individualizing each candidate of the first
// tied class and keeping the lexicographically smallest string.

#include "canon.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <tuple>

namespace memopt {
namespace {

using Ranks = std::vector<int>;

// Position-style ranks: rank(v) = number of atoms with a strictly smaller key.
template <class Key>
Ranks rank_by(std::span<const int> atoms, const std::vector<Key> &keys, int n) {
  std::vector<int> idx(atoms.begin(), atoms.end());
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  Ranks ranks(n, -1);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i > 0 && keys[idx[i]] == keys[idx[i - 1]])
      ranks[idx[i]] = ranks[idx[i - 1]];
    else
      ranks[idx[i]] = static_cast<int>(i);
  }
  return ranks;
}

int count_classes(std::span<const int> atoms, const Ranks &ranks) {
  std::vector<int> r;
  r.reserve(atoms.size());
  for (int a : atoms)
    r.push_back(ranks[a]);
  std::sort(r.begin(), r.end());
  return static_cast<int>(std::unique(r.begin(), r.end()) - r.begin());
}

class Canonicalizer {
public:
  Canonicalizer(const Molecule &m, std::vector<int> atoms): m_(m), atoms_(std::move(atoms)) { }

  Labelling run() {
    using Invariant = std::array<int, 7>;
    std::vector<Invariant> keys(m_.num_atoms());
    for (int a : atoms_) {
      const Atom &atom = m_.atom(a);
      keys[a] = {atomic_number(atom.element), atom.isotope.value_or(0), atom.formal_charge,
                 m_.degree(a), atom.hydrogens, atom.aromatic ? 1 : 0, m_.atom_in_ring(a) ? 1 : 0};
    }
    Ranks ranks = rank_by(atoms_, keys, m_.num_atoms());
    refine(ranks);
    search(ranks);
    return std::move(best_);
  }

private:
  void refine(Ranks &ranks) const {
    int classes = count_classes(atoms_, ranks);
    while (classes < static_cast<int>(atoms_.size())) {
      using Key = std::pair<int, std::vector<std::pair<int, int>>>;
      std::vector<Key> keys(m_.num_atoms());
      for (int a : atoms_) {
        keys[a].first = ranks[a];
        auto &nbrs = keys[a].second;
        for (const auto &nb : m_.neighbors(a))
          nbrs.emplace_back(ranks[nb.atom], static_cast<int>(m_.bond(nb.bond).order));
        std::sort(nbrs.begin(), nbrs.end());
      }
      Ranks next = rank_by(atoms_, keys, m_.num_atoms());
      int next_classes = count_classes(atoms_, next);
      ranks = std::move(next);
      if (next_classes == classes)
        break;
      classes = next_classes;
    }
  }

  // Swapping two twins (same class, same neighbourhood apart from each
  // other) is an automorphism, so only one of them needs exploring.
  bool twins(int u, int v) const {
    auto signature = [&](int a, int skip) {
      std::vector<std::pair<int, int>> s;
      for (const auto &nb : m_.neighbors(a)) {
        if (nb.atom != skip)
          s.emplace_back(nb.atom, static_cast<int>(m_.bond(nb.bond).order));
      }
      std::sort(s.begin(), s.end());
      return s;
    };
    return signature(u, v) == signature(v, u);
  }

  void search(const Ranks &ranks) {
    // First (lowest-ranked) tied class.
    int tied_rank = -1;
    std::vector<int> members;
    {
      std::vector<std::pair<int, int>> by_rank;
      for (int a : atoms_)
        by_rank.emplace_back(ranks[a], a);
      std::sort(by_rank.begin(), by_rank.end());
      for (std::size_t i = 0; i + 1 < by_rank.size(); ++i) {
        if (by_rank[i].first == by_rank[i + 1].first) {
          tied_rank = by_rank[i].first;
          break;
        }
      }
      if (tied_rank >= 0) {
        for (const auto &[r, a] : by_rank) {
          if (r == tied_rank)
            members.push_back(a);
        }
      }
    }

    if (tied_rank < 0) {
      Labelling leaf = write(ranks);
      if (!have_best_ || leaf.smiles < best_.smiles) {
        best_ = std::move(leaf);
        have_best_ = true;
      }
      return;
    }

    std::vector<int> explored;
    for (int v : members) {
      bool redundant = std::any_of(explored.begin(), explored.end(),
                                   [&](int u) { return twins(u, v); });
      if (redundant)
        continue;
      explored.push_back(v);

      Ranks next = ranks;
      for (int u : members) {
        if (u != v)
          next[u] = tied_rank + 1;
      }
      refine(next);
      search(next);
    }
  }

  Labelling write(const Ranks &ranks) const;

  const Molecule &m_;
  std::vector<int> atoms_;
  Labelling best_;
  bool have_best_ = false;

};

// DFS writer for one connected component under a total priority order.
class Writer {
public:
  Writer(const Molecule &m, const std::vector<int> &priority): m_(m), priority_(priority) { }

  Labelling write(int root) {
    visited_.assign(m_.num_atoms(), false);
    ring_bond_.assign(m_.num_bonds(), false);
    classify(root, -1);

    emitted_.assign(m_.num_atoms(), false);
    digit_of_bond_.assign(m_.num_bonds(), -1);
    emit(root, -1);
    return std::move(out_);
  }

private:
  std::vector<Neighbor> sorted_neighbors(int a) const {
    std::vector<Neighbor> nbrs(m_.neighbors(a).begin(), m_.neighbors(a).end());
    std::sort(nbrs.begin(), nbrs.end(), [&](const Neighbor &x, const Neighbor &y) {
      return std::tie(priority_[x.atom], x.atom) < std::tie(priority_[y.atom], y.atom);
    });
    return nbrs;
  }

  void classify(int a, int parent_bond) {
    visited_[a] = true;
    for (const auto &nb : sorted_neighbors(a)) {
      if (nb.bond == parent_bond || ring_bond_[nb.bond])
        continue;
      if (!visited_[nb.atom]) {
        classify(nb.atom, nb.bond);
      } else {
        ring_bond_[nb.bond] = true;
      }
    }
  }

  std::string bond_symbol(int bond) const {
    const Bond &b = m_.bond(bond);
    const bool both_aromatic = m_.atom(b.begin).aromatic && m_.atom(b.end).aromatic;
    switch (b.order) {
    case BondOrder::kSingle:
      return both_aromatic ? "-" : "";
    case BondOrder::kDouble:
      return "=";
    case BondOrder::kTriple:
      return "#";
    case BondOrder::kAromatic:
      return both_aromatic ? "" : ":";
    }
    return "";
  }

  std::string atom_text(int a) const {
    const Atom &atom = m_.atom(a);
    std::string sym(element_symbol(atom.element));
    if (atom.aromatic)
      sym[0] = static_cast<char>(sym[0] - 'A' + 'a');

    const bool bare = atom.formal_charge == 0 && !atom.isotope
                      && atom.hydrogens
                             == default_hydrogens(atom.element, atom.aromatic,
                                                  m_.bond_order_sum(a));
    if (bare)
      return sym;

    std::string s = "[";
    if (atom.isotope)
      s += std::to_string(*atom.isotope);
    s += sym;
    if (atom.hydrogens > 0) {
      s += 'H';
      if (atom.hydrogens > 1)
        s += std::to_string(atom.hydrogens);
    }
    if (atom.formal_charge != 0) {
      s += atom.formal_charge > 0 ? '+' : '-';
      if (std::abs(atom.formal_charge) > 1)
        s += std::to_string(std::abs(atom.formal_charge));
    }
    s += ']';
    return s;
  }

  int allocate_digit() {
    for (int d = 1;; ++d) {
      if (std::find(open_digits_.begin(), open_digits_.end(), d) == open_digits_.end()) {
        open_digits_.push_back(d);
        return d;
      }
    }
  }

  static std::string digit_text(int d) {
    return d < 10 ? std::to_string(d) : "%" + std::to_string(d);
  }

  void emit(int a, int parent_bond) {
    emitted_[a] = true;
    out_.order.push_back(a);
    out_.smiles += atom_text(a);

    std::vector<Neighbor> closings, openings, children;
    for (const auto &nb : sorted_neighbors(a)) {
      if (nb.bond == parent_bond)
        continue;
      if (ring_bond_[nb.bond]) {
        (emitted_[nb.atom] ? closings : openings).push_back(nb);
      } else if (!emitted_[nb.atom]) {
        children.push_back(nb);
      }
    }

    for (const auto &nb : closings) {
      int d = digit_of_bond_[nb.bond];
      out_.smiles += digit_text(d);
      open_digits_.erase(std::find(open_digits_.begin(), open_digits_.end(), d));
    }
    for (const auto &nb : openings) {
      int d = allocate_digit();
      digit_of_bond_[nb.bond] = d;
      out_.smiles += bond_symbol(nb.bond) + digit_text(d);
    }

    // A child may already have been reached through an earlier branch.
    for (std::size_t i = 0; i < children.size(); ++i) {
      const auto &nb = children[i];
      if (emitted_[nb.atom])
        continue;
      const bool last = std::none_of(children.begin() + i + 1, children.end(),
                                     [&](const Neighbor &x) { return !emitted_[x.atom]; });
      if (!last)
        out_.smiles += '(';
      out_.smiles += bond_symbol(nb.bond);
      emit(nb.atom, nb.bond);
      if (!last)
        out_.smiles += ')';
    }
  }

  const Molecule &m_;
  const std::vector<int> &priority_;
  std::vector<bool> visited_, emitted_, ring_bond_;
  std::vector<int> digit_of_bond_;
  std::vector<int> open_digits_;
  Labelling out_;
};

Labelling Canonicalizer::write(const Ranks &ranks) const {
  int root = atoms_.front();
  for (int a : atoms_) {
    if (ranks[a] < ranks[root])
      root = a;
  }
  return Writer(m_, ranks).write(root);
}

std::vector<std::vector<int>> components(const Molecule &m) {
  std::vector<int> comp(m.num_atoms(), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < m.num_atoms(); ++s) {
    if (comp[s] >= 0)
      continue;
    std::vector<int> atoms {s};
    comp[s] = static_cast<int>(out.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      for (const auto &nb : m.neighbors(atoms[i])) {
        if (comp[nb.atom] < 0) {
          comp[nb.atom] = comp[s];
          atoms.push_back(nb.atom);
        }
      }
    }
    std::sort(atoms.begin(), atoms.end());
    out.push_back(std::move(atoms));
  }
  return out;
}

}  // namespace

Labelling canonical_labelling(const Molecule &m) {
  std::vector<Labelling> parts;
  for (auto &atoms : components(m))
    parts.push_back(Canonicalizer(m, std::move(atoms)).run());
  std::sort(parts.begin(), parts.end(),
            [](const Labelling &a, const Labelling &b) { return a.smiles < b.smiles; });

  Labelling out;
  for (auto &p : parts) {
    if (!out.smiles.empty())
      out.smiles += '.';
    out.smiles += p.smiles;
    out.order.insert(out.order.end(), p.order.begin(), p.order.end());
  }
  return out;
}

std::string write_with_priority(const Molecule &m, std::span<const int> priority) {
  std::vector<int> prio(priority.begin(), priority.end());
  auto comps = components(m);
  std::vector<std::pair<int, int>> roots;  // (priority, atom)
  for (const auto &atoms : comps) {
    int root = *std::min_element(atoms.begin(), atoms.end(), [&](int a, int b) {
      return std::tie(prio[a], a) < std::tie(prio[b], b);
    });
    roots.emplace_back(prio[root], root);
  }
  std::sort(roots.begin(), roots.end());
  std::string out;
  for (const auto &[p, root] : roots) {
    if (!out.empty())
      out += '.';
    out += Writer(m, prio).write(root).smiles;
  }
  return out;
}

}  // namespace memopt
