// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <chrono>
#include <map>
#include <tuple>
#include <vector>

#include "memopt/skillbank.hpp"

namespace memopt {
namespace {

using Clock = std::chrono::steady_clock;

bool atoms_compatible(const Atom &a, const Atom &b) {
  return a.element == b.element && a.aromatic == b.aromatic && a.formal_charge == b.formal_charge &&
         a.isotope == b.isotope;
}

// Dense bond-order matrix; 0 means no bond.
std::vector<std::uint8_t> bond_matrix(const Molecule &m) {
  const int n = m.num_atoms();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * n, 0);
  for (const Bond &b : m.bonds()) {
    out[b.begin * n + b.end] = static_cast<std::uint8_t>(b.order);
    out[b.end * n + b.begin] = static_cast<std::uint8_t>(b.order);
  }
  return out;
}

std::vector<int> canonical_ranks(const Molecule &m) {
  std::vector<int> rank(m.num_atoms());
  const auto order = m.canonical_order();
  for (int i = 0; i < static_cast<int>(order.size()); ++i) rank[order[i]] = i;
  return rank;
}

class Search {
public:
  Search(const Molecule &a, const Molecule &b, bool a_first, const McsOptions &opts)
      : a_(a), b_(b), na_(a.num_atoms()), nb_(b.num_atoms()), bonds_a_(bond_matrix(a)),
        bonds_b_(bond_matrix(b)), rank_a_(canonical_ranks(a)), rank_b_(canonical_ranks(b)),
        a_first_(a_first), opts_(opts) {
    compat_.assign(static_cast<std::size_t>(na_) * nb_, false);
    for (int i = 0; i < na_; ++i) {
      for (int j = 0; j < nb_; ++j) compat_[i * nb_ + j] = atoms_compatible(a.atom(i), b.atom(j));
      label_.push_back(label_of(a.atom(i)));
    }
    for (int j = 0; j < nb_; ++j) label_b_.push_back(label_of(b.atom(j)));
    num_labels_ = static_cast<int>(labels_.size());
  }

  std::vector<std::pair<int, int>> greedy() {
    std::vector<std::pair<int, int>> best;
    for (int a0 = 0; a0 < na_; ++a0) {
      for (int b0 = 0; b0 < nb_; ++b0) {
        if (!compat(a0, b0)) continue;
        reset();
        push(a0, b0);
        bool grew = true;
        while (grew) {
          grew = false;
          for (int a : frontier()) {
            for (int b : candidates(a)) {
              push(a, b);
              grew = true;
              break;
            }
            if (grew) break;
          }
        }
        if (map_.size() > best.size()) best = current();
      }
    }
    return best;
  }

  // Returns false when a cap was hit before the search finished.
  bool exact(std::size_t floor) {
    best_size_ = floor;
    start_ = Clock::now();
    for (int a0 = 0; a0 < na_; ++a0) {
      reset();
      // Atoms before a0 were starts of earlier passes.
      for (int i = 0; i < a0; ++i) excluded_a_[i] = true;
      for (int b0 = 0; b0 < nb_; ++b0) {
        if (!compat(a0, b0)) continue;
        push(a0, b0);
        if (!recurse()) return false;
        pop();
      }
    }
    return true;
  }

  const std::vector<std::pair<int, int>> &best() const { return best_; }

private:
  int label_of(const Atom &atom) {
    const auto key = std::make_tuple(static_cast<int>(atom.element), atom.aromatic,
                                     atom.formal_charge, atom.isotope.value_or(-1));
    auto [it, inserted] = labels_.emplace(key, static_cast<int>(labels_.size()));
    return it->second;
  }

  bool compat(int a, int b) const { return compat_[a * nb_ + b]; }

  void reset() {
    map_a_.assign(na_, -1);
    map_b_.assign(nb_, -1);
    excluded_a_.assign(na_, false);
    map_.clear();
  }

  void push(int a, int b) {
    map_a_[a] = b;
    map_b_[b] = a;
    map_.emplace_back(a, b);
  }

  void pop() {
    auto [a, b] = map_.back();
    map_.pop_back();
    map_a_[a] = -1;
    map_b_[b] = -1;
  }

  std::vector<std::pair<int, int>> current() const {
    auto out = map_;
    std::sort(out.begin(), out.end());
    return out;
  }

  // Unmapped, unexcluded A atoms bonded to the mapped set, ascending.
  std::vector<int> frontier() const {
    std::vector<int> out;
    for (auto [a, b] : map_) {
      for (const Neighbor &nb : a_.neighbors(a)) {
        if (map_a_[nb.atom] < 0 && !excluded_a_[nb.atom]) out.push_back(nb.atom);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // B atoms `a` can map to while keeping the common subgraph induced.
  std::vector<int> candidates(int a) const {
    std::vector<int> out;
    for (int b = 0; b < nb_; ++b) {
      if (map_b_[b] >= 0 || !compat(a, b)) continue;
      bool ok = true;
      for (auto [ma, mb] : map_) {
        if (bonds_a_[a * na_ + ma] != bonds_b_[b * nb_ + mb]) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back(b);
    }
    return out;
  }

  std::size_t bound() const {
    std::vector<int> ca(num_labels_, 0), cb(num_labels_, 0);
    for (int i = 0; i < na_; ++i) {
      if (map_a_[i] < 0 && !excluded_a_[i]) ++ca[label_[i]];
    }
    for (int j = 0; j < nb_; ++j) {
      if (map_b_[j] < 0) ++cb[label_b_[j]];
    }
    std::size_t extra = 0;
    for (int l = 0; l < num_labels_; ++l) extra += std::min(ca[l], cb[l]);
    return map_.size() + extra;
  }

  bool out_of_budget() {
    ++nodes_;
    if (nodes_ > opts_.node_cap) return true;
    if ((nodes_ & 1023) == 0 && Clock::now() - start_ > opts_.time_cap) return true;
    return false;
  }

  using Key = std::pair<std::vector<int>, std::vector<int>>;

  // Rank sets of both sides, ordered so swapping the inputs gives the same
  // key for mirrored mappings.
  Key key() const {
    std::vector<int> ra, rb;
    for (auto [a, b] : map_) {
      ra.push_back(rank_a_[a]);
      rb.push_back(rank_b_[b]);
    }
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    return a_first_ ? Key{ra, rb} : Key{rb, ra};
  }

  void record_leaf() {
    if (map_.size() < best_size_) return;
    Key k = key();
    if (map_.size() > best_size_ || best_.empty() || k < best_key_) {
      best_size_ = map_.size();
      best_key_ = std::move(k);
      best_ = current();
    }
  }

  bool recurse() {
    if (out_of_budget()) return false;
    if (bound() < best_size_) return true;
    const std::vector<int> front = frontier();
    if (front.empty()) {
      record_leaf();
      return true;
    }
    const int a = front.front();
    for (int b : candidates(a)) {
      push(a, b);
      const bool ok = recurse();
      pop();
      if (!ok) return false;
    }
    excluded_a_[a] = true;
    const bool ok = recurse();
    excluded_a_[a] = false;
    return ok;
  }

  const Molecule &a_;
  const Molecule &b_;
  const int na_, nb_;
  std::vector<std::uint8_t> bonds_a_, bonds_b_;
  std::vector<int> rank_a_, rank_b_;
  const bool a_first_;
  const McsOptions &opts_;
  std::vector<bool> compat_;
  std::map<std::tuple<int, bool, int, int>, int> labels_;
  std::vector<int> label_, label_b_;
  int num_labels_ = 0;

  std::vector<int> map_a_, map_b_;
  std::vector<bool> excluded_a_;
  std::vector<std::pair<int, int>> map_;

  std::size_t best_size_ = 0;
  Key best_key_;
  std::vector<std::pair<int, int>> best_;
  std::int64_t nodes_ = 0;
  Clock::time_point start_;
};

std::string fragment_of(const Molecule &m, const std::vector<int> &atoms) {
  if (atoms.empty()) return {};
  return extract_fragment(m, atoms).canonical();
}

}  // namespace

McsResult mcs_decompose(const Molecule &before, const Molecule &after, const McsOptions &opts) {
  McsResult out;
  Search search(before, after, before.canonical() <= after.canonical(), opts);
  const auto greedy = search.greedy();
  const bool small = before.num_atoms() <= opts.exact_atom_limit && after.num_atoms() <= opts.exact_atom_limit;
  if (small && search.exact(greedy.size())) {
    out.mapping = search.best();
  } else {
    out.approximate = true;
    out.mapping = search.best().size() > greedy.size() ? search.best() : greedy;
  }

  std::vector<bool> in_a(before.num_atoms(), false), in_b(after.num_atoms(), false);
  for (auto [a, b] : out.mapping) {
    in_a[a] = true;
    in_b[b] = true;
  }
  std::vector<int> removed, added;
  for (int i = 0; i < before.num_atoms(); ++i) {
    if (!in_a[i]) removed.push_back(i);
  }
  for (int j = 0; j < after.num_atoms(); ++j) {
    if (!in_b[j]) added.push_back(j);
  }
  // Full mapping of non-identical molecules: only hydrogen counts differ, so
  // those atoms form the edit on both sides.
  if (removed.empty() && added.empty() && before.canonical() != after.canonical()) {
    for (auto [a, b] : out.mapping) {
      if (before.atom(a).hydrogens != after.atom(b).hydrogens) {
        removed.push_back(a);
        added.push_back(b);
      }
    }
    std::sort(removed.begin(), removed.end());
    std::sort(added.begin(), added.end());
  }
  out.removed_fragment = fragment_of(before, removed);
  out.added_fragment = fragment_of(after, added);
  return out;
}

}  // namespace memopt
