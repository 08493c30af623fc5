// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <set>

#include "memopt/chemfeat.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/smiles_graph.hpp"

namespace memopt {

FunctionalGroupSet::FunctionalGroupSet(std::set<std::string> tags,
                                       const FunctionalGroupCatalog &catalog)
    : tags_(std::move(tags)) {
  for (const std::string &t : tags_)
    if (!catalog.has_tag(t)) throw Error(ErrorCode::kConfig, "unknown functional group: " + t);
}

FunctionalGroupSet FunctionalGroupSet::unchecked(std::set<std::string> tags) {
  FunctionalGroupSet s;
  s.tags_ = std::move(tags);
  return s;
}

FunctionalGroupSet FunctionalGroupSet::minus(const FunctionalGroupSet &other) const {
  std::set<std::string> out;
  std::set_difference(tags_.begin(), tags_.end(), other.tags_.begin(), other.tags_.end(),
                      std::inserter(out, out.end()));
  return unchecked(std::move(out));
}

std::string FunctionalGroupSet::joined(std::string_view sep) const {
  std::string out;
  for (const std::string &t : tags_) {
    if (!out.empty()) out += sep;
    out += t;
  }
  return out;
}

double jaccard(const FunctionalGroupSet &a, const FunctionalGroupSet &b) {
  std::size_t common = 0;
  for (const std::string &t : a.tags()) common += b.contains(t) ? 1 : 0;
  const std::size_t uni = a.size() + b.size() - common;
  return uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni);
}

Pattern parse_pattern(std::string_view smiles) {
  const smiles::RawGraph g = smiles::parse_graph(smiles, {.allow_wildcards = true});
  Pattern p;
  p.source = std::string(smiles);
  for (const smiles::RawAtom &ra : g.atoms) {
    PatternAtom pa;
    pa.element = ra.element;
    if (ra.any_aromaticity)
      pa.aromaticity = PatternAtom::Aromaticity::kAny;
    else if (ra.wildcard_aromatic || ra.aromatic)
      pa.aromaticity = PatternAtom::Aromaticity::kAromatic;
    pa.min_hydrogens = ra.hydrogens.value_or(0);
    if (ra.bracket || ra.element) pa.formal_charge = ra.formal_charge;
    p.atoms.push_back(pa);
  }
  for (const smiles::RawBond &rb : g.bonds) p.bonds.push_back({rb.begin, rb.end, rb.order});
  return p;
}

namespace {

bool atom_matches(const PatternAtom &pa, const Atom &a) {
  if (pa.element && *pa.element != a.element) return false;
  switch (pa.aromaticity) {
    case PatternAtom::Aromaticity::kAliphatic:
      if (a.aromatic) return false;
      break;
    case PatternAtom::Aromaticity::kAromatic:
      if (!a.aromatic) return false;
      break;
    case PatternAtom::Aromaticity::kAny:
      break;
  }
  if (a.hydrogens < pa.min_hydrogens) return false;
  return !pa.formal_charge || *pa.formal_charge == a.formal_charge;
}

bool bond_matches(const PatternBond &pb, BondOrder order) {
  if (pb.order) return *pb.order == order;
  return order == BondOrder::kSingle || order == BondOrder::kAromatic;
}

class Matcher {
public:
  Matcher(const Pattern &p, const Molecule &m): p_(p), m_(m) {
    const int n = static_cast<int>(p.atoms.size());
    adj_.assign(n, {});
    for (int b = 0; b < static_cast<int>(p.bonds.size()); ++b) {
      adj_[p.bonds[b].begin].push_back(b);
      adj_[p.bonds[b].end].push_back(b);
    }
    // Breadth-first order so every atom after the first has a mapped parent.
    std::vector<bool> seen(n, false);
    parent_.assign(n, -1);
    if (n > 0) {
      order_.push_back(0);
      seen[0] = true;
    }
    for (std::size_t k = 0; k < order_.size(); ++k) {
      const int u = order_[k];
      for (int b : adj_[u]) {
        const int v = p.bonds[b].begin == u ? p.bonds[b].end : p.bonds[b].begin;
        if (!seen[v]) {
          seen[v] = true;
          parent_[v] = u;
          order_.push_back(v);
        }
      }
    }
    map_.assign(n, -1);
    used_.assign(m.num_atoms(), false);
  }

  std::vector<std::vector<int>> run() {
    if (!order_.empty()) extend(0);
    return {found_.begin(), found_.end()};
  }

private:
  bool feasible(int pu, int t) const {
    if (used_[t] || !atom_matches(p_.atoms[pu], m_.atom(t))) return false;
    if (m_.degree(t) < static_cast<int>(adj_[pu].size())) return false;
    for (int b : adj_[pu]) {
      const PatternBond &pb = p_.bonds[b];
      const int pv = pb.begin == pu ? pb.end : pb.begin;
      if (map_[pv] < 0) continue;
      const int tb = m_.find_bond(t, map_[pv]);
      if (tb < 0 || !bond_matches(pb, m_.bond(tb).order)) return false;
    }
    return true;
  }

  void extend(std::size_t k) {
    if (k == order_.size()) {
      std::vector<int> atoms(map_.begin(), map_.end());
      std::sort(atoms.begin(), atoms.end());
      found_.insert(std::move(atoms));
      return;
    }
    const int pu = order_[k];
    auto place = [&](int t) {
      if (!feasible(pu, t)) return;
      map_[pu] = t;
      used_[t] = true;
      extend(k + 1);
      used_[t] = false;
      map_[pu] = -1;
    };
    if (parent_[pu] < 0) {
      for (int t = 0; t < m_.num_atoms(); ++t) place(t);
    } else {
      for (const Neighbor &nb : m_.neighbors(map_[parent_[pu]])) place(nb.atom);
    }
  }

  const Pattern &p_;
  const Molecule &m_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> order_;
  std::vector<int> parent_;
  std::vector<int> map_;
  std::vector<bool> used_;
  std::set<std::vector<int>> found_;
};

bool overlaps(const std::vector<int> &a, const std::vector<int> &b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return false;
}

}  // namespace

std::vector<std::vector<int>> match_pattern(const Pattern &pattern, const Molecule &m) {
  return Matcher(pattern, m).run();
}

const FunctionalGroupCatalog &FunctionalGroupCatalog::defaults() {
  static const FunctionalGroupCatalog catalog = parse(shipped_data("fg_catalog.tsv"));
  return catalog;
}

FunctionalGroupCatalog FunctionalGroupCatalog::parse(std::string_view text) {
  FunctionalGroupCatalog c;
  for (const TsvRow &row : parse_tsv(text)) {
    const auto where = "fg catalog line " + std::to_string(row.line);
    if (row.fields.size() < 2 || row.fields.size() > 3)
      throw Error(ErrorCode::kConfig, where + ": expected tag, pattern, suppresses");
    CatalogEntry e;
    e.tag = row.fields[0];
    try {
      e.pattern = parse_pattern(row.fields[1]);
    } catch (const Error &err) {
      throw Error(ErrorCode::kConfig, where + ": " + err.what());
    }
    if (row.fields.size() == 3) {
      std::string_view sup = row.fields[2];
      constexpr std::string_view kPrefix = "suppresses:";
      if (!sup.starts_with(kPrefix))
        throw Error(ErrorCode::kConfig, where + ": third column must start with suppresses:");
      sup.remove_prefix(kPrefix.size());
      while (!sup.empty()) {
        const auto comma = sup.find(',');
        std::string_view tag = trim(sup.substr(0, comma));
        if (!tag.empty()) e.suppresses.emplace_back(tag);
        if (comma == std::string_view::npos) break;
        sup.remove_prefix(comma + 1);
      }
    }
    if (!c.has_tag(e.tag)) c.tags_.push_back(e.tag);
    c.entries_.push_back(std::move(e));
  }
  for (const CatalogEntry &e : c.entries_)
    for (const std::string &s : e.suppresses)
      if (!c.has_tag(s))
        throw Error(ErrorCode::kConfig, "fg catalog: " + e.tag + " suppresses unknown tag " + s);
  return c;
}

bool FunctionalGroupCatalog::has_tag(std::string_view tag) const {
  return std::find(tags_.begin(), tags_.end(), tag) != tags_.end();
}

FunctionalGroupSet FunctionalGroupCatalog::detect(const Molecule &m) const {
  std::map<std::string, std::vector<std::vector<int>>, std::less<>> matches;
  std::map<std::string, std::set<std::string>, std::less<>> suppressors;
  for (const CatalogEntry &e : entries_) {
    auto found = match_pattern(e.pattern, m);
    auto &all = matches[e.tag];
    all.insert(all.end(), found.begin(), found.end());
    for (const std::string &s : e.suppresses) suppressors[s].insert(e.tag);
  }
  std::set<std::string> tags;
  for (const auto &[tag, list] : matches) {
    const auto sup = suppressors.find(tag);
    for (const std::vector<int> &match : list) {
      bool suppressed = false;
      if (sup != suppressors.end()) {
        for (const std::string &s : sup->second) {
          for (const std::vector<int> &other : matches[s]) {
            if (overlaps(match, other)) {
              suppressed = true;
              break;
            }
          }
          if (suppressed) break;
        }
      }
      if (!suppressed) {
        tags.insert(tag);
        break;
      }
    }
  }
  return FunctionalGroupSet::unchecked(std::move(tags));
}

}  // namespace memopt
