// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memopt/molgraph.hpp"

namespace memopt {

// Fixed-width bit vector of hashed circular atom environments.
class Fingerprint {
public:
  Fingerprint() = default;
  Fingerprint(int width, int radius);
  static Fingerprint from_words(int width, int radius, std::vector<std::uint64_t> words);

  int width() const { return width_; }
  int radius() const { return radius_; }
  int popcount() const { return popcount_; }
  std::span<const std::uint64_t> words() const { return words_; }

  bool test(int bit) const { return (words_[bit >> 6] >> (bit & 63)) & 1U; }
  void set(int bit);
  std::vector<int> on_bits() const;

  friend bool operator==(const Fingerprint &a, const Fingerprint &b) {
    return a.width_ == b.width_ && a.radius_ == b.radius_ && a.words_ == b.words_;
  }

private:
  int width_ = 0;
  int radius_ = 0;
  int popcount_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr int kDefaultFpRadius = 2;
inline constexpr int kDefaultFpWidth = 2048;

// Morgan-style fingerprint. Each atom starts from a hash of its invariants
// (element, heavy degree, hydrogens, charge, aromaticity, ring membership,
// isotope); iteration k rehashes (k, own hash, sorted (bond order, neighbour
// hash) pairs). Every identifier from iterations 0..radius sets bit
// `hash mod width`. `width` must be a power of two.
Fingerprint morgan_fp(const Molecule &m, int radius = kDefaultFpRadius,
                      int width = kDefaultFpWidth);

// |a & b| / |a | b|, 1.0 when both are empty. Throws kWidthMismatch when
// width or radius differ.
double tanimoto(const Fingerprint &a, const Fingerprint &b);

// Tanimoto given both popcounts and the intersection size.
inline double tanimoto_from_counts(int pa, int pb, int common) {
  const int uni = pa + pb - common;
  return uni == 0 ? 1.0 : static_cast<double>(common) / uni;
}

int intersection_count(const Fingerprint &a, const Fingerprint &b);

// Tanimoto similarity of two molecules under the default fingerprint.
double similarity(const Molecule &a, const Molecule &b);

// ---------------------------------------------------------------------------

class FunctionalGroupCatalog;

// Tags drawn from a catalog; kept sorted.
class FunctionalGroupSet {
public:
  FunctionalGroupSet() = default;
  // Throws kConfig for tags the catalog does not know.
  FunctionalGroupSet(std::set<std::string> tags, const FunctionalGroupCatalog &catalog);
  static FunctionalGroupSet unchecked(std::set<std::string> tags);

  const std::set<std::string> &tags() const { return tags_; }
  bool contains(std::string_view tag) const { return tags_.count(std::string(tag)) > 0; }
  bool empty() const { return tags_.empty(); }
  std::size_t size() const { return tags_.size(); }

  FunctionalGroupSet minus(const FunctionalGroupSet &other) const;
  std::string joined(std::string_view sep = ", ") const;

  friend bool operator==(const FunctionalGroupSet &, const FunctionalGroupSet &) = default;

private:
  std::set<std::string> tags_;
};

// |a ∩ b| / |a ∪ b|, 1.0 when both are empty.
double jaccard(const FunctionalGroupSet &a, const FunctionalGroupSet &b);

struct PatternAtom {
  enum class Aromaticity { kAliphatic, kAromatic, kAny };

  std::optional<Element> element;  // empty: any element
  Aromaticity aromaticity = Aromaticity::kAliphatic;
  int min_hydrogens = 0;
  std::optional<int> formal_charge;  // empty: any charge
};

struct PatternBond {
  int begin;
  int end;
  std::optional<BondOrder> order;  // empty: single or aromatic
};

struct Pattern {
  std::string source;
  std::vector<PatternAtom> atoms;
  std::vector<PatternBond> bonds;
};

Pattern parse_pattern(std::string_view smiles);

// All distinct atom sets (sorted target indices) that embed `pattern` in `m`.
std::vector<std::vector<int>> match_pattern(const Pattern &pattern, const Molecule &m);

struct CatalogEntry {
  std::string tag;
  Pattern pattern;
  std::vector<std::string> suppresses;
};

// Parsed `tag<TAB>pattern<TAB>suppresses:tag,tag` file. A tag may repeat
// across lines; any of its patterns can set it.
class FunctionalGroupCatalog {
public:
  static const FunctionalGroupCatalog &defaults();
  static FunctionalGroupCatalog parse(std::string_view text);

  const std::vector<CatalogEntry> &entries() const { return entries_; }
  // Distinct tags in file order.
  const std::vector<std::string> &tags() const { return tags_; }
  bool has_tag(std::string_view tag) const;

  // A tag is reported when at least one of its matches shares no atom with
  // any match of a tag that suppresses it.
  FunctionalGroupSet detect(const Molecule &m) const;

private:
  std::vector<CatalogEntry> entries_;
  std::vector<std::string> tags_;
};

inline FunctionalGroupSet detect_functional_groups(const Molecule &m) {
  return FunctionalGroupCatalog::defaults().detect(m);
}

// ---------------------------------------------------------------------------

struct DescriptorVector {
  double mw = 0;
  int ring_count = 0;
  int hbd = 0;
  int hba = 0;
  double psa_lite = 0;
  int rotatable_bonds = 0;
};

struct DescriptorDelta {
  double mw = 0;
  int ring_count = 0;
  int hbd = 0;
  int hba = 0;
  double psa_lite = 0;
  int rotatable_bonds = 0;
};

DescriptorDelta operator-(const DescriptorVector &after, const DescriptorVector &before);

// `key<TAB>value` table.
class ValueTable {
public:
  static ValueTable parse(std::string_view text, std::string_view what);
  std::optional<double> find(std::string_view key) const;
  double at(std::string_view key) const;  // throws kConfig
  const std::map<std::string, double, std::less<>> &values() const { return values_; }

private:
  std::map<std::string, double, std::less<>> values_;
};

const ValueTable &atomic_mass_table();
const ValueTable &psa_table();

// Key into the PSA table for an N or O atom, e.g. "NH2", "OH0=", "nH1".
std::string psa_class(const Molecule &m, int atom);

DescriptorVector descriptors(const Molecule &m);

}  // namespace memopt
