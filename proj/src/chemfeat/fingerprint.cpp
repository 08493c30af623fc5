// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <utility>

#include "memopt/chemfeat.hpp"
#include "memopt/error.hpp"
#include "memopt/random.hpp"

namespace memopt {

namespace {

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

std::uint64_t atom_invariant(const Molecule &m, int i) {
  const Atom &a = m.atom(i);
  std::uint64_t h = splitmix64(0x6d6f7267616e3030ULL);
  h = hash_combine(h, static_cast<std::uint64_t>(atomic_number(a.element)));
  h = hash_combine(h, static_cast<std::uint64_t>(m.degree(i)));
  h = hash_combine(h, static_cast<std::uint64_t>(a.hydrogens));
  h = hash_combine(h, static_cast<std::uint64_t>(a.formal_charge + 16));
  h = hash_combine(h, a.aromatic ? 1U : 0U);
  h = hash_combine(h, m.atom_in_ring(i) ? 1U : 0U);
  h = hash_combine(h, static_cast<std::uint64_t>(a.isotope.value_or(0)));
  return h;
}

}  // namespace

Fingerprint::Fingerprint(int width, int radius)
    : width_(width), radius_(radius), words_((width + 63) / 64, 0) {
  if (width <= 0 || !std::has_single_bit(static_cast<unsigned>(width)))
    throw Error(ErrorCode::kConfig, "fingerprint width must be a power of two");
  if (radius < 0) throw Error(ErrorCode::kConfig, "fingerprint radius must be >= 0");
}

Fingerprint Fingerprint::from_words(int width, int radius, std::vector<std::uint64_t> words) {
  Fingerprint fp(width, radius);
  if (words.size() != fp.words_.size())
    throw Error(ErrorCode::kWidthMismatch, "word count does not match width");
  if (width < 64 && (words[0] >> width) != 0)
    throw Error(ErrorCode::kWidthMismatch, "bits set beyond width");
  fp.words_ = std::move(words);
  for (std::uint64_t w : fp.words_) fp.popcount_ += std::popcount(w);
  return fp;
}

void Fingerprint::set(int bit) {
  std::uint64_t &w = words_[bit >> 6];
  const std::uint64_t mask = std::uint64_t{1} << (bit & 63);
  if (!(w & mask)) {
    w |= mask;
    ++popcount_;
  }
}

std::vector<int> Fingerprint::on_bits() const {
  std::vector<int> bits;
  bits.reserve(popcount_);
  for (std::size_t k = 0; k < words_.size(); ++k) {
    std::uint64_t w = words_[k];
    while (w) {
      bits.push_back(static_cast<int>(k * 64) + std::countr_zero(w));
      w &= w - 1;
    }
  }
  return bits;
}

Fingerprint morgan_fp(const Molecule &m, int radius, int width) {
  Fingerprint fp(width, radius);
  const std::uint64_t mask = static_cast<std::uint64_t>(width) - 1;
  const int n = m.num_atoms();
  std::vector<std::uint64_t> ids(n);
  for (int i = 0; i < n; ++i) {
    ids[i] = atom_invariant(m, i);
    fp.set(static_cast<int>(ids[i] & mask));
  }
  std::vector<std::uint64_t> next(n);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
  for (int iter = 1; iter <= radius; ++iter) {
    for (int i = 0; i < n; ++i) {
      env.clear();
      for (const Neighbor &nb : m.neighbors(i))
        env.emplace_back(static_cast<std::uint64_t>(m.bond(nb.bond).order), ids[nb.atom]);
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(splitmix64(static_cast<std::uint64_t>(iter)), ids[i]);
      for (const auto &[order, id] : env) h = hash_combine(hash_combine(h, order), id);
      next[i] = h;
      fp.set(static_cast<int>(h & mask));
    }
    ids.swap(next);
  }
  return fp;
}

int intersection_count(const Fingerprint &a, const Fingerprint &b) {
  if (a.width() != b.width() || a.radius() != b.radius())
    throw Error(ErrorCode::kWidthMismatch, "fingerprints differ in width or radius");
  int common = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t k = 0; k < wa.size(); ++k) common += std::popcount(wa[k] & wb[k]);
  return common;
}

double tanimoto(const Fingerprint &a, const Fingerprint &b) {
  const int common = intersection_count(a, b);
  return tanimoto_from_counts(a.popcount(), b.popcount(), common);
}

double similarity(const Molecule &a, const Molecule &b) {
  return tanimoto(morgan_fp(a), morgan_fp(b));
}

}  // namespace memopt
