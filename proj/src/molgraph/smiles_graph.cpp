// SPDX-License-Identifier: Apache-2.0

#include "memopt/smiles_graph.hpp"

#include <cctype>
#include <map>
#include <string>

#include "memopt/error.hpp"

namespace memopt::smiles {
namespace {

[[noreturn]] void fail(ErrorCode code, std::string_view text, std::size_t pos,
                       std::string_view what) {
  throw Error(code, std::string(what) + " at position " + std::to_string(pos) + " in \""
                        + std::string(text) + "\"");
}

std::optional<Element> element_from_number(int z) {
  switch (z) {
  case 5:
  case 6:
  case 7:
  case 8:
  case 9:
  case 15:
  case 16:
  case 17:
  case 35:
  case 53:
    return static_cast<Element>(z);
  default:
    return std::nullopt;
  }
}

struct RingOpening {
  int atom;
  std::optional<BondOrder> order;
};

class GraphParser {
public:
  GraphParser(std::string_view text, const GraphOptions &options)
      : text_(text), options_(options) { }

  RawGraph run() {
    if (text_.empty())
      fail(ErrorCode::kSyntax, text_, 0, "empty SMILES");

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      switch (c) {
      case '(':
        if (prev_ < 0 || pending_)
          fail(ErrorCode::kSyntax, text_, pos_, "misplaced '('");
        branches_.push_back(prev_);
        ++pos_;
        break;
      case ')':
        if (branches_.empty() || pending_ || stereo_pending_)
          fail(ErrorCode::kSyntax, text_, pos_, "misplaced ')'");
        prev_ = branches_.back();
        branches_.pop_back();
        ++pos_;
        break;
      case '-':
        set_pending(BondOrder::kSingle);
        break;
      case '=':
        set_pending(BondOrder::kDouble);
        break;
      case '#':
        set_pending(BondOrder::kTriple);
        break;
      case ':':
        set_pending(BondOrder::kAromatic);
        break;
      case '/':
      case '\\':
        if (prev_ < 0 || pending_ || stereo_pending_)
          fail(ErrorCode::kSyntax, text_, pos_, "misplaced stereo bond");
        stereo_pending_ = true;
        ++pos_;
        break;
      case '.':
        fail(ErrorCode::kMultiFragment, text_, pos_, "multi-fragment SMILES");
      case '%':
        ring_closure(parse_ring_number());
        break;
      case '[':
        add_atom(parse_bracket());
        break;
      default:
        if (std::isdigit(static_cast<unsigned char>(c))) {
          ++pos_;
          ring_closure(c - '0');
        } else {
          add_atom(parse_organic());
        }
        break;
      }
    }

    if (pending_ || stereo_pending_)
      fail(ErrorCode::kSyntax, text_, pos_, "dangling bond");
    if (!branches_.empty())
      fail(ErrorCode::kSyntax, text_, pos_, "unclosed branch");
    if (!rings_.empty())
      fail(ErrorCode::kUnmatchedRing, text_, pos_,
           "ring closure " + std::to_string(rings_.begin()->first) + " never closed");
    return std::move(graph_);
  }

private:
  void set_pending(BondOrder order) {
    if (prev_ < 0 || pending_ || stereo_pending_)
      fail(ErrorCode::kSyntax, text_, pos_, "misplaced bond symbol");
    pending_ = order;
    ++pos_;
  }

  int parse_ring_number() {
    // '%' followed by exactly two digits.
    if (pos_ + 2 >= text_.size()
        || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))
        || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
      fail(ErrorCode::kSyntax, text_, pos_, "bad ring number");
    int n = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
    pos_ += 3;
    return n;
  }

  bool has_bond(int a, int b) const {
    for (const auto &bond : graph_.bonds) {
      if ((bond.begin == a && bond.end == b) || (bond.begin == b && bond.end == a))
        return true;
    }
    return false;
  }

  void ring_closure(int number) {
    if (prev_ < 0)
      fail(ErrorCode::kSyntax, text_, pos_, "ring closure before any atom");
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, RingOpening {prev_, pending_});
    } else {
      auto order = it->second.order;
      if (order && pending_ && *order != *pending_)
        fail(ErrorCode::kSyntax, text_, pos_, "conflicting ring bond orders");
      if (!order)
        order = pending_;
      const int other = it->second.atom;
      if (other == prev_ || has_bond(other, prev_))
        fail(ErrorCode::kSyntax, text_, pos_, "ring closure duplicates a bond");
      graph_.bonds.push_back({other, prev_, order});
      rings_.erase(it);
    }
    pending_.reset();
    stereo_pending_ = false;
  }

  void add_atom(RawAtom atom) {
    const int idx = static_cast<int>(graph_.atoms.size());
    graph_.atoms.push_back(atom);
    if (prev_ >= 0)
      graph_.bonds.push_back({prev_, idx, pending_});
    pending_.reset();
    stereo_pending_ = false;
    prev_ = idx;
  }

  RawAtom parse_organic() {
    const char c = text_[pos_];
    RawAtom atom;
    auto take = [&](Element e, bool aromatic, std::size_t len) {
      atom.element = e;
      atom.aromatic = aromatic;
      pos_ += len;
      return atom;
    };

    const char next = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
    switch (c) {
    case 'C':
      if (next == 'l')
        return take(Element::kCl, false, 2);
      return take(Element::kC, false, 1);
    case 'B':
      if (next == 'r')
        return take(Element::kBr, false, 2);
      return take(Element::kB, false, 1);
    case 'N':
      return take(Element::kN, false, 1);
    case 'O':
      return take(Element::kO, false, 1);
    case 'P':
      return take(Element::kP, false, 1);
    case 'S':
      return take(Element::kS, false, 1);
    case 'F':
      return take(Element::kF, false, 1);
    case 'I':
      return take(Element::kI, false, 1);
    case 'b':
      return take(Element::kB, true, 1);
    case 'c':
      return take(Element::kC, true, 1);
    case 'n':
      return take(Element::kN, true, 1);
    case 'o':
      return take(Element::kO, true, 1);
    case 'p':
      return take(Element::kP, true, 1);
    case 's':
      return take(Element::kS, true, 1);
    case '*':
      if (!options_.allow_wildcards)
        fail(ErrorCode::kUnsupportedAtom, text_, pos_, "wildcard atom");
      atom.any_aromaticity = true;
      ++pos_;
      return atom;
    case 'a':
      if (!options_.allow_wildcards)
        fail(ErrorCode::kSyntax, text_, pos_, "unexpected character 'a'");
      atom.wildcard_aromatic = true;
      atom.aromatic = true;
      ++pos_;
      return atom;
    default:
      fail(ErrorCode::kSyntax, text_, pos_, std::string("unexpected character '") + c + "'");
    }
  }

  int parse_uint() {
    int value = 0;
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + (text_[pos_] - '0');
      if (value > 100000)
        fail(ErrorCode::kSyntax, text_, start, "number out of range");
      ++pos_;
    }
    return pos_ == start ? -1 : value;
  }

  RawAtom parse_bracket() {
    const std::size_t open = pos_;
    ++pos_;
    RawAtom atom;
    atom.bracket = true;

    if (int iso = parse_uint(); iso >= 0) {
      if (iso == 0)
        fail(ErrorCode::kSyntax, text_, open, "isotope must be positive");
      atom.isotope = iso;
    }

    if (pos_ >= text_.size())
      fail(ErrorCode::kSyntax, text_, open, "unterminated bracket atom");

    const char c = text_[pos_];
    if (c == '#' && options_.allow_wildcards) {
      ++pos_;
      int z = parse_uint();
      auto e = element_from_number(z);
      if (!e)
        fail(ErrorCode::kUnsupportedAtom, text_, open, "unsupported atomic number");
      atom.element = e;
      atom.any_aromaticity = true;
    } else if (c == '*') {
      if (!options_.allow_wildcards)
        fail(ErrorCode::kUnsupportedAtom, text_, open, "wildcard atom");
      atom.any_aromaticity = true;
      ++pos_;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::string sym(1, c);
      ++pos_;
      if (pos_ < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_])))
        sym += text_[pos_++];
      auto e = element_from_symbol(sym);
      if (!e)
        fail(ErrorCode::kUnsupportedAtom, text_, open, "unsupported element " + sym);
      atom.element = e;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      std::string sym(1, c);
      ++pos_;
      if (pos_ < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_])))
        sym += text_[pos_++];
      if (sym.size() != 1 || std::string_view("bcnops").find(sym[0]) == std::string_view::npos)
        fail(ErrorCode::kUnsupportedAtom, text_, open, "unsupported aromatic element " + sym);
      sym[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sym[0])));
      atom.element = element_from_symbol(sym);
      atom.aromatic = true;
    } else {
      fail(ErrorCode::kSyntax, text_, open, "missing element in bracket atom");
    }

    // Chirality is accepted and dropped.
    if (pos_ < text_.size() && text_[pos_] == '@') {
      ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '@') {
        ++pos_;
      } else {
        while (pos_ < text_.size() && std::isupper(static_cast<unsigned char>(text_[pos_]))
               && text_[pos_] != 'H')
          ++pos_;
        parse_uint();
      }
    }

    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      int h = parse_uint();
      atom.hydrogens = h < 0 ? 1 : h;
    }

    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign = text_[pos_];
      int magnitude = 0;
      while (pos_ < text_.size() && text_[pos_] == sign) {
        ++magnitude;
        ++pos_;
      }
      if (magnitude == 1) {
        if (int n = parse_uint(); n >= 0)
          magnitude = n;
      }
      if (magnitude > 8)
        fail(ErrorCode::kSyntax, text_, open, "charge out of range");
      atom.formal_charge = sign == '+' ? magnitude : -magnitude;
    }

    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      if (parse_uint() < 0)
        fail(ErrorCode::kSyntax, text_, open, "bad atom class");
    }

    if (pos_ >= text_.size() || text_[pos_] != ']')
      fail(ErrorCode::kSyntax, text_, open, "unterminated bracket atom");
    ++pos_;
    return atom;
  }

  std::string_view text_;
  const GraphOptions &options_;
  std::size_t pos_ = 0;
  int prev_ = -1;
  std::optional<BondOrder> pending_;
  bool stereo_pending_ = false;
  std::vector<int> branches_;
  std::map<int, RingOpening> rings_;
  RawGraph graph_;
};

}  // namespace

RawGraph parse_graph(std::string_view text, const GraphOptions &options) {
  return GraphParser(text, options).run();
}

BondOrder resolve_order(const RawGraph &g, const RawBond &b) {
  if (b.order)
    return *b.order;
  const auto &a1 = g.atoms[b.begin];
  const auto &a2 = g.atoms[b.end];
  return a1.aromatic && a2.aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
}

}  // namespace memopt::smiles
