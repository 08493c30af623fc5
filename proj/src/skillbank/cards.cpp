// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <spdlog/spdlog.h>

#include "card_json.hpp"
#include "json.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/format.hpp"
#include "memopt/skillbank.hpp"
#include "memopt/wire.hpp"

namespace memopt {
namespace {

// Isotope label marking the atoms a fragment was cut from.
constexpr int kAttachMark = 999;

struct NamedFragment {
  const char *smiles;  // attachment atoms carry kAttachMark
  const char *name;
};

constexpr NamedFragment kNamedFragments[] = {
    {"[999FH]", "fluorine (-F)"},
    {"[999ClH]", "chlorine (-Cl)"},
    {"[999BrH]", "bromine (-Br)"},
    {"[999IH]", "iodine (-I)"},
    {"[999CH4]", "methyl (-CH3)"},
    {"[999OH2]", "hydroxyl (-OH)"},
    {"[999NH3]", "amino (-NH2)"},
    {"[999SH2]", "thiol (-SH)"},
    {"[999OH]C", "methoxy (-OCH3)"},
    {"[999CH3]O", "hydroxymethyl (-CH2OH)"},
    {"[999CH3]C", "ethyl (-C2H5)"},
    {"[999SH]C", "methylthio (-SCH3)"},
    {"[999NH2]C", "methylamino (-NHCH3)"},
    {"[999NH](C)C", "dimethylamino (-N(CH3)2)"},
    {"[999CH](F)(F)F", "trifluoromethyl (-CF3)"},
    {"[999CH]#N", "cyano (-CN)"},
    {"[999CH2]=O", "formyl (-CHO)"},
    {"[999CH](=O)C", "acetyl (-COCH3)"},
    {"[999CH](=O)O", "carboxyl (-COOH)"},
    {"[999CH](=O)OC", "methyl ester (-COOCH3)"},
    {"[999CH](=O)N", "carboxamide (-CONH2)"},
    {"[999NH2]C(C)=O", "acetamido (-NHCOCH3)"},
    {"[999CH2](C)C", "isopropyl (-CH(CH3)2)"},
    {"[999CH](C)(C)C", "tert-butyl (-C(CH3)3)"},
    {"[999NH2+](=O)[O-]", "nitro (-NO2)"},
    {"[999cH]1ccccc1", "phenyl (-C6H5)"},
    {"[999cH]1ccc(F)cc1", "fluorophenyl (-C6H4F)"},
    {"[999cH]1ccc(Cl)cc1", "chlorophenyl (-C6H4Cl)"},
    {"[999CH]1CC1", "cyclopropyl (-C3H5)"},
    {"[999SH](=O)(=O)N", "sulfonamide"},
};

struct NamedRing {
  const char *smiles;
  const char *name;
};

constexpr NamedRing kNamedRings[] = {
    {"c1ccccc1", "benzene"},     {"c1ccncc1", "pyridine"},     {"c1cncnc1", "pyrimidine"},
    {"c1cnccn1", "pyrazine"},    {"c1ccsc1", "thiophene"},     {"c1ccoc1", "furan"},
    {"c1cc[nH]c1", "pyrrole"},   {"c1c[nH]cn1", "imidazole"},  {"c1cscn1", "thiazole"},
    {"c1cocn1", "oxazole"},      {"C1CCCCC1", "cyclohexane"},  {"C1CCCC1", "cyclopentane"},
    {"C1CC1", "cyclopropane"},   {"C1CCNCC1", "piperidine"},   {"C1CNCCN1", "piperazine"},
    {"C1COCCN1", "morpholine"},  {"C1CCNC1", "pyrrolidine"},   {"C1CCOC1", "tetrahydrofuran"},
};

template <typename Entry, std::size_t N>
const std::map<std::string, std::string> &name_table(const Entry (&entries)[N]) {
  static const std::map<std::string, std::string> table = [&] {
    std::map<std::string, std::string> out;
    for (const Entry &e : entries) out.emplace(canonical_smiles(e.smiles), e.name);
    return out;
  }();
  return table;
}

struct Side {
  std::vector<std::string> names;  // empty string for unnamed components
  std::vector<std::string> components;
};

// Splits `atoms` into connected components and names each one by its
// canonical form with the cut atoms marked. Only components hanging off a
// single bond are named.
Side describe_side(const Molecule &m, const std::vector<int> &atoms, const std::vector<bool> &kept,
                   int *aromatic_sites, int *aliphatic_sites) {
  Side side;
  if (atoms.empty()) return side;
  std::vector<Atom> marked(m.atoms().begin(), m.atoms().end());
  std::vector<bool> in_set(m.num_atoms(), false);
  std::vector<int> cut_bonds(m.num_atoms(), 0);
  for (int a : atoms) in_set[a] = true;
  for (int a : atoms) {
    for (const Neighbor &nb : m.neighbors(a)) {
      if (!kept[nb.atom]) continue;
      marked[a].isotope = kAttachMark;
      ++cut_bonds[a];
      ++(m.atom(nb.atom).aromatic ? *aromatic_sites : *aliphatic_sites);
    }
  }
  const Molecule marked_mol =
      Molecule::from_graph(std::move(marked), std::vector<Bond>(m.bonds().begin(), m.bonds().end()));

  const auto &table = name_table(kNamedFragments);
  std::vector<bool> seen(m.num_atoms(), false);
  std::vector<std::pair<std::string, std::string>> parts;  // (canonical, name)
  for (int start : atoms) {
    if (seen[start]) continue;
    std::vector<int> comp{start};
    seen[start] = true;
    int cuts = 0;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      cuts += cut_bonds[comp[i]];
      for (const Neighbor &nb : m.neighbors(comp[i])) {
        if (in_set[nb.atom] && !seen[nb.atom]) {
          seen[nb.atom] = true;
          comp.push_back(nb.atom);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    const std::string key = extract_fragment(marked_mol, comp).canonical();
    auto it = cuts == 1 ? table.find(key) : table.end();
    parts.emplace_back(extract_fragment(m, comp).canonical(), it == table.end() ? "" : it->second);
  }
  std::sort(parts.begin(), parts.end());
  for (auto &[c, n] : parts) {
    side.components.push_back(std::move(c));
    side.names.push_back(std::move(n));
  }
  return side;
}

std::string first_tag(const FunctionalGroupSet &set) {
  for (const std::string &tag : FunctionalGroupCatalog::defaults().tags()) {
    if (set.contains(tag)) return tag;
  }
  return set.empty() ? std::string() : *set.tags().begin();
}

// Component names; a lone unnamed component carries the leading
// functional-group change of its side.
std::vector<std::string> display_names(const Side &side, const FunctionalGroupSet &fg_change) {
  std::string tag = first_tag(fg_change);
  std::replace(tag.begin(), tag.end(), '_', ' ');
  std::vector<std::string> out;
  for (std::size_t i = 0; i < side.names.size(); ++i) {
    if (!side.names[i].empty()) {
      out.push_back(side.names[i]);
    } else if (side.names.size() == 1 && !tag.empty()) {
      out.push_back("the " + side.components[i] + " group (" + tag + ")");
    } else {
      out.push_back("the " + side.components[i] + " group");
    }
  }
  return out;
}

std::string join_names(const std::vector<std::string> &names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
    out += names[i];
  }
  return out;
}

std::string core_name(const std::string &canonical) {
  if (canonical.empty()) return "an acyclic chain";
  const auto &table = name_table(kNamedRings);
  auto it = table.find(canonical);
  return it == table.end() ? canonical : it->second;
}

}  // namespace

std::string_view modification_type_name(ModificationType t) {
  switch (t) {
  case ModificationType::kAddition: return "addition";
  case ModificationType::kRemoval: return "removal";
  case ModificationType::kReplacement: return "replacement";
  case ModificationType::kScaffoldHop: return "scaffold_hop";
  }
  return "replacement";
}

std::string_view scaffold_type_name(ScaffoldType t) {
  switch (t) {
  case ScaffoldType::kUnchanged: return "unchanged";
  case ScaffoldType::kRingRemoval: return "ring_removal";
  case ScaffoldType::kRingAddition: return "ring_addition";
  case ScaffoldType::kScaffoldReplacement: return "scaffold_replacement";
  case ScaffoldType::kScaffoldHop: return "scaffold_hop";
  }
  return "unchanged";
}

ModificationType modification_type_from_name(std::string_view name) {
  for (auto t : {ModificationType::kAddition, ModificationType::kRemoval,
                 ModificationType::kReplacement, ModificationType::kScaffoldHop}) {
    if (modification_type_name(t) == name) return t;
  }
  throw Error(ErrorCode::kConfig, "unknown modification type '" + std::string(name) + "'");
}

ScaffoldType scaffold_type_from_name(std::string_view name) {
  for (auto t : {ScaffoldType::kUnchanged, ScaffoldType::kRingRemoval, ScaffoldType::kRingAddition,
                 ScaffoldType::kScaffoldReplacement, ScaffoldType::kScaffoldHop}) {
    if (scaffold_type_name(t) == name) return t;
  }
  throw Error(ErrorCode::kConfig, "unknown scaffold type '" + std::string(name) + "'");
}

EditCard build_edit_card(const Molecule &before, const Molecule &after, double score_before,
                         double score_after, const McsOptions &opts) {
  EditCard card;
  card.before = before.canonical();
  card.after = after.canonical();
  card.score_before = score_before;
  card.score_after = score_after;

  const McsResult mcs = mcs_decompose(before, after, opts);
  card.removed_fragment = mcs.removed_fragment;
  card.added_fragment = mcs.added_fragment;
  card.mcs_approximate = mcs.approximate;

  std::vector<bool> kept_a(before.num_atoms(), false), kept_b(after.num_atoms(), false);
  for (auto [a, b] : mcs.mapping) {
    kept_a[a] = true;
    kept_b[b] = true;
  }
  std::vector<int> removed, added;
  for (int i = 0; i < before.num_atoms(); ++i) {
    if (!kept_a[i]) removed.push_back(i);
  }
  for (int j = 0; j < after.num_atoms(); ++j) {
    if (!kept_b[j]) added.push_back(j);
  }

  const Scaffold sa = scaffold_of(before);
  const Scaffold sb = scaffold_of(after);
  card.scaffold_before = sa.core.canonical();
  card.scaffold_after = sb.core.canonical();
  if (card.scaffold_before == card.scaffold_after) {
    card.scaffold_type = ScaffoldType::kUnchanged;
  } else if (sb.ring_count < sa.ring_count) {
    card.scaffold_type = ScaffoldType::kRingRemoval;
  } else if (sb.ring_count > sa.ring_count) {
    card.scaffold_type = ScaffoldType::kRingAddition;
  } else {
    const bool covered =
        std::all_of(sa.atoms.begin(), sa.atoms.end(), [&](int a) { return kept_a[a]; });
    card.scaffold_type = covered ? ScaffoldType::kScaffoldReplacement : ScaffoldType::kScaffoldHop;
  }

  if (card.removed_fragment.empty() && !card.added_fragment.empty()) {
    card.modification_type = ModificationType::kAddition;
  } else if (!card.removed_fragment.empty() && card.added_fragment.empty()) {
    card.modification_type = ModificationType::kRemoval;
  } else {
    card.modification_type = ModificationType::kReplacement;
  }
  if (card.scaffold_type == ScaffoldType::kScaffoldHop)
    card.modification_type = ModificationType::kScaffoldHop;

  const FunctionalGroupSet fg_before = detect_functional_groups(before);
  const FunctionalGroupSet fg_after = detect_functional_groups(after);
  card.fg_removed = fg_before.minus(fg_after);
  card.fg_added = fg_after.minus(fg_before);
  card.deltas = descriptors(after) - descriptors(before);

  // Fragment names only make sense for the atoms the fragments were built
  // from; hydrogen-only edits have no fragment atoms outside the mapping.
  if (!removed.empty() || !added.empty()) {
    const Side rs = describe_side(before, removed, kept_a, &card.attachment.aromatic_sites,
                                  &card.attachment.aliphatic_sites);
    const Side as = describe_side(after, added, kept_b, &card.attachment.aromatic_sites,
                                  &card.attachment.aliphatic_sites);
    card.removed_names = display_names(rs, card.fg_removed);
    card.added_names = display_names(as, card.fg_added);
  } else {
    if (!card.removed_fragment.empty()) card.removed_names = {"the " + card.removed_fragment + " group"};
    if (!card.added_fragment.empty()) card.added_names = {"the " + card.added_fragment + " group"};
  }
  return card;
}

std::vector<EditCard> harvest(const std::vector<std::vector<ScoredState>> &rollouts, double delta,
                              const McsOptions &opts) {
  std::map<std::pair<std::string, std::string>, EditCard> merged;
  for (const auto &states : rollouts) {
    for (std::size_t i = 1; i < states.size(); ++i) {
      const ScoredState &b = states[i - 1];
      const ScoredState &a = states[i];
      if (!(a.score - b.score > delta)) continue;
      const auto mb = try_parse_smiles(b.smiles);
      const auto ma = try_parse_smiles(a.smiles);
      if (!mb || !ma) {
        spdlog::warn("harvest: skipping unparsable transition {} -> {}", b.smiles, a.smiles);
        continue;
      }
      if (mb->canonical() == ma->canonical()) continue;
      const auto key = std::make_pair(mb->canonical(), ma->canonical());
      auto it = merged.find(key);
      if (it != merged.end()) {
        if (a.score - b.score > it->second.delta()) {
          it->second.score_before = b.score;
          it->second.score_after = a.score;
        }
        continue;
      }
      merged.emplace(key, build_edit_card(*mb, *ma, b.score, a.score, opts));
    }
  }
  std::vector<EditCard> out;
  out.reserve(merged.size());
  for (auto &[key, card] : merged) out.push_back(std::move(card));
  return out;
}

std::string summarize_template(const EditCard &card, std::string_view /*task*/) {
  const bool aromatic = card.attachment.aromatic_sites > 0 && card.attachment.aliphatic_sites == 0;
  const std::string removed = join_names(card.removed_names);
  const std::string added = join_names(card.added_names);
  const std::string effect = " to improve the target score.";
  switch (card.modification_type) {
  case ModificationType::kScaffoldHop:
    return "Replace the " + core_name(card.scaffold_before) + " core with " +
           core_name(card.scaffold_after) + effect;
  case ModificationType::kAddition:
    return "Add " + added + (aromatic ? " to the aromatic ring" : "") + effect;
  case ModificationType::kRemoval:
    return "Remove " + removed + (aromatic ? " from the aromatic ring" : "") + effect;
  case ModificationType::kReplacement:
    break;
  }
  // Ring openings and closures often map to the same atoms on both sides;
  // the core change is then the informative part.
  if (card.removed_fragment == card.added_fragment && card.scaffold_type != ScaffoldType::kUnchanged)
    return "Replace the " + core_name(card.scaffold_before) + " core with " + core_name(card.scaffold_after) + effect;
  if (removed.empty() || added.empty()) return "Modify the structure" + effect;
  // Groups named on both sides only moved; the multiset difference is what
  // actually changed.
  auto minus = [](const std::vector<std::string> &from, const std::vector<std::string> &take) {
    std::map<std::string, int> pending;
    for (const std::string &n : take) ++pending[n];
    std::vector<std::string> out;
    for (const std::string &n : from) {
      if (pending[n] > 0) {
        --pending[n];
      } else {
        out.push_back(n);
      }
    }
    return out;
  };
  const std::vector<std::string> only_gone = minus(card.removed_names, card.added_names);
  const std::vector<std::string> only_came = minus(card.added_names, card.removed_names);
  const std::string ring = aromatic ? " on the aromatic ring" : "";
  if (only_gone.empty() && only_came.empty()) return "Move " + removed + " to a different position" + ring + effect;
  if (only_gone.empty()) return "Add " + join_names(only_came) + ring + effect;
  if (only_came.empty()) return "Remove " + join_names(only_gone) + ring + effect;
  return "Replace " + join_names(only_gone) + " with " + join_names(only_came) + ring + effect;
}

namespace {

using Field = std::variant<std::string, double, int>;

std::string render_field(const Field &value, std::string_view spec, std::string_view name) {
  if (const auto *s = std::get_if<std::string>(&value)) {
    if (!spec.empty()) throw Error(ErrorCode::kConfig, "format spec on text field " + std::string(name));
    return *s;
  }
  if (const auto *i = std::get_if<int>(&value)) {
    if (spec == "+d") return (*i >= 0 ? "+" : "") + std::to_string(*i);
    if (spec.empty() || spec == "d") return std::to_string(*i);
    throw Error(ErrorCode::kConfig, "unsupported integer format '" + std::string(spec) + "'");
  }
  const double d = std::get<double>(value);
  const bool sign = !spec.empty() && spec.front() == '+';
  std::string_view rest = sign ? spec.substr(1) : spec;
  if (rest.size() >= 3 && rest.front() == '.' && rest.back() == 'f') {
    const int decimals = std::stoi(std::string(rest.substr(1, rest.size() - 2)));
    return sign ? format_signed(d, decimals) : format_fixed(d, decimals);
  }
  if (spec.empty()) return format_shortest(d);
  throw Error(ErrorCode::kConfig, "unsupported number format '" + std::string(spec) + "'");
}

std::string or_none(const std::string &s) { return s.empty() ? "None" : s; }

}  // namespace

std::string render_summarizer_prompt(const EditCard &card, std::string_view task) {
  const std::map<std::string, Field, std::less<>> fields = {
      {"task", std::string(task)},
      {"before_smiles", card.before},
      {"after_smiles", card.after},
      {"score_before", card.score_before},
      {"score_after", card.score_after},
      {"score_delta", card.delta()},
      {"modification_type", std::string(modification_type_name(card.modification_type))},
      {"removed_fragment", or_none(card.removed_fragment)},
      {"added_fragment", or_none(card.added_fragment)},
      {"before_scaffold", or_none(card.scaffold_before)},
      {"after_scaffold", or_none(card.scaffold_after)},
      {"scaffold_type", std::string(scaffold_type_name(card.scaffold_type))},
      {"fg_removed", or_none(card.fg_removed.joined())},
      {"fg_added", or_none(card.fg_added.joined())},
      {"mw_change", card.deltas.mw},
      {"ring_changes", card.deltas.ring_count},
      {"psa_change", card.deltas.psa_lite},
      {"hbd_change", card.deltas.hbd},
      {"hba_change", card.deltas.hba},
      {"result", std::string(card.delta() > 0 ? "improved" : "worsened")},
  };
  const std::string_view tmpl = shipped_data("summarizer_prompt.txt");
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) throw Error(ErrorCode::kConfig, "unterminated placeholder in summarizer prompt");
    out.append(tmpl.substr(pos, open - pos));
    const std::string_view body = tmpl.substr(open + 1, close - open - 1);
    const std::size_t colon = body.find(':');
    const std::string_view name = body.substr(0, colon);
    const std::string_view spec = colon == std::string_view::npos ? std::string_view() : body.substr(colon + 1);
    auto it = fields.find(name);
    if (it == fields.end()) throw Error(ErrorCode::kConfig, "unknown placeholder {" + std::string(name) + "}");
    out += render_field(it->second, spec, name);
    pos = close + 1;
  }
  return out;
}

std::string first_sentence(std::string_view text) {
  const std::string_view t = trim(text);
  if (t.empty()) return {};
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '.' && (i + 1 == t.size() || t[i + 1] == ' ' || t[i + 1] == '\t'))
      return std::string(t.substr(0, i + 1));
  }
  return std::string(t) + ".";
}

std::string summarize_external(const EditCard &card, std::string_view task, const std::string &endpoint,
                               std::chrono::milliseconds timeout) {
  try {
    nlohmann::ordered_json payload;
    payload["task"] = task;
    payload["prompt"] = render_summarizer_prompt(card, task);
    payload["card"] = edit_card_to_json(card);
    LineClient client(endpoint, timeout);
    const std::string sentence = first_sentence(expect_ok(client.request("SUMMARIZE " + payload.dump())));
    if (!sentence.empty()) return sentence;
    spdlog::warn("summarizer at {} returned an empty sentence; using the template", endpoint);
  } catch (const Error &e) {
    spdlog::warn("summarizer at {} failed ({}); using the template", endpoint, e.what());
  }
  return summarize_template(card, task);
}

}  // namespace memopt
