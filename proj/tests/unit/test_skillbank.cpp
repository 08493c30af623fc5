// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>

#include "json.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/random.hpp"
#include "memopt/skillbank.hpp"
#include "support/corpus.hpp"
#include "support/brute_force.hpp"
#include "support/pools.hpp"

namespace memopt {
namespace {

std::string stub(const std::string &args) { return std::string("exec:") + MEMOPT_WIRE_STUB + " " + args; }

const std::vector<Molecule> &pool() {
  static const std::vector<Molecule> p = testing::molecule_pool(1200);
  return p;
}

// Largest connected induced common subgraph, found by trying every
// connected atom subset of `a` against every injective placement in `b`.
int exhaustive_mcs(const Molecule &a, const Molecule &b) {
  const int n = a.num_atoms();
  auto order = [](const Molecule &m, int i, int j) {
    const int bond = m.find_bond(i, j);
    return bond < 0 ? 0 : static_cast<int>(m.bond(bond).order);
  };
  auto same = [](const Atom &x, const Atom &y) {
    return x.element == y.element && x.aromatic == y.aromatic && x.formal_charge == y.formal_charge &&
           x.isotope == y.isotope;
  };
  int best = 0;
  for (unsigned mask = 1; mask < (1U << n); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i) {
      if (mask & (1U << i)) s.push_back(i);
    }
    if (static_cast<int>(s.size()) <= best) continue;
    std::vector<int> reach{s[0]};
    unsigned seen = 1U << s[0];
    for (std::size_t k = 0; k < reach.size(); ++k) {
      for (int t : s) {
        if (!(seen & (1U << t)) && order(a, reach[k], t) > 0) {
          seen |= 1U << t;
          reach.push_back(t);
        }
      }
    }
    if (seen != mask) continue;
    std::vector<int> img(s.size(), -1);
    std::function<bool(std::size_t)> place = [&](std::size_t k) {
      if (k == s.size()) return true;
      for (int j = 0; j < b.num_atoms(); ++j) {
        if (std::find(img.begin(), img.begin() + k, j) != img.begin() + k) continue;
        if (!same(a.atom(s[k]), b.atom(j))) continue;
        bool ok = true;
        for (std::size_t q = 0; q < k && ok; ++q) ok = order(a, s[k], s[q]) == order(b, j, img[q]);
        if (!ok) continue;
        img[k] = j;
        if (place(k + 1)) return true;
      }
      return false;
    };
    if (place(0)) best = static_cast<int>(s.size());
  }
  return best;
}

void expect_valid_mapping(const Molecule &a, const Molecule &b, const McsResult &r) {
  std::set<int> used_a, used_b;
  for (auto [x, y] : r.mapping) {
    ASSERT_TRUE(used_a.insert(x).second);
    ASSERT_TRUE(used_b.insert(y).second);
    EXPECT_EQ(a.atom(x).element, b.atom(y).element);
    EXPECT_EQ(a.atom(x).aromatic, b.atom(y).aromatic);
  }
  for (auto [x1, y1] : r.mapping) {
    for (auto [x2, y2] : r.mapping) {
      const int ba = a.find_bond(x1, x2), bb = b.find_bond(y1, y2);
      ASSERT_EQ(ba < 0, bb < 0);
      if (ba >= 0) {
        EXPECT_EQ(a.bond(ba).order, b.bond(bb).order);
      }
    }
  }
}

std::vector<std::pair<Molecule, Molecule>> edit_pairs(std::size_t count, std::uint64_t seed, int max_atoms) {
  std::vector<std::pair<Molecule, Molecule>> out;
  Rng rng(seed);
  constexpr EditKind kinds[] = {EditKind::kSubstituteAtom, EditKind::kAppendTerminalAtom,
                                EditKind::kDeleteTerminalAtom, EditKind::kChangeBondOrder};
  for (int guard = 0; out.size() < count && guard < 100000; ++guard) {
    const Molecule &m = pool()[uniform_index(rng, pool().size())];
    if (m.num_atoms() > max_atoms) continue;
    try {
      Molecule e = mutate(m, {kinds[uniform_index(rng, 4)], std::nullopt}, rng());
      if (uniform_index(rng, 2)) e = mutate(e, {kinds[uniform_index(rng, 4)], std::nullopt}, rng());
      if (e.canonical() != m.canonical()) out.emplace_back(m, e);
    } catch (const Error &) {
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

TEST(Mcs, IdentityMapsEverything) {
  const Molecule m = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  const McsResult r = mcs_decompose(m, m);
  EXPECT_EQ(r.mapping.size(), static_cast<std::size_t>(m.num_atoms()));
  EXPECT_TRUE(r.removed_fragment.empty());
  EXPECT_TRUE(r.added_fragment.empty());
  EXPECT_FALSE(r.approximate);
}

TEST(Mcs, SmallExamples) {
  McsResult r = mcs_decompose(parse_smiles("CCO"), parse_smiles("CCN"));
  EXPECT_EQ(r.mapping.size(), 2U);
  EXPECT_EQ(r.removed_fragment, "O");
  EXPECT_EQ(r.added_fragment, "N");
  r = mcs_decompose(parse_smiles("c1ccccc1C"), parse_smiles("c1ccccc1F"));
  EXPECT_EQ(r.mapping.size(), 6U);
  EXPECT_EQ(r.removed_fragment, "C");
  EXPECT_EQ(r.added_fragment, "F");
  r = mcs_decompose(parse_smiles("C"), parse_smiles("N"));
  EXPECT_TRUE(r.mapping.empty());
  EXPECT_EQ(r.removed_fragment, "C");
  EXPECT_EQ(r.added_fragment, "N");
}

TEST(Mcs, HydrogenOnlyDifferenceStillYieldsFragments) {
  const McsResult r = mcs_decompose(parse_smiles("C[CH]C"), parse_smiles("CCC"));
  EXPECT_FALSE(r.removed_fragment.empty());
  EXPECT_FALSE(r.added_fragment.empty());
}

TEST(Mcs, ExactSizeMatchesExhaustiveSearchOnSmallPairs) {
  const auto pairs = edit_pairs(150, 11, 10);
  ASSERT_EQ(pairs.size(), 150U);
  Rng rng(12);
  std::vector<std::pair<Molecule, Molecule>> all = pairs;
  // Unrelated pairs exercise mappings far from the full molecule.
  for (int i = 0; i < 100; ++i) all.emplace_back(pairs[uniform_index(rng, pairs.size())].first,
                                                 pairs[uniform_index(rng, pairs.size())].second);
  for (const auto &[a, b] : all) {
    const McsResult r = mcs_decompose(a, b);
    ASSERT_FALSE(r.approximate);
    EXPECT_EQ(static_cast<int>(r.mapping.size()), exhaustive_mcs(a, b)) << a.canonical() << " " << b.canonical();
    expect_valid_mapping(a, b, r);
  }
}

TEST(Mcs, SwappingInputsSwapsFragments) {
  for (const auto &[a, b] : edit_pairs(200, 13, 30)) {
    const McsResult ab = mcs_decompose(a, b);
    const McsResult ba = mcs_decompose(b, a);
    if (ab.approximate || ba.approximate) continue;
    EXPECT_EQ(ab.removed_fragment, ba.added_fragment) << a.canonical() << " " << b.canonical();
    EXPECT_EQ(ab.added_fragment, ba.removed_fragment) << a.canonical() << " " << b.canonical();
  }
}

TEST(Mcs, IndependentOfAtomOrder) {
  Rng rng(14);
  for (const auto &[a, b] : edit_pairs(60, 15, 25)) {
    std::vector<int> pa(a.num_atoms()), pb(b.num_atoms());
    std::iota(pa.begin(), pa.end(), 0);
    std::iota(pb.begin(), pb.end(), 0);
    shuffle_in_place(pa, rng);
    shuffle_in_place(pb, rng);
    const McsResult x = mcs_decompose(a, b);
    const McsResult y = mcs_decompose(permute_atoms(a, pa), permute_atoms(b, pb));
    if (x.approximate || y.approximate) continue;
    EXPECT_EQ(x.removed_fragment, y.removed_fragment);
    EXPECT_EQ(x.added_fragment, y.added_fragment);
  }
}

TEST(Mcs, NodeCapFallsBackToGreedy) {
  McsOptions opts;
  opts.node_cap = 1;
  const Molecule a = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  const Molecule b = parse_smiles("CC(=O)Nc1ccc(OC)cc1");
  const McsResult r = mcs_decompose(a, b, opts);
  EXPECT_TRUE(r.approximate);
  EXPECT_FALSE(r.mapping.empty());
  expect_valid_mapping(a, b, r);
}

// ---------------------------------------------------------------------------

TEST(EditCard, MethoxyToFluorineOnRing) {
  const EditCard c = build_edit_card(parse_smiles("COc1ccc(CC(N)=O)cc1"), parse_smiles("Fc1ccc(CC(N)=O)cc1"), 0.775, 0.901);
  EXPECT_EQ(c.modification_type, ModificationType::kReplacement);
  EXPECT_EQ(c.scaffold_type, ScaffoldType::kUnchanged);
  EXPECT_TRUE(c.fg_removed.contains("methoxy"));
  EXPECT_TRUE(c.fg_added.contains("halogen"));
  EXPECT_NEAR(c.delta(), 0.126, 1e-12);
  EXPECT_EQ(summarize_template(c, "qed"),
            "Replace methoxy (-OCH3) with fluorine (-F) on the aromatic ring to improve the target score.");
}

TEST(EditCard, TerminalFluorineAddition) {
  const EditCard c = build_edit_card(parse_smiles("CCCO"), parse_smiles("FCCCO"), 0.1, 0.2);
  EXPECT_EQ(c.modification_type, ModificationType::kAddition);
  EXPECT_EQ(c.scaffold_type, ScaffoldType::kUnchanged);
  EXPECT_EQ(c.added_fragment, "F");
  EXPECT_EQ(summarize_template(c, "qed"), "Add fluorine (-F) to improve the target score.");
}

TEST(EditCard, RelocatedGroupIsAMove) {
  const EditCard c = build_edit_card(parse_smiles("Cc1ccc(O)cc1"), parse_smiles("Cc1cccc(O)c1"), 0.3, 0.4);
  EXPECT_EQ(c.modification_type, ModificationType::kReplacement);
  EXPECT_EQ(summarize_template(c, "qed"),
            "Move hydroxyl (-OH) to a different position on the aromatic ring to improve the target score.");
}

TEST(EditCard, GroupsOnBothSidesCancelInTheSentence) {
  EditCard c;
  c.modification_type = ModificationType::kReplacement;
  c.removed_fragment = "CC(F)O";
  c.added_fragment = "CCO";
  c.removed_names = {"methyl (-CH3)", "fluorine (-F)", "hydroxyl (-OH)"};
  c.added_names = {"methyl (-CH3)", "hydroxyl (-OH)"};
  EXPECT_EQ(summarize_template(c, "qed"), "Remove fluorine (-F) to improve the target score.");
  std::swap(c.removed_names, c.added_names);
  EXPECT_EQ(summarize_template(c, "qed"), "Add fluorine (-F) to improve the target score.");
  c.removed_names = {"methyl (-CH3)", "methyl (-CH3)", "hydroxyl (-OH)"};
  c.added_names = {"methyl (-CH3)", "chlorine (-Cl)", "hydroxyl (-OH)", "hydroxyl (-OH)"};
  EXPECT_EQ(summarize_template(c, "qed"),
            "Replace methyl (-CH3) with chlorine (-Cl) and hydroxyl (-OH) to improve the target score.");
}

TEST(EditCard, SulfonamideRemovalFromRing) {
  const EditCard c = build_edit_card(parse_smiles("CCc1ccc(cc1)S(N)(=O)=O"), parse_smiles("CCc1ccccc1"), 0.3, 0.5);
  EXPECT_EQ(c.modification_type, ModificationType::kRemoval);
  EXPECT_TRUE(c.fg_removed.contains("sulfonamide"));
  EXPECT_EQ(summarize_template(c, "qed"), "Remove sulfonamide from the aromatic ring to improve the target score.");
}

TEST(EditCard, ScaffoldClassification) {
  // Biphenyl loses a ring but keeps the benzene core.
  EditCard c = build_edit_card(parse_smiles("Cc1ccc(cc1)-c1ccccc1"), parse_smiles("Cc1ccccc1"), 0, 1);
  EXPECT_EQ(c.scaffold_type, ScaffoldType::kRingRemoval);
  c = build_edit_card(parse_smiles("Cc1ccccc1"), parse_smiles("Cc1ccc(cc1)-c1ccccc1"), 0, 1);
  EXPECT_EQ(c.scaffold_type, ScaffoldType::kRingAddition);
  // A ring atom changes element: the before core is not covered.
  c = build_edit_card(parse_smiles("NCCc1ccccc1"), parse_smiles("NCCc1ccncc1"), 0, 1);
  EXPECT_EQ(c.scaffold_type, ScaffoldType::kScaffoldHop);
  EXPECT_EQ(c.modification_type, ModificationType::kScaffoldHop);
  EXPECT_EQ(summarize_template(c, "qed"), "Replace the benzene core with pyridine to improve the target score.");
  // A longer linker cannot be covered by an induced mapping.
  c = build_edit_card(parse_smiles("c1ccccc1Cc1ccccc1"), parse_smiles("c1ccccc1CCc1ccccc1"), 0, 1);
  EXPECT_EQ(c.scaffold_type, ScaffoldType::kScaffoldHop);
  // Covered core that differs only in a ring hydrogen.
  c = build_edit_card(parse_smiles("CC1CC[CH]CC1"), parse_smiles("CC1CCCCC1"), 0, 1);
  EXPECT_EQ(c.scaffold_type, ScaffoldType::kScaffoldReplacement);
  EXPECT_EQ(c.modification_type, ModificationType::kReplacement);
}

TEST(EditCard, ModificationTypeAgreesWithFragments) {
  for (const auto &[a, b] : edit_pairs(150, 16, 30)) {
    const EditCard c = build_edit_card(a, b, 0, 1);
    switch (c.modification_type) {
    case ModificationType::kAddition:
      EXPECT_TRUE(c.removed_fragment.empty());
      EXPECT_FALSE(c.added_fragment.empty());
      break;
    case ModificationType::kRemoval:
      EXPECT_FALSE(c.removed_fragment.empty());
      EXPECT_TRUE(c.added_fragment.empty());
      break;
    case ModificationType::kReplacement:
      EXPECT_FALSE(c.removed_fragment.empty());
      EXPECT_FALSE(c.added_fragment.empty());
      break;
    case ModificationType::kScaffoldHop:
      EXPECT_EQ(c.scaffold_type, ScaffoldType::kScaffoldHop);
      break;
    }
    const std::string s = summarize_template(c, "qed");
    EXPECT_FALSE(s.empty());
    EXPECT_EQ(s.back(), '.');
    EXPECT_EQ(std::count(s.begin(), s.end(), '.'), 1) << s;
  }
}

TEST(EditCard, JsonRoundTripThroughBank) {
  const EditCard c = build_edit_card(parse_smiles("COc1ccccc1"), parse_smiles("Fc1ccccc1"), 0.5, 0.7);
  SkillBank bank;
  bank.insert("qed", {make_skill_card(c, summarize_template(c, "qed"), "qed")});
  const SkillBank back = SkillBank::from_jsonl(bank.to_jsonl());
  const auto cards = back.cards("qed");
  ASSERT_EQ(cards.size(), 1U);
  const EditCard &d = cards[0].card;
  EXPECT_EQ(d.before, c.before);
  EXPECT_EQ(d.removed_fragment, c.removed_fragment);
  EXPECT_EQ(d.fg_removed, c.fg_removed);
  EXPECT_EQ(d.deltas.hba, c.deltas.hba);
  EXPECT_EQ(d.deltas.mw, c.deltas.mw);
  EXPECT_EQ(d.removed_names, c.removed_names);
  EXPECT_EQ(cards[0].fp_key, morgan_fp(parse_smiles(c.before)));
  EXPECT_EQ(back.to_jsonl(), bank.to_jsonl());
}

// ---------------------------------------------------------------------------

TEST(Harvest, KeepsOnlyImprovementsAboveDelta) {
  EXPECT_TRUE(harvest({{{"CCO", 0.5}, {"CCN", 0.4}, {"CCC", 0.1}}}, 0.05).empty());
  const auto cards = harvest({{{"CCO", 0.5}, {"CCN", 0.8}, {"CCCN", 0.82}}}, 0.05);
  ASSERT_EQ(cards.size(), 1U);
  EXPECT_EQ(cards[0].before, "CCO");
  EXPECT_EQ(cards[0].after, "CCN");
  EXPECT_NEAR(cards[0].delta(), 0.3, 1e-12);
  // The threshold is strict.
  EXPECT_TRUE(harvest({{{"CCO", 0.5}, {"CCN", 0.5625}}}, 0.0625).empty());
}

TEST(Harvest, MergesDuplicatesKeepingLargestDelta) {
  const auto cards = harvest({{{"CCO", 0.5}, {"CCN", 0.7}}, {{"OCC", 0.4}, {"NCC", 0.9}}}, 0.05);
  ASSERT_EQ(cards.size(), 1U);
  EXPECT_NEAR(cards[0].delta(), 0.5, 1e-12);
}

TEST(Harvest, SkipsUnparsableAndUnchangedStates) {
  EXPECT_TRUE(harvest({{{"C1CC", 0.0}, {"CCO", 1.0}, {"OCC", 2.0}}}, 0.05).empty());
}

TEST(Harvest, ReplayIsIdempotentOnTheBank) {
  const std::vector<std::vector<ScoredState>> rollouts = {
      {{"CCO", 0.1}, {"CCN", 0.3}, {"CCCN", 0.6}}, {{"c1ccccc1C", 0.2}, {"c1ccccc1F", 0.5}}};
  SkillBank bank;
  auto insert_all = [&] {
    std::vector<SkillCard> cards;
    for (EditCard &c : harvest(rollouts, 0.05)) cards.push_back(make_skill_card(c, summarize_template(c, "qed"), "qed"));
    return bank.insert("qed", std::move(cards));
  };
  EXPECT_EQ(insert_all().added, 3U);
  const std::string first = bank.to_jsonl();
  const InsertReport again = insert_all();
  EXPECT_EQ(again.added, 0U);
  EXPECT_EQ(again.merged, 3U);
  EXPECT_EQ(bank.to_jsonl(), first);
}

// ---------------------------------------------------------------------------

TEST(Summarizer, PromptPlaceholdersAreFilled) {
  const EditCard c = build_edit_card(parse_smiles("COc1ccccc1"), parse_smiles("Fc1ccccc1"), 0.775, 0.901);
  const std::string p = render_summarizer_prompt(c, "qed");
  EXPECT_EQ(p.find('{'), std::string::npos);
  EXPECT_NE(p.find("Analyze this molecular transformation for qed optimization:\n"), std::string::npos);
  EXPECT_NE(p.find("Score:  0.775 -> 0.901 (+0.126)\n"), std::string::npos);
  EXPECT_NE(p.find("Modification: replacement\n- Removed: CO\n- Added:   F\n"), std::string::npos);
  EXPECT_NE(p.find("Rings: +0\n"), std::string::npos);
  EXPECT_NE(p.find("Result: improved\n"), std::string::npos);
  EXPECT_NE(p.find("water solubility and qed."), std::string::npos);
  const EditCard add = build_edit_card(parse_smiles("CC"), parse_smiles("CCF"), 0.2, 0.1);
  const std::string q = render_summarizer_prompt(add, "sa");
  EXPECT_NE(q.find("- Removed: None\n"), std::string::npos);
  EXPECT_NE(q.find("Score:  0.200 -> 0.100 (-0.100)\n"), std::string::npos);
  EXPECT_NE(q.find("Result: worsened\n"), std::string::npos);
}

TEST(Summarizer, FirstSentence) {
  EXPECT_EQ(first_sentence("Add F. Then more."), "Add F.");
  EXPECT_EQ(first_sentence("  Keep 0.5 ratio. x"), "Keep 0.5 ratio.");
  EXPECT_EQ(first_sentence("No period"), "No period.");
  EXPECT_EQ(first_sentence("   "), "");
}

TEST(Summarizer, ExternalReplyAndFallbacks) {
  const EditCard c = build_edit_card(parse_smiles("COc1ccccc1"), parse_smiles("Fc1ccccc1"), 0.5, 0.7);
  const std::string tmpl = summarize_template(c, "qed");
  EXPECT_EQ(summarize_external(c, "qed", stub("reply 'OK Swap the ether for F. Extra words.'")), "Swap the ether for F.");
  EXPECT_EQ(summarize_external(c, "qed", "exec:/nonexistent/summarizer"), tmpl);
  EXPECT_EQ(summarize_external(c, "qed", stub("reply 'ERR busy'")), tmpl);
  EXPECT_EQ(summarize_external(c, "qed", stub("reply 'OK   '")), tmpl);
  EXPECT_EQ(summarize_external(c, "qed", stub("silent"), std::chrono::milliseconds(100)), tmpl);
}

TEST(Summarizer, RequestCarriesPromptAndCard) {
  const auto file = std::filesystem::temp_directory_path() / "memopt_summarize_req.txt";
  std::filesystem::remove(file);
  const EditCard c = build_edit_card(parse_smiles("COc1ccccc1"), parse_smiles("Fc1ccccc1"), 0.5, 0.7);
  summarize_external(c, "qed", stub("record " + file.string() + " 'OK Fine.'"));
  const std::string line = read_text_file(file.string());
  ASSERT_EQ(line.rfind("SUMMARIZE ", 0), 0U);
  const auto j = nlohmann::json::parse(line.substr(10));
  EXPECT_EQ(j.at("prompt").get<std::string>(), render_summarizer_prompt(c, "qed"));
  EXPECT_EQ(j.at("card").at("before").get<std::string>(), c.before);
  std::filesystem::remove(file);
}

// ---------------------------------------------------------------------------

using testing::synthetic_card;

TEST(Bank, CapacityKeepsLargestDeltas) {
  SkillBank bank(1000);
  Rng rng(20);
  std::vector<double> deltas(1200);
  for (int i = 0; i < 1200; ++i) deltas[i] = 0.001 * (i + 1);
  shuffle_in_place(deltas, rng);
  std::vector<SkillCard> cards;
  for (int i = 0; i < 1200; ++i) cards.push_back(synthetic_card(pool()[i % 50], deltas[i], i));
  const InsertReport rep = bank.insert("qed", cards);
  EXPECT_EQ(rep.evicted.size(), 200U);
  ASSERT_EQ(bank.size("qed"), 1000U);
  double smallest_kept = 1e9;
  for (const SkillCard &c : bank.cards("qed")) smallest_kept = std::min(smallest_kept, c.delta);
  EXPECT_DOUBLE_EQ(smallest_kept, 0.201);
}

TEST(Bank, NonFullInsertEvictsNothing) {
  SkillBank bank(10);
  const InsertReport rep = bank.insert("qed", {synthetic_card(pool()[0], 0.1, 0), synthetic_card(pool()[1], 0.2, 1)});
  EXPECT_EQ(rep.added, 2U);
  EXPECT_TRUE(rep.evicted.empty());
}

TEST(Bank, DuplicateWithLargerDeltaUpdatesInPlace) {
  SkillBank bank;
  bank.insert("qed", {synthetic_card(pool()[0], 0.1, 0)});
  const std::int64_t id = bank.cards("qed")[0].id;
  InsertReport rep = bank.insert("qed", {synthetic_card(pool()[0], 0.05, 0)});
  EXPECT_EQ(rep.merged, 1U);
  EXPECT_DOUBLE_EQ(bank.cards("qed")[0].delta, 0.1);
  rep = bank.insert("qed", {synthetic_card(pool()[0], 0.4, 0)});
  ASSERT_EQ(bank.size("qed"), 1U);
  EXPECT_DOUBLE_EQ(bank.cards("qed")[0].delta, 0.4);
  EXPECT_EQ(bank.cards("qed")[0].id, id);
}

TEST(Bank, TiesEvictOlderCardsFirst) {
  SkillBank bank(2);
  bank.insert("qed", {synthetic_card(pool()[0], 0.5, 0), synthetic_card(pool()[1], 0.5, 1)});
  const auto old_ids = bank.cards("qed");
  const InsertReport rep = bank.insert("qed", {synthetic_card(pool()[2], 0.5, 2)});
  ASSERT_EQ(rep.evicted.size(), 1U);
  EXPECT_EQ(rep.evicted[0], old_ids[0].id);
}

TEST(Bank, TasksAreSeparate) {
  SkillBank bank;
  bank.insert("qed", {synthetic_card(pool()[0], 0.1, 0)});
  bank.insert("sa", {synthetic_card(pool()[0], 0.1, 0, "sa")});
  EXPECT_EQ(bank.tasks(), (std::vector<std::string>{"qed", "sa"}));
  EXPECT_THROW(bank.insert("qed", {synthetic_card(pool()[0], 0.1, 1, "sa")}), Error);
  EXPECT_TRUE(bank.retrieve(pool()[0], "plogp").empty());
}

TEST(Retrieve, MatchesBruteForceOnRandomBanks) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    SkillBank bank;
    std::vector<SkillCard> cards;
    for (int i = 0; i < 50; ++i) {
      // Coarse deltas so ranking ties occur.
      cards.push_back(synthetic_card(pool()[uniform_index(rng, pool().size())],
                                     0.1 * static_cast<double>(1 + uniform_index(rng, 5)), i));
    }
    bank.insert("qed", cards);
    const SkillRetrievalParams p{1 + static_cast<int>(uniform_index(rng, 4)), 1 + static_cast<int>(uniform_index(rng, 4)),
                                 0.1 * static_cast<double>(uniform_index(rng, 6)),
                                 0.1 * static_cast<double>(uniform_index(rng, 8))};
    for (int q = 0; q < 5; ++q) {
      const Molecule &m = pool()[uniform_index(rng, pool().size())];
      const auto got = bank.retrieve(m, "qed", p);
      std::vector<std::int64_t> ids;
      for (const RetrievedSkill &s : got) ids.push_back(s.skill.id);
      EXPECT_EQ(ids, testing::brute_force_skills(bank.cards("qed"), m, p));
      for (const RetrievedSkill &s : got) {
        EXPECT_GE(s.similarity, s.channel == RetrievedSkill::Channel::kFingerprint ? p.gamma_fp : p.gamma_fg);
      }
    }
  }
}

TEST(Retrieve, SourceMoleculeHitsFingerprintChannel) {
  SkillBank bank;
  bank.insert("qed", {synthetic_card(pool()[3], 0.2, 0)});
  const auto got = bank.retrieve(pool()[3], "qed");
  ASSERT_FALSE(got.empty());
  EXPECT_EQ(got[0].channel, RetrievedSkill::Channel::kFingerprint);
  EXPECT_DOUBLE_EQ(got[0].similarity, 1.0);
}

TEST(Retrieve, BelowBothThresholdsIsEmpty) {
  SkillBank bank;
  bank.insert("qed", {synthetic_card(parse_smiles("CCCCCCCC"), 0.2, 0)});
  EXPECT_TRUE(bank.retrieve(parse_smiles("c1ccccc1O"), "qed").empty());
  EXPECT_THROW(bank.retrieve(parse_smiles("C"), "qed", {3, 3, 1.5, 0.5}), Error);
}

TEST(Bank, ReadersNeverSeeOverflow) {
  SkillBank bank(100);
  std::atomic<bool> stop{false};
  std::atomic<int> violations{0};
  std::thread reader([&] {
    while (!stop) {
      if (bank.size("qed") > 100) ++violations;
      if (bank.cards("qed").size() > 100) ++violations;
    }
  });
  for (int batch = 0; batch < 20; ++batch) {
    std::vector<SkillCard> cards;
    for (int i = 0; i < 30; ++i) cards.push_back(synthetic_card(pool()[i], 0.01 * (batch * 30 + i), batch * 30 + i));
    bank.insert("qed", cards);
  }
  stop = true;
  reader.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(bank.size("qed"), 100U);
}

TEST(Bank, SaveAndLoad) {
  const auto path = (std::filesystem::temp_directory_path() / "memopt_skills.jsonl").string();
  SkillBank bank;
  for (int i = 0; i < 5; ++i) bank.insert("qed", {synthetic_card(pool()[i], 0.1 * (i + 1), i)});
  bank.save(path);
  const SkillBank back = SkillBank::load(path);
  EXPECT_EQ(back.to_jsonl(), bank.to_jsonl());
  write_text_file_atomic(path, "{\"task\": \"qed\"}\n");
  EXPECT_THROW(SkillBank::load(path), Error);
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------

TEST(Render, GoldenSkillBlock) {
  const std::vector<std::string> sentences = {
      "Replace benzene core with pyridine to improve water solubility and qed.",
      "Add fluorine (-F) to the aromatic ring to enhance metabolic stability.",
      "Remove the sulfonamide group from aromatic ring to reduce polar surface area.",
  };
  EXPECT_EQ(render_skill_block(sentences, "qed"), read_text_file(testing::data_path("../tests/golden/skill_block.txt")));
}

TEST(Render, SingleSkillAndTaskName) {
  EXPECT_EQ(render_skill_block(std::vector<std::string>{"Add F."}, "drd2"),
            "=== Potential Useful Strategies for drd2 ===\n1. Add F.\n");
}

}  // namespace
}  // namespace memopt
