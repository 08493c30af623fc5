// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memopt/chemfeat.hpp"
#include "memopt/molgraph.hpp"

namespace memopt {

// ---------------------------------------------------------------------------
// Maximum common substructure

struct McsOptions {
  std::chrono::milliseconds time_cap{200};
  // Search nodes before falling back; keeps the cutoff reproducible on a
  // loaded machine.
  std::int64_t node_cap = 2'000'000;
  // Above this heavy-atom count on either side the exact search is skipped.
  int exact_atom_limit = 40;
};

// Atoms match on element, aromaticity, charge and isotope; bonds on order.
// The common subgraph is connected and induced.
struct McsResult {
  // (before atom, after atom) pairs, sorted by before atom.
  std::vector<std::pair<int, int>> mapping;
  std::string removed_fragment;  // canonical; empty when nothing was removed
  std::string added_fragment;
  bool approximate = false;
};

// Among maximum mappings the result does not depend on atom order, and
// mcs_decompose(b, a) mirrors mcs_decompose(a, b) unless either is
// approximate.
McsResult mcs_decompose(const Molecule &before, const Molecule &after, const McsOptions &opts = {});

// ---------------------------------------------------------------------------
// Edit cards

enum class ModificationType { kAddition, kRemoval, kReplacement, kScaffoldHop };
enum class ScaffoldType { kUnchanged, kRingRemoval, kRingAddition, kScaffoldReplacement, kScaffoldHop };

std::string_view modification_type_name(ModificationType t);
std::string_view scaffold_type_name(ScaffoldType t);
ModificationType modification_type_from_name(std::string_view name);  // throws kConfig
ScaffoldType scaffold_type_from_name(std::string_view name);           // throws kConfig

// Where a fragment was attached on the kept side.
struct Attachment {
  int aromatic_sites = 0;
  int aliphatic_sites = 0;
};

struct EditCard {
  std::string before;
  std::string after;
  ModificationType modification_type = ModificationType::kReplacement;
  std::string removed_fragment;
  std::string added_fragment;
  std::string scaffold_before;
  std::string scaffold_after;
  ScaffoldType scaffold_type = ScaffoldType::kUnchanged;
  FunctionalGroupSet fg_removed;
  FunctionalGroupSet fg_added;
  DescriptorDelta deltas;
  double score_before = 0;
  double score_after = 0;
  bool mcs_approximate = false;
  // Readable names of the removed and added fragments, one per component.
  std::vector<std::string> removed_names;
  std::vector<std::string> added_names;
  Attachment attachment;

  double delta() const { return score_after - score_before; }
};

EditCard build_edit_card(const Molecule &before, const Molecule &after, double score_before,
                         double score_after, const McsOptions &opts = {});

// One molecule of a rollout whose objective score is known. The first entry
// is the lead; each later one is the state after an accepted step.
struct ScoredState {
  std::string smiles;
  double score = 0;
};

inline constexpr double kDefaultHarvestDelta = 0.05;

// Cards for every consecutive pair whose score rises by more than `delta`,
// merged on (before, after) keeping the largest improvement. Output is
// sorted by (before, after).
std::vector<EditCard> harvest(const std::vector<std::vector<ScoredState>> &rollouts, double delta,
                              const McsOptions &opts = {});

// Deterministic one-sentence strategy.
std::string summarize_template(const EditCard &card, std::string_view task);

// The summarizer prompt with every card field substituted.
std::string render_summarizer_prompt(const EditCard &card, std::string_view task);

// Sends `SUMMARIZE <json>` carrying the rendered prompt and the card; keeps
// the reply's first sentence. Any failure logs a warning and falls back to
// summarize_template().
std::string summarize_external(const EditCard &card, std::string_view task,
                               const std::string &endpoint,
                               std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

// Text up to and including the first period that ends a sentence, with a
// period appended when none is present. Empty for blank input.
std::string first_sentence(std::string_view text);

// ---------------------------------------------------------------------------
// Skill bank

struct SkillCard {
  std::int64_t id = 0;
  std::string text;
  EditCard card;
  double delta = 0;  // card.delta()
  Fingerprint fp_key;
  FunctionalGroupSet fg_tags;
  std::string task;
  std::int64_t seq = 0;  // insertion order; larger is newer
};

// Fills delta, fp_key and fg_tags from the card; id and seq are assigned on
// insertion.
SkillCard make_skill_card(EditCard card, std::string text, std::string task);

struct InsertReport {
  std::size_t added = 0;
  std::size_t merged = 0;  // duplicates folded into an existing card
  std::vector<std::int64_t> evicted;
};

struct SkillRetrievalParams {
  int k_fp = 3;
  int k_fg = 3;
  double gamma_fp = 0.4;
  double gamma_fg = 0.5;
};

struct RetrievedSkill {
  SkillCard skill;
  enum class Channel { kFingerprint, kFunctionalGroup } channel;
  double similarity;
};

// Task-keyed banks. Readers share a lock; an insertion batch, including its
// eviction, holds it exclusively.
class SkillBank {
public:
  explicit SkillBank(std::size_t capacity = 1000);
  SkillBank(const SkillBank &other);
  SkillBank &operator=(const SkillBank &other);

  std::size_t capacity() const { return capacity_; }
  void set_capacity(std::size_t capacity);

  // Cards must all carry `task`. Duplicates of an existing (before, after)
  // pair replace it only with a larger delta. When the bank overflows, the
  // cards with the largest delta survive, newer first on ties.
  InsertReport insert(const std::string &task, std::vector<SkillCard> cards);

  // Snapshot in insertion order.
  std::vector<SkillCard> cards(const std::string &task) const;
  std::vector<std::string> tasks() const;
  std::size_t size(const std::string &task) const;

  std::vector<RetrievedSkill> retrieve(const Molecule &current, const std::string &task,
                                       const SkillRetrievalParams &params = {}) const;

  // JSONL, one card per line. load() replaces the contents.
  std::string to_jsonl() const;
  void save(const std::string &path) const;
  static SkillBank from_jsonl(std::string_view text, std::size_t capacity = 1000);
  static SkillBank load(const std::string &path, std::size_t capacity = 1000);

private:
  std::vector<std::int64_t> evict_locked(std::vector<SkillCard> &cards);

  mutable std::shared_mutex mu_;
  std::size_t capacity_;
  std::map<std::string, std::vector<SkillCard>, std::less<>> banks_;
  std::int64_t next_id_ = 1;
  std::int64_t next_seq_ = 1;
};

inline constexpr std::string_view kSkillBlockPrefix = "=== Potential Useful Strategies for ";

std::string render_skill_block(const std::vector<std::string> &sentences, std::string_view task);
std::string render_skill_block(const std::vector<RetrievedSkill> &skills, std::string_view task);

}  // namespace memopt
