// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "memopt/exembank.hpp"
#include "memopt/oracles.hpp"
#include "memopt/random.hpp"
#include "memopt/skillbank.hpp"

namespace memopt {

struct EnvConfig {
  Objective objective;
  int max_turns = 5;
  int plateau_patience = 2;
  double copy_penalty = -0.3;
  double memory_select_p = 0.5;
  std::uint64_t seed = 0;
  RetrievalParams exemplar_params;
  SkillRetrievalParams skill_params;

  // Throws kConfig when a field is out of range.
  void validate() const;
};

// Read-only long-term memories; either may be absent.
struct Memories {
  const ExemplarBank *exemplars = nullptr;
  const SkillBank *skills = nullptr;
  // Skill bank key; defaults to the objective name.
  std::string skill_task;
};

enum class MemorySource { kNone, kExemplar, kSkill };
std::string_view memory_source_name(MemorySource s);
MemorySource memory_source_from_name(std::string_view name);  // throws kConfig

struct InjectedMemory {
  MemorySource source = MemorySource::kNone;
  std::string block;
  // Canonical SMILES shown in an exemplar block; proposing one is a copy.
  std::set<std::string> exemplars;
};

// Which reward rule fired; the order is the evaluation order.
enum class RewardBranch { kParseFailure, kNoOp, kCopy, kSimilarity, kImprovement, kDegradation };
std::string_view reward_branch_name(RewardBranch b);

struct RewardOutcome {
  double reward = 0;
  RewardBranch branch = RewardBranch::kParseFailure;
  std::optional<Molecule> molecule;  // set from the no-op branch on
  double similarity = 0;             // to the lead; set from the copy branch on
  PropertyMap values;                // set for improvement/degradation
  double score = 0;                  // objective aggregate of `values`
};

// The step reward. Only the last two branches touch the ledger, and only
// they can throw kBudgetExhausted.
RewardOutcome compute_reward(const Molecule &current, double current_score, std::string_view proposal,
                             const Molecule &lead, const Objective &obj,
                             const std::set<std::string> &injected_exemplars, double copy_penalty,
                             BudgetLedger &ledger);

struct HistoryEntry {
  std::string action;     // as proposed
  std::string canonical;  // empty when unparsable
  double reward = 0;
  std::optional<double> score;  // set when the oracles ran
  bool valid = false;           // the state advanced to this molecule
  RewardBranch branch = RewardBranch::kParseFailure;
  MemorySource injected = MemorySource::kNone;  // block visible when proposing
};

enum class DoneReason { kNone, kSuccess, kMaxTurns };
std::string_view done_reason_name(DoneReason r);

struct EnvState {
  Molecule lead;
  PropertyMap lead_values;
  double lead_score = 0;
  Molecule current;
  PropertyMap current_values;
  double current_score = 0;
  std::vector<HistoryEntry> history;
  int turn = 0;
  double best_score = 0;
  int stall_count = 0;
  std::optional<InjectedMemory> injected;
  Rng rng;
  bool done = false;
  DoneReason done_reason = DoneReason::kNone;
};

struct StepResult {
  double reward = 0;
  bool done = false;
  DoneReason done_reason = DoneReason::kNone;
  std::string feedback;
  std::int64_t budget_consumed = 0;
  RewardBranch branch = RewardBranch::kParseFailure;
  // The ledger could not pay for the evaluation; the rollout is over.
  bool budget_exhausted = false;
};

class Environment {
public:
  Environment(EnvConfig config, Memories memories, BudgetLedger &ledger);

  const EnvConfig &config() const { return config_; }
  BudgetLedger &ledger() { return ledger_; }

  // Evaluates the lead (through the ledger). `seed` drives memory-source
  // selection for this rollout. Throws kBudgetExhausted.
  EnvState reset(const Molecule &lead, std::uint64_t seed) const;
  // Same, with lead values already paid for; never charges.
  EnvState reset(const Molecule &lead, const PropertyMap &lead_values, std::uint64_t seed) const;

  // Plateau trigger; call at the start of every turn before observation().
  void begin_turn(EnvState &state) const;

  StepResult step(EnvState &state, std::string_view action) const;

  std::string observation(const EnvState &state) const;

private:
  EnvConfig config_;
  Memories memories_;
  BudgetLedger &ledger_;
};

// Fills the shipped task prompt.
std::string render_task_prompt(const Objective &obj, const Molecule &lead);

// ---------------------------------------------------------------------------
// Trajectory log

struct Trajectory {
  int rollout = 0;
  std::string lead;
  double lead_score = 0;
  std::vector<HistoryEntry> steps;
  DoneReason terminal_reason = DoneReason::kNone;
};

Trajectory make_trajectory(int rollout, const EnvState &state);

// One JSON object per step: rollout, turn, action, canonical, reward,
// score, valid, branch, injected_source, lead, lead_score and, on the last
// step, terminal_reason.
std::string trajectory_to_jsonl(const Trajectory &t);
// Groups lines by (lead, rollout), in order of first appearance. Throws
// kConfig.
std::vector<Trajectory> parse_trajectory_jsonl(std::string_view text);

// Lead followed by every molecule the rollout advanced to.
std::vector<ScoredState> scored_states(const Trajectory &t);

}  // namespace memopt
