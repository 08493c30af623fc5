// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memopt/env.hpp"

namespace memopt {

class LineClient;

struct SearchConfig {
  int generations = 20;
  int rollouts = 32;
  double temp0 = 0.9;
  double temp_step = 0.1;
  double temp_max = 2.0;
  std::int64_t budget = 500;
  BudgetUnit budget_unit = BudgetUnit::kPerCandidate;
  bool memoize = true;
  std::uint64_t seed = 0;
  // Later rollouts start from the incumbent instead of the lead.
  bool warm_start_incumbent = false;
  // Harvest skills into the search's skill bank after every generation.
  bool online_harvest = false;
  double harvest_delta = kDefaultHarvestDelta;
  EnvConfig env;

  // Throws kConfig.
  void validate() const;
};

// min(temp0 + g·temp_step, temp_max).
double temperature(int generation, const SearchConfig &cfg);

struct PolicyInput {
  const EnvState &state;
  const std::string &observation;
  double temperature;
  std::uint64_t seed;
};

// Proposes the next molecule as SMILES text. Anything unparsable is simply
// an invalid action.
class Policy {
public:
  virtual ~Policy() = default;
  virtual std::string kind() const = 0;
  virtual std::string propose(const PolicyInput &in) = 0;
};

// ceil(temperature) random local edits of the current molecule.
class RandomEditPolicy: public Policy {
public:
  std::string kind() const override { return "random_edit"; }
  std::string propose(const PolicyInput &in) override;
};

// With an exemplar block in the observation, proposes the one-edit
// neighbour of the first listed exemplar that is most similar to the lead,
// skipping the exemplar itself and anything already tried. Otherwise falls
// back to a random edit.
class RetrievalGreedyPolicy: public Policy {
public:
  std::string kind() const override { return "retrieval_greedy"; }
  std::string propose(const PolicyInput &in) override;
};

// `ACT {"observation", "temperature"}` / `OK <smiles>`. A timeout or any
// protocol failure yields an empty (invalid) proposal.
class WirePolicy: public Policy {
public:
  explicit WirePolicy(std::string endpoint,
                      std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  ~WirePolicy() override;
  std::string kind() const override { return "wire"; }
  std::string propose(const PolicyInput &in) override;

private:
  std::unique_ptr<LineClient> client_;
};

// "random", "greedy" or "wire:<endpoint>". Throws kConfig.
std::unique_ptr<Policy> make_policy(std::string_view spec);

// The search outcome for one lead, enough to recompute every metric.
struct LeadResult {
  std::string lead;
  PropertyMap lead_values;
  double lead_score = 0;
  // Best feasible molecule, if any was found.
  std::optional<std::string> best;
  PropertyMap best_values;
  double best_score = 0;
  std::int64_t calls_used = 0;
};

struct SearchResult {
  LeadResult result;
  std::vector<Trajectory> trajectories;
  int generations_run = 0;
};

// A feasible molecule meets the similarity threshold and every success
// criterion; the incumbent is the feasible molecule with the largest
// aggregate seen so far, the lead included. Budget exhaustion ends the
// search. `harvest_into`, when set, receives online-harvested skills and
// should be the bank `memories.skills` points to.
SearchResult optimize_lead(const Molecule &lead, const SearchConfig &cfg, Policy &policy,
                           const Memories &memories, SkillBank *harvest_into = nullptr);

struct LeadRecord {
  std::string lead;
  std::string best;  // the lead itself on failure
  bool success = false;
  double sim = 1;
  double ri = 0;
  std::int64_t calls_used = 0;
};

struct EvalReport {
  std::string objective;
  std::vector<LeadRecord> records;
  double sr = 0;  // percent
  double sim = 0;
  double ri = 0;
  // RI terms dropped because the lead's value was zero.
  int skipped_ri_terms = 0;
};

// Throws kNoLeads on an empty result set.
EvalReport metrics(const std::vector<LeadResult> &results, const Objective &obj);

// Report JSON: aggregates, per-lead records and the raw results so the
// metrics can be recomputed.
std::string report_to_json(const EvalReport &report, const std::vector<LeadResult> &results);
std::vector<LeadResult> results_from_report_json(std::string_view text);  // throws kConfig
// Header plus one row: objective, leads, SR, Sim, RI.
std::string report_to_tsv(const EvalReport &report);

// Rebuilds per-lead results from trajectory logs by re-scoring every
// evaluated molecule with the objective's oracles (no budget).
std::vector<LeadResult> results_from_trajectories(const std::vector<Trajectory> &trajectories,
                                                  const Objective &obj);

}  // namespace memopt
