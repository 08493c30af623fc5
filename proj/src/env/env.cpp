// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "json.hpp"
#include "memopt/data.hpp"
#include "memopt/env.hpp"
#include "memopt/error.hpp"
#include "memopt/format.hpp"

namespace memopt {

std::string_view memory_source_name(MemorySource s) {
  switch (s) {
  case MemorySource::kNone: return "none";
  case MemorySource::kExemplar: return "exemplar";
  case MemorySource::kSkill: return "skill";
  }
  return "none";
}

MemorySource memory_source_from_name(std::string_view name) {
  for (auto s : {MemorySource::kNone, MemorySource::kExemplar, MemorySource::kSkill}) {
    if (memory_source_name(s) == name) return s;
  }
  throw Error(ErrorCode::kConfig, "unknown memory source '" + std::string(name) + "'");
}

std::string_view reward_branch_name(RewardBranch b) {
  switch (b) {
  case RewardBranch::kParseFailure: return "parse_failure";
  case RewardBranch::kNoOp: return "no_op";
  case RewardBranch::kCopy: return "copy";
  case RewardBranch::kSimilarity: return "similarity";
  case RewardBranch::kImprovement: return "improvement";
  case RewardBranch::kDegradation: return "degradation";
  }
  return "parse_failure";
}

namespace {

RewardBranch reward_branch_from_name(std::string_view name) {
  for (auto b : {RewardBranch::kParseFailure, RewardBranch::kNoOp, RewardBranch::kCopy,
                 RewardBranch::kSimilarity, RewardBranch::kImprovement, RewardBranch::kDegradation}) {
    if (reward_branch_name(b) == name) return b;
  }
  throw Error(ErrorCode::kConfig, "unknown reward branch '" + std::string(name) + "'");
}

DoneReason done_reason_from_name(std::string_view name) {
  for (auto r : {DoneReason::kNone, DoneReason::kSuccess, DoneReason::kMaxTurns}) {
    if (done_reason_name(r) == name) return r;
  }
  throw Error(ErrorCode::kConfig, "unknown terminal reason '" + std::string(name) + "'");
}

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

std::string describe_values(const Objective &obj, const PropertyMap &values) {
  std::string out;
  for (const ObjectiveTerm &t : obj.terms()) {
    if (!out.empty()) out += ", ";
    out += t.oracle->name() + "=" + format_fixed(values.at(t.oracle->name()), 3);
  }
  return out;
}

}  // namespace

std::string_view done_reason_name(DoneReason r) {
  switch (r) {
  case DoneReason::kNone: return "none";
  case DoneReason::kSuccess: return "success";
  case DoneReason::kMaxTurns: return "max_turns";
  }
  return "none";
}

void EnvConfig::validate() const {
  if (objective.terms().empty()) throw Error(ErrorCode::kConfig, "environment needs an objective");
  if (max_turns < 1) throw Error(ErrorCode::kConfig, "max_turns must be at least 1");
  if (plateau_patience < 1) throw Error(ErrorCode::kConfig, "plateau_patience must be at least 1");
  if (copy_penalty > 0) throw Error(ErrorCode::kConfig, "copy_penalty must not be positive");
  if (!(memory_select_p >= 0 && memory_select_p <= 1))
    throw Error(ErrorCode::kConfig, "memory_select_p must lie in [0, 1]");
}

RewardOutcome compute_reward(const Molecule &current, double current_score, std::string_view proposal,
                             const Molecule &lead, const Objective &obj,
                             const std::set<std::string> &injected_exemplars, double copy_penalty,
                             BudgetLedger &ledger) {
  RewardOutcome out;
  std::optional<Molecule> m = try_parse_smiles(trim(proposal));
  if (!m) {
    out.branch = RewardBranch::kParseFailure;
    out.reward = -0.5;
    return out;
  }
  out.molecule = std::move(m);
  const Molecule &cand = *out.molecule;
  if (cand.canonical() == current.canonical()) {
    out.branch = RewardBranch::kNoOp;
    out.reward = -0.3;
    return out;
  }
  if (injected_exemplars.count(cand.canonical())) {
    out.branch = RewardBranch::kCopy;
    out.reward = copy_penalty;
    return out;
  }
  const double gamma = obj.similarity_threshold();
  out.similarity = similarity(lead, cand);
  if (out.similarity < gamma) {
    out.branch = RewardBranch::kSimilarity;
    out.reward = -2.0 * (gamma - out.similarity);
    return out;
  }
  out.values = ledger.evaluate(cand, obj);
  out.score = obj.aggregate(out.values);
  const double delta = out.score - current_score;
  if (delta > 0) {
    out.branch = RewardBranch::kImprovement;
    out.reward = 5.0 * delta;
  } else {
    out.branch = RewardBranch::kDegradation;
    out.reward = -std::abs(delta) + 0.0;  // no negative zero
  }
  return out;
}

Environment::Environment(EnvConfig config, Memories memories, BudgetLedger &ledger)
    : config_(std::move(config)), memories_(std::move(memories)), ledger_(ledger) {
  config_.validate();
  if (memories_.skill_task.empty()) memories_.skill_task = config_.objective.name();
}

EnvState Environment::reset(const Molecule &lead, std::uint64_t seed) const {
  return reset(lead, ledger_.evaluate(lead, config_.objective), seed);
}

EnvState Environment::reset(const Molecule &lead, const PropertyMap &lead_values, std::uint64_t seed) const {
  EnvState s;
  s.lead = lead;
  s.lead_values = lead_values;
  s.lead_score = config_.objective.aggregate(s.lead_values);
  s.current = lead;
  s.current_values = s.lead_values;
  s.current_score = s.lead_score;
  s.best_score = s.lead_score;
  s.rng.seed(seed);
  return s;
}

void Environment::begin_turn(EnvState &state) const {
  state.injected.reset();
  if (state.done || state.stall_count < config_.plateau_patience) return;

  std::vector<RetrievedExemplar> exemplars;
  if (memories_.exemplars && !memories_.exemplars->empty()) {
    exemplars = retrieve_exemplars(*memories_.exemplars, state.current, state.lead, config_.objective,
                                   config_.exemplar_params);
  }
  std::vector<RetrievedSkill> skills;
  if (memories_.skills) skills = memories_.skills->retrieve(state.current, memories_.skill_task, config_.skill_params);

  MemorySource pick = MemorySource::kNone;
  if (!exemplars.empty() && !skills.empty()) {
    pick = uniform_unit(state.rng) < config_.memory_select_p ? MemorySource::kExemplar : MemorySource::kSkill;
  } else if (!exemplars.empty()) {
    pick = MemorySource::kExemplar;
  } else if (!skills.empty()) {
    pick = MemorySource::kSkill;
  }
  if (pick == MemorySource::kNone) return;

  InjectedMemory mem;
  mem.source = pick;
  if (pick == MemorySource::kExemplar) {
    mem.block = render_exemplar_block(exemplars);
    for (const RetrievedExemplar &e : exemplars) mem.exemplars.insert(e.canonical);
  } else {
    mem.block = render_skill_block(skills, memories_.skill_task);
  }
  state.injected = std::move(mem);
}

StepResult Environment::step(EnvState &state, std::string_view action) const {
  if (state.done) throw Error(ErrorCode::kConfig, "step on a finished rollout");
  StepResult result;
  static const std::set<std::string> kNoExemplars;
  const std::set<std::string> &shown = state.injected ? state.injected->exemplars : kNoExemplars;
  const std::int64_t consumed_before = ledger_.consumed();

  RewardOutcome r;
  try {
    r = compute_reward(state.current, state.current_score, action, state.lead, config_.objective, shown,
                       config_.copy_penalty, ledger_);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::kBudgetExhausted) throw;
    state.done = true;
    state.done_reason = DoneReason::kNone;
    result.done = true;
    result.budget_exhausted = true;
    result.feedback = "Oracle budget exhausted; the candidate was not evaluated.";
    return result;
  }
  result.budget_consumed = ledger_.consumed() - consumed_before;
  result.reward = r.reward;
  result.branch = r.branch;

  HistoryEntry entry;
  entry.action = one_line(trim(action));
  entry.canonical = r.molecule ? r.molecule->canonical() : std::string();
  entry.reward = r.reward;
  entry.branch = r.branch;
  entry.injected = state.injected ? state.injected->source : MemorySource::kNone;

  const bool evaluated = r.branch == RewardBranch::kImprovement || r.branch == RewardBranch::kDegradation;
  bool improved_best = false;
  switch (r.branch) {
  case RewardBranch::kParseFailure: result.feedback = "Invalid SMILES; the molecule could not be parsed."; break;
  case RewardBranch::kNoOp: result.feedback = "No change; the proposal equals the current molecule."; break;
  case RewardBranch::kCopy: result.feedback = "The proposal copies a reference molecule."; break;
  case RewardBranch::kSimilarity:
    result.feedback = "Similarity to the lead is " + format_fixed(r.similarity, 3) + ", below the required " +
                      format_shortest(config_.objective.similarity_threshold()) + ".";
    break;
  case RewardBranch::kImprovement:
  case RewardBranch::kDegradation:
    result.feedback = "Valid molecule. " + describe_values(config_.objective, r.values) +
                      ". Similarity to the lead is " + format_fixed(r.similarity, 3) + ".";
    break;
  }
  if (evaluated) {
    entry.valid = true;
    entry.score = r.score;
    state.current = *r.molecule;
    state.current_values = r.values;
    state.current_score = r.score;
    if (r.score > state.best_score) {
      state.best_score = r.score;
      improved_best = true;
    }
    if (check_success(r.similarity, config_.objective, r.values, state.lead_values)) {
      state.done = true;
      state.done_reason = DoneReason::kSuccess;
    }
  }
  state.stall_count = improved_best ? 0 : state.stall_count + 1;
  state.history.push_back(std::move(entry));
  ++state.turn;
  if (!state.done && state.turn >= config_.max_turns) {
    state.done = true;
    state.done_reason = DoneReason::kMaxTurns;
  }
  result.done = state.done;
  result.done_reason = state.done_reason;
  return result;
}

std::string render_task_prompt(const Objective &obj, const Molecule &lead) {
  std::string out(shipped_data("prompt_template.txt"));
  const std::pair<std::string_view, std::string> fields[] = {
      {"{similarity_threshold}", format_shortest(obj.similarity_threshold())},
      {"{input_smiles}", lead.canonical()},
      {"{property_description}", obj.description()},
  };
  for (const auto &[key, value] : fields) {
    for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
      out.replace(pos, key.size(), value);
  }
  return out;
}

std::string Environment::observation(const EnvState &state) const {
  std::string out = render_task_prompt(config_.objective, state.lead);
  if (!out.empty() && out.back() != '\n') out += '\n';
  if (!state.history.empty()) out += '\n';
  for (std::size_t i = 0; i < state.history.size(); ++i) {
    const HistoryEntry &h = state.history[i];
    out += "turn " + std::to_string(i + 1) + ": SMILES=" + h.action + " reward=" + format_fixed(h.reward, 3) +
           " score=" + (h.score ? format_fixed(*h.score, 3) : std::string("n/a")) + "\n";
  }
  if (state.injected) {
    out += '\n';
    out += state.injected->block;
  }
  return out;
}

// ---------------------------------------------------------------------------

Trajectory make_trajectory(int rollout, const EnvState &state) {
  Trajectory t;
  t.rollout = rollout;
  t.lead = state.lead.canonical();
  t.lead_score = state.lead_score;
  t.steps = state.history;
  t.terminal_reason = state.done_reason;
  return t;
}

std::string trajectory_to_jsonl(const Trajectory &t) {
  using nlohmann::ordered_json;
  std::string out;
  auto base = [&](int turn) {
    ordered_json j;
    j["rollout"] = t.rollout;
    j["turn"] = turn;
    return j;
  };
  auto tail = [&](ordered_json &j, bool last) {
    j["lead"] = t.lead;
    j["lead_score"] = t.lead_score;
    if (last) j["terminal_reason"] = done_reason_name(t.terminal_reason);
    out += j.dump();
    out += '\n';
  };
  if (t.steps.empty()) {
    ordered_json j = base(0);
    tail(j, true);
    return out;
  }
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const HistoryEntry &h = t.steps[i];
    ordered_json j = base(static_cast<int>(i) + 1);
    j["action"] = h.action;
    j["canonical"] = h.canonical;
    j["reward"] = h.reward;
    j["score"] = h.score ? ordered_json(*h.score) : ordered_json(nullptr);
    j["valid"] = h.valid;
    j["branch"] = reward_branch_name(h.branch);
    j["injected_source"] = memory_source_name(h.injected);
    tail(j, i + 1 == t.steps.size());
  }
  return out;
}

std::vector<Trajectory> parse_trajectory_jsonl(std::string_view text) {
  using nlohmann::json;
  std::vector<Trajectory> out;
  // Rollout indices restart for every lead, so the lead is part of the key.
  std::map<std::pair<std::string, int>, std::size_t> index;
  int line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "trajectory line " + std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(line);
      const int rollout = j.at("rollout").get<int>();
      std::string lead = j.at("lead").get<std::string>();
      auto [it, fresh] = index.emplace(std::make_pair(lead, rollout), out.size());
      if (fresh) {
        Trajectory t;
        t.rollout = rollout;
        t.lead = std::move(lead);
        t.lead_score = j.at("lead_score").get<double>();
        out.push_back(std::move(t));
      }
      Trajectory &t = out[it->second];
      if (j.contains("terminal_reason")) t.terminal_reason = done_reason_from_name(j.at("terminal_reason").get<std::string>());
      if (j.at("turn").get<int>() == 0) continue;
      HistoryEntry h;
      h.action = j.at("action").get<std::string>();
      h.canonical = j.value("canonical", std::string());
      h.reward = j.at("reward").get<double>();
      if (!j.at("score").is_null()) h.score = j.at("score").get<double>();
      h.valid = j.at("valid").get<bool>();
      h.branch = reward_branch_from_name(j.value("branch", std::string(h.valid ? "improvement" : "parse_failure")));
      h.injected = memory_source_from_name(j.value("injected_source", std::string("none")));
      t.steps.push_back(std::move(h));
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kConfig, where + e.what());
    } catch (const Error &e) {
      throw Error(ErrorCode::kConfig, where + e.what());
    }
  }
  return out;
}

std::vector<ScoredState> scored_states(const Trajectory &t) {
  std::vector<ScoredState> out{{t.lead, t.lead_score}};
  for (const HistoryEntry &h : t.steps) {
    if (h.valid && h.score) out.push_back({h.canonical.empty() ? h.action : h.canonical, *h.score});
  }
  return out;
}

}  // namespace memopt
