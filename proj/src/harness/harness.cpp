// SPDX-License-Identifier: Apache-2.0

#include "memopt/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/format.hpp"
#include "memopt/wire.hpp"

namespace memopt {

void SearchConfig::validate() const {
  if (generations < 1) throw Error(ErrorCode::kConfig, "generations must be at least 1");
  if (rollouts < 1) throw Error(ErrorCode::kConfig, "rollouts must be at least 1");
  if (budget < 1) throw Error(ErrorCode::kConfig, "budget must be at least 1");
  if (!(temp0 <= temp_max)) throw Error(ErrorCode::kConfig, "temp0 must not exceed temp_max");
  if (temp_step < 0) throw Error(ErrorCode::kConfig, "temp_step must not be negative");
  if (!(harvest_delta > 0)) throw Error(ErrorCode::kConfig, "harvest delta must be positive");
  env.validate();
}

double temperature(int generation, const SearchConfig &cfg) {
  return std::min(cfg.temp0 + generation * cfg.temp_step, cfg.temp_max);
}

// ---------------------------------------------------------------------------
// Policies

namespace {

constexpr std::array<EditKind, 4> kEditKinds = {EditKind::kSubstituteAtom, EditKind::kAppendTerminalAtom,
                                               EditKind::kDeleteTerminalAtom, EditKind::kChangeBondOrder};

// One edit of a random applicable kind; `m` itself when nothing applies.
Molecule random_edit(const Molecule &m, Rng &rng) {
  std::vector<EditKind> kinds(kEditKinds.begin(), kEditKinds.end());
  shuffle_in_place(kinds, rng);
  for (EditKind kind : kinds) {
    try {
      return mutate(m, EditOp{kind, std::nullopt}, rng());
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kNoApplicableSite && e.code() != ErrorCode::kValence) throw;
    }
  }
  return m;
}

std::string random_edits(const Molecule &start, double temp, std::uint64_t seed) {
  Rng rng(seed);
  const int edits = std::max(1, static_cast<int>(std::ceil(temp)));
  Molecule m = start;
  for (int i = 0; i < edits; ++i) m = random_edit(m, rng);
  return m.canonical();
}

// SMILES of the first entry of an exemplar block in `text`, if any.
std::optional<std::string> first_exemplar(const std::string &text) {
  const auto header = text.find(kExemplarBlockHeader);
  if (header == std::string::npos) return std::nullopt;
  const std::string_view tag = "1. SMILES: ";
  const auto at = text.find(tag, header);
  if (at == std::string::npos) return std::nullopt;
  const auto begin = at + tag.size();
  const auto end = text.find_first_of(" \t\r\n", begin);
  return text.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

}  // namespace

std::string RandomEditPolicy::propose(const PolicyInput &in) {
  return random_edits(in.state.current, in.temperature, in.seed);
}

std::string RetrievalGreedyPolicy::propose(const PolicyInput &in) {
  const std::optional<std::string> top = first_exemplar(in.observation);
  std::optional<Molecule> exemplar = top ? try_parse_smiles(*top) : std::nullopt;
  if (!exemplar) return random_edits(in.state.current, in.temperature, in.seed);

  std::set<std::string> avoid{exemplar->canonical(), in.state.current.canonical()};
  for (const HistoryEntry &h : in.state.history) avoid.insert(h.canonical);
  if (in.state.injected) avoid.insert(in.state.injected->exemplars.begin(), in.state.injected->exemplars.end());

  const Molecule *pick = nullptr;
  double best = -1;
  const std::vector<Molecule> neighbours = single_edit_neighbors(*exemplar);
  for (const Molecule &n : neighbours) {
    if (avoid.count(n.canonical())) continue;
    const double s = similarity(in.state.lead, n);
    if (s > best) {
      best = s;
      pick = &n;
    }
  }
  if (!pick) return random_edits(in.state.current, in.temperature, in.seed);
  return pick->canonical();
}

WirePolicy::WirePolicy(std::string endpoint, std::chrono::milliseconds timeout)
    : client_(std::make_unique<LineClient>(std::move(endpoint), timeout)) { }

WirePolicy::~WirePolicy() = default;

std::string WirePolicy::propose(const PolicyInput &in) {
  nlohmann::ordered_json j;
  j["observation"] = in.observation;
  j["temperature"] = in.temperature;
  try {
    return std::string(trim(expect_ok(client_->request("ACT " + j.dump()))));
  } catch (const Error &e) {
    spdlog::warn("policy {}: {}", client_->endpoint(), e.what());
    return {};
  }
}

std::unique_ptr<Policy> make_policy(std::string_view spec) {
  if (spec == "random" || spec == "random_edit") return std::make_unique<RandomEditPolicy>();
  if (spec == "greedy" || spec == "retrieval_greedy") return std::make_unique<RetrievalGreedyPolicy>();
  if (spec.starts_with("wire:") && spec.size() > 5) return std::make_unique<WirePolicy>(std::string(spec.substr(5)));
  throw Error(ErrorCode::kConfig, "unknown policy '" + std::string(spec) + "' (random, greedy or wire:<endpoint>)");
}

// ---------------------------------------------------------------------------
// Search

SearchResult optimize_lead(const Molecule &lead, const SearchConfig &cfg, Policy &policy,
                           const Memories &memories, SkillBank *harvest_into) {
  cfg.validate();
  const Objective &obj = cfg.env.objective;
  BudgetLedger ledger(cfg.budget, cfg.budget_unit, cfg.memoize);
  Environment env(cfg.env, memories, ledger);

  SearchResult out;
  LeadResult &res = out.result;
  res.lead = lead.canonical();
  try {
    res.lead_values = ledger.evaluate(lead, obj);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::kBudgetExhausted) throw;
    res.calls_used = ledger.consumed();
    return out;
  }
  res.lead_score = obj.aggregate(res.lead_values);

  std::optional<Molecule> incumbent;
  if (check_success(1.0, obj, res.lead_values, res.lead_values)) {
    incumbent = lead;
    res.best = res.lead;
    res.best_values = res.lead_values;
    res.best_score = res.lead_score;
  }

  const std::string task = memories.skill_task.empty() ? obj.name() : memories.skill_task;
  bool exhausted = false;
  for (int g = 0; g < cfg.generations && !exhausted; ++g) {
    const double temp = temperature(g, cfg);
    std::vector<std::vector<ScoredState>> harvested;
    for (int r = 0; r < cfg.rollouts; ++r) {
      if (ledger.exhausted()) {
        exhausted = true;
        break;
      }
      const std::uint64_t rollout_seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(g)),
                                                  static_cast<std::uint64_t>(r));
      EnvState state = env.reset(lead, res.lead_values, mix_seed(rollout_seed, 1));
      if (cfg.warm_start_incumbent && incumbent) {
        state.current = *incumbent;
        state.current_values = res.best_values;
        state.current_score = res.best_score;
        state.best_score = std::max(state.lead_score, res.best_score);
      }
      while (!state.done) {
        env.begin_turn(state);
        const std::string obs = env.observation(state);
        const std::string action = policy.propose(
            {state, obs, temp, mix_seed(rollout_seed, 100 + static_cast<std::uint64_t>(state.turn))});
        const StepResult step = env.step(state, action);
        if (step.budget_exhausted) exhausted = true;
        if (step.done_reason == DoneReason::kSuccess && (!incumbent || state.current_score > res.best_score)) {
          incumbent = state.current;
          res.best = state.current.canonical();
          res.best_values = state.current_values;
          res.best_score = state.current_score;
        }
      }
      Trajectory t = make_trajectory(g * cfg.rollouts + r, state);
      if (cfg.online_harvest && harvest_into) harvested.push_back(scored_states(t));
      out.trajectories.push_back(std::move(t));
      if (exhausted) break;
    }
    out.generations_run = g + 1;
    if (!harvested.empty()) {
      std::vector<SkillCard> cards;
      for (EditCard &card : harvest(harvested, cfg.harvest_delta)) {
        std::string text = summarize_template(card, task);
        cards.push_back(make_skill_card(std::move(card), std::move(text), task));
      }
      if (!cards.empty()) harvest_into->insert(task, std::move(cards));
    }
  }
  res.calls_used = ledger.consumed();
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

EvalReport metrics(const std::vector<LeadResult> &results, const Objective &obj) {
  if (results.empty()) throw Error(ErrorCode::kNoLeads, "no leads");
  EvalReport rep;
  rep.objective = obj.name();
  int successes = 0;
  double sim_sum = 0, ri_sum = 0;
  for (const LeadResult &r : results) {
    LeadRecord rec;
    rec.lead = r.lead;
    rec.calls_used = r.calls_used;
    rec.success = r.best.has_value();
    rec.best = rec.success ? *r.best : r.lead;
    if (rec.success) {
      ++successes;
      rec.sim = similarity(parse_smiles(r.lead), parse_smiles(*r.best));
      double sum = 0;
      int used = 0;
      for (const ObjectiveTerm &t : obj.terms()) {
        const std::string &name = t.oracle->name();
        const auto before = r.lead_values.find(name);
        const auto after = r.best_values.find(name);
        if (before == r.lead_values.end() || after == r.best_values.end())
          throw Error(ErrorCode::kConfig, "result for " + r.lead + " lacks property " + name);
        if (before->second == 0) {
          spdlog::warn("relative improvement of {} skipped for {}: lead value is zero", name, r.lead);
          ++rep.skipped_ri_terms;
          continue;
        }
        sum += t.direction * (after->second - before->second) / std::fabs(before->second);
        ++used;
      }
      rec.ri = used ? sum / used : 0.0;
    }
    sim_sum += rec.sim;
    ri_sum += rec.ri;
    rep.records.push_back(std::move(rec));
  }
  const double n = static_cast<double>(results.size());
  rep.sr = 100.0 * successes / n;
  rep.sim = sim_sum / n;
  rep.ri = ri_sum / n;
  return rep;
}

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json props_json(const PropertyMap &p) {
  ordered_json j = ordered_json::object();
  for (const auto &[k, v] : p) j[k] = v;
  return j;
}

PropertyMap props_from(const json &j) {
  PropertyMap p;
  for (const auto &[k, v] : j.items()) p[k] = v.get<double>();
  return p;
}

}  // namespace

std::string report_to_json(const EvalReport &report, const std::vector<LeadResult> &results) {
  ordered_json j;
  j["objective"] = report.objective;
  j["leads"] = report.records.size();
  j["sr"] = report.sr;
  j["sim"] = report.sim;
  j["ri"] = report.ri;
  j["skipped_ri_terms"] = report.skipped_ri_terms;
  ordered_json records = ordered_json::array();
  for (const LeadRecord &r : report.records) {
    records.push_back({{"lead", r.lead}, {"best", r.best}, {"success", r.success}, {"sim", r.sim},
                       {"ri", r.ri}, {"calls_used", r.calls_used}});
  }
  j["records"] = std::move(records);
  ordered_json raw = ordered_json::array();
  for (const LeadResult &r : results) {
    raw.push_back({{"lead", r.lead},
                   {"lead_values", props_json(r.lead_values)},
                   {"lead_score", r.lead_score},
                   {"best", r.best ? ordered_json(*r.best) : ordered_json(nullptr)},
                   {"best_values", props_json(r.best_values)},
                   {"best_score", r.best_score},
                   {"calls_used", r.calls_used}});
  }
  j["results"] = std::move(raw);
  return j.dump(2) + "\n";
}

std::vector<LeadResult> results_from_report_json(std::string_view text) {
  std::vector<LeadResult> out;
  try {
    const json j = json::parse(text);
    for (const json &r : j.at("results")) {
      LeadResult res;
      res.lead = r.at("lead").get<std::string>();
      res.lead_values = props_from(r.at("lead_values"));
      res.lead_score = r.at("lead_score").get<double>();
      if (!r.at("best").is_null()) res.best = r.at("best").get<std::string>();
      res.best_values = props_from(r.at("best_values"));
      res.best_score = r.at("best_score").get<double>();
      res.calls_used = r.at("calls_used").get<std::int64_t>();
      out.push_back(std::move(res));
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kConfig, std::string("report: ") + e.what());
  }
  return out;
}

std::string report_to_tsv(const EvalReport &report) {
  return "objective\tleads\tSR\tSim\tRI\n" + report.objective + "\t" + std::to_string(report.records.size()) +
         "\t" + format_fixed(report.sr, 1) + "\t" + format_fixed(report.sim, 3) + "\t" +
         format_fixed(report.ri, 3) + "\n";
}

std::vector<LeadResult> results_from_trajectories(const std::vector<Trajectory> &trajectories,
                                                  const Objective &obj) {
  auto score = [&](const Molecule &m) {
    PropertyMap p;
    for (const ObjectiveTerm &t : obj.terms()) p[t.oracle->name()] = t.oracle->evaluate(m);
    return p;
  };
  struct Pending {
    Molecule lead;
    LeadResult res;
    std::set<std::string> seen;
  };
  std::vector<Pending> leads;
  std::map<std::string, std::size_t> index;
  for (const Trajectory &t : trajectories) {
    auto [it, fresh] = index.emplace(t.lead, leads.size());
    if (fresh) {
      Pending p{parse_smiles(t.lead), {}, {}};
      p.res.lead = p.lead.canonical();
      p.res.lead_values = score(p.lead);
      p.res.lead_score = obj.aggregate(p.res.lead_values);
      p.res.calls_used = 1;
      p.seen.insert(p.res.lead);
      if (check_success(1.0, obj, p.res.lead_values, p.res.lead_values)) {
        p.res.best = p.res.lead;
        p.res.best_values = p.res.lead_values;
        p.res.best_score = p.res.lead_score;
      }
      leads.push_back(std::move(p));
    }
    Pending &p = leads[it->second];
    for (const HistoryEntry &h : t.steps) {
      if (!h.valid || !h.score) continue;
      const Molecule m = parse_smiles(h.canonical.empty() ? h.action : h.canonical);
      if (!p.seen.insert(m.canonical()).second) continue;
      ++p.res.calls_used;
      const PropertyMap values = score(m);
      const double agg = obj.aggregate(values);
      if (check_success(similarity(p.lead, m), obj, values, p.res.lead_values) &&
          (!p.res.best || agg > p.res.best_score)) {
        p.res.best = m.canonical();
        p.res.best_values = values;
        p.res.best_score = agg;
      }
    }
  }
  std::vector<LeadResult> out;
  for (Pending &p : leads) out.push_back(std::move(p.res));
  return out;
}

}  // namespace memopt
