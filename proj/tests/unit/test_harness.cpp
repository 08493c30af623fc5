// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "json.hpp"
#include "memopt/error.hpp"
#include "memopt/harness.hpp"
#include "support/corpus.hpp"
#include "support/greedy_fixture.hpp"

namespace memopt {
namespace {

std::string stub(const std::string &args) { return std::string("exec:") + MEMOPT_WIRE_STUB + " " + args; }

SearchConfig small_config(const Objective &obj, int generations = 3, int rollouts = 4, std::int64_t budget = 500) {
  SearchConfig cfg;
  cfg.generations = generations;
  cfg.rollouts = rollouts;
  cfg.budget = budget;
  cfg.env.objective = obj;
  return cfg;
}

TEST(Temperature, Schedule) {
  SearchConfig cfg;
  EXPECT_EQ(temperature(0, cfg), 0.9);
  EXPECT_EQ(temperature(5, cfg), 0.9 + 5 * 0.1);
  EXPECT_DOUBLE_EQ(temperature(5, cfg), 1.4);
  EXPECT_EQ(temperature(11, cfg), 2.0);
  EXPECT_EQ(temperature(19, cfg), 2.0);
  cfg.temp0 = 2.5;
  cfg.env.objective = Objective::preset("qed");
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Policies, RandomEditDistanceFollowsTemperature) {
  const Molecule m = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  std::set<std::string> one;
  for (const Molecule &n : single_edit_neighbors(m)) one.insert(n.canonical());
  EnvState state;
  state.lead = m;
  state.current = m;
  RandomEditPolicy policy;
  const std::string obs;
  int two_edit = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::string a = policy.propose({state, obs, 0.9, seed});
    EXPECT_TRUE(one.count(a)) << a;
    EXPECT_EQ(a, policy.propose({state, obs, 0.9, seed}));
    const std::string b = policy.propose({state, obs, 2.0, seed});
    two_edit += !one.count(b) && b != m.canonical();
  }
  EXPECT_GT(two_edit, 50);
}

TEST(Policies, GreedyFallsBackWithoutExemplars) {
  const Molecule m = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  EnvState state;
  state.lead = m;
  state.current = m;
  RetrievalGreedyPolicy greedy;
  RandomEditPolicy random;
  const std::string obs = "no memory here";
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_EQ(greedy.propose({state, obs, 1.3, seed}), random.propose({state, obs, 1.3, seed}));
}

TEST(Policies, GreedyNeverCopiesTheExemplar) {
  testing::GreedyFixture fx;
  EnvState state;
  state.lead = parse_smiles(fx.kLead);
  state.current = state.lead;
  const Molecule exemplar = parse_smiles(fx.kExemplar);
  const std::string obs = std::string("prompt\n") + std::string(kExemplarBlockHeader) +
                          "\nHere are 1 similar molecules\n\n1. SMILES: " + exemplar.canonical() + "\n";
  RetrievalGreedyPolicy greedy;
  const std::string a = greedy.propose({state, obs, 0.9, 1});
  EXPECT_NE(a, exemplar.canonical());
  EXPECT_EQ(a, canonical_smiles(fx.kTarget));

  // Once tried, the next-closest neighbour is proposed instead.
  state.history.push_back({a, a, 0, std::nullopt, false, RewardBranch::kDegradation, MemorySource::kExemplar});
  const std::string b = greedy.propose({state, obs, 0.9, 1});
  EXPECT_NE(b, a);
  EXPECT_NE(b, exemplar.canonical());
}

TEST(Policies, Factory) {
  EXPECT_EQ(make_policy("random")->kind(), "random_edit");
  EXPECT_EQ(make_policy("greedy")->kind(), "retrieval_greedy");
  EXPECT_EQ(make_policy("wire:tcp:127.0.0.1:1")->kind(), "wire");
  EXPECT_THROW(make_policy("llm"), Error);
  EXPECT_THROW(make_policy("wire:"), Error);
}

struct WireCase {
  std::string args;
  RewardBranch branch;
};

TEST(Policies, WireRepliesDriveRewardBranches) {
  const Objective obj = Objective::preset("qed", 0.0);
  const Molecule lead = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  const std::vector<WireCase> cases = {
      {"policy-lead", RewardBranch::kNoOp},
      {"reply 'OK C1CC('", RewardBranch::kParseFailure},
      {"reply garbage", RewardBranch::kParseFailure},
      {"reply 'OK CC(=O)Nc1ccc(F)cc1'", RewardBranch::kImprovement},
  };
  for (const WireCase &c : cases) {
    BudgetLedger ledger(10);
    EnvConfig ec;
    ec.objective = obj;
    Environment env(ec, {}, ledger);
    EnvState s = env.reset(lead, 1);
    WirePolicy policy(stub(c.args), std::chrono::milliseconds(5000));
    const std::string obs = env.observation(s);
    const std::string action = policy.propose({s, obs, 0.9, 1});
    const StepResult r = env.step(s, action);
    if (c.branch == RewardBranch::kImprovement) {
      EXPECT_TRUE(r.branch == RewardBranch::kImprovement || r.branch == RewardBranch::kDegradation) << c.args;
      EXPECT_EQ(r.budget_consumed, 1);
    } else {
      EXPECT_EQ(r.branch, c.branch) << c.args;
    }
  }
}

TEST(Policies, WireTimeoutIsAnInvalidProposal) {
  EnvState s;
  s.lead = parse_smiles("CCO");
  s.current = s.lead;
  WirePolicy policy(stub("silent"), std::chrono::milliseconds(200));
  const std::string obs = "x";
  EXPECT_EQ(policy.propose({s, obs, 1.0, 1}), "");
}

TEST(Policies, WireRequestCarriesObservationAndTemperature) {
  const std::string log = ::testing::TempDir() + "policy_requests.txt";
  std::remove(log.c_str());
  EnvState s;
  s.lead = parse_smiles("CCO");
  s.current = s.lead;
  WirePolicy policy(stub("record " + log + " 'OK CCN'"));
  const std::string obs = "line one\nline two";
  EXPECT_EQ(policy.propose({s, obs, 1.4, 1}), "CCN");
  const std::string line = read_text_file(log);
  ASSERT_EQ(line.rfind("ACT ", 0), 0u);
  const auto j = nlohmann::json::parse(line.substr(4));
  EXPECT_EQ(j.at("observation"), obs);
  EXPECT_DOUBLE_EQ(j.at("temperature").get<double>(), 1.4);
}

TEST(Search, BudgetOfOneOnlyEvaluatesTheLead) {
  testing::GreedyFixture fx;
  RandomEditPolicy policy;
  for (double threshold : {0.05, 0.8}) {
    Objective obj = fx.objective();
    ObjectiveTerm t = obj.terms()[0];
    t.success.threshold = threshold;
    Objective o("activity", {t}, 0.4);
    const SearchResult r = optimize_lead(parse_smiles(fx.kLead), small_config(o, 3, 4, 1), policy, {});
    EXPECT_EQ(r.result.calls_used, 1);
    EXPECT_TRUE(r.trajectories.empty());
    EXPECT_EQ(r.result.best.has_value(), threshold < 0.1);
  }
}

TEST(Search, GreedyFindsTheExemplarNeighbour) {
  testing::GreedyFixture fx;
  const ExemplarBank bank = fx.bank();
  RetrievalGreedyPolicy policy;
  SearchConfig cfg = small_config(fx.objective(), 1, 1);
  const SearchResult r = optimize_lead(parse_smiles(fx.kLead), cfg, policy, {&bank, nullptr, ""});
  ASSERT_TRUE(r.result.best);
  EXPECT_EQ(*r.result.best, canonical_smiles(fx.kTarget));
  ASSERT_EQ(r.trajectories.size(), 1u);
  const Trajectory &t = r.trajectories[0];
  ASSERT_EQ(t.steps.size(), 3u);
  EXPECT_EQ(t.steps[0].injected, MemorySource::kNone);
  EXPECT_EQ(t.steps[1].injected, MemorySource::kNone);
  EXPECT_EQ(t.steps[2].injected, MemorySource::kExemplar);
  EXPECT_EQ(t.terminal_reason, DoneReason::kSuccess);
}

TEST(Search, BudgetCeilingAndDeterminism) {
  const Objective obj = Objective::preset("qed");
  RandomEditPolicy policy;
  for (const char *smiles : {"CC(=O)Nc1ccc(O)cc1", "CCOC(=O)c1ccccc1N", "O=C(O)c1ccccc1OC(C)=O"}) {
    SearchConfig cfg = small_config(obj, 4, 8, 40);
    cfg.seed = 7;
    cfg.memoize = false;
    const SearchResult a = optimize_lead(parse_smiles(smiles), cfg, policy, {});
    const SearchResult b = optimize_lead(parse_smiles(smiles), cfg, policy, {});
    EXPECT_LE(a.result.calls_used, 40);
    std::int64_t evaluated = 1;
    for (const Trajectory &t : a.trajectories)
      for (const HistoryEntry &h : t.steps) evaluated += h.score.has_value();
    EXPECT_EQ(a.result.calls_used, evaluated);
    const EvalReport ra = metrics({a.result}, obj), rb = metrics({b.result}, obj);
    EXPECT_EQ(report_to_json(ra, {a.result}), report_to_json(rb, {b.result}));
    std::string ja, jb;
    for (const Trajectory &t : a.trajectories) ja += trajectory_to_jsonl(t);
    for (const Trajectory &t : b.trajectories) jb += trajectory_to_jsonl(t);
    EXPECT_EQ(ja, jb);
  }
}

TEST(Search, IncumbentNeverDecreasesWithMoreGenerations) {
  Objective obj = Objective::preset("qed");
  ObjectiveTerm t = obj.terms()[0];
  t.success.threshold = 0.3;  // reachable, so incumbents exist
  const Objective easy("qed", {t}, 0.4);
  RandomEditPolicy policy;
  double last = -1e9;
  for (int g = 1; g <= 5; ++g) {
    SearchConfig cfg = small_config(easy, g, 6);
    cfg.seed = 3;
    const SearchResult r = optimize_lead(parse_smiles("CCOC(=O)c1ccccc1N"), cfg, policy, {});
    ASSERT_TRUE(r.result.best);
    EXPECT_GE(r.result.best_score, last);
    last = r.result.best_score;
  }
}

TEST(Search, OnlineHarvestFillsTheSkillBank) {
  const Objective obj = Objective::preset("qed");
  RandomEditPolicy policy;
  SkillBank skills;
  SearchConfig cfg = small_config(obj, 2, 8);
  cfg.online_harvest = true;
  cfg.harvest_delta = 0.01;
  optimize_lead(parse_smiles("CCOC(=O)c1ccccc1N"), cfg, policy, {nullptr, &skills, ""}, &skills);
  EXPECT_GT(skills.size("qed"), 0u);
  for (const SkillCard &c : skills.cards("qed")) EXPECT_GT(c.delta, 0.01);

  SkillBank untouched;
  cfg.online_harvest = false;
  optimize_lead(parse_smiles("CCOC(=O)c1ccccc1N"), cfg, policy, {nullptr, &untouched, ""}, &untouched);
  EXPECT_EQ(untouched.size("qed"), 0u);
}

TEST(Search, WarmStartBeginsFromIncumbent) {
  testing::GreedyFixture fx;
  const ExemplarBank bank = fx.bank();
  RetrievalGreedyPolicy policy;
  SearchConfig cfg = small_config(fx.objective(), 1, 2);
  cfg.warm_start_incumbent = true;
  const SearchResult r = optimize_lead(parse_smiles(fx.kLead), cfg, policy, {&bank, nullptr, ""});
  ASSERT_EQ(r.trajectories.size(), 2u);
  ASSERT_TRUE(r.result.best);
  // The second rollout's first random edit is made from the target.
  std::set<std::string> around;
  for (const Molecule &n : single_edit_neighbors(parse_smiles(fx.kTarget))) around.insert(n.canonical());
  ASSERT_FALSE(r.trajectories[1].steps.empty());
  EXPECT_TRUE(around.count(r.trajectories[1].steps[0].canonical));
}

// ---------------------------------------------------------------------------
// Metrics

LeadResult result(const std::string &lead, double f_lead, std::optional<std::string> best, double f_best,
                  const std::string &prop = "qed_lite") {
  LeadResult r;
  r.lead = canonical_smiles(lead);
  r.lead_values[prop] = f_lead;
  r.lead_score = f_lead;
  if (best) {
    r.best = canonical_smiles(*best);
    r.best_values[prop] = f_best;
  }
  return r;
}

TEST(Metrics, RelativeImprovementSigns) {
  const Objective qed = Objective::preset("qed");
  auto rep = metrics({result("CCO", 0.5, "CCN", 0.6)}, qed);
  EXPECT_NEAR(rep.ri, 0.2, 1e-12);
  EXPECT_EQ(rep.sr, 100.0);

  const Objective sa = Objective::preset("sa");
  const std::string prop = sa.terms()[0].oracle->name();
  rep = metrics({result("CCO", -3.0, "CCN", -4.0, prop)}, sa);
  EXPECT_NEAR(rep.ri, 1.0 / 3.0, 1e-12);
}

TEST(Metrics, FailureConventions) {
  const Objective qed = Objective::preset("qed");
  const auto lead_a = parse_smiles("CC(=O)Nc1ccc(O)cc1"), best_a = parse_smiles("CC(=O)Nc1ccc(F)cc1");
  const auto rep = metrics({result("CC(=O)Nc1ccc(O)cc1", 0.5, "CC(=O)Nc1ccc(F)cc1", 0.7),
                            result("CCOC(=O)c1ccccc1N", 0.4, std::nullopt, 0)},
                           qed);
  EXPECT_EQ(rep.sr, 50.0);
  EXPECT_NEAR(rep.sim, (similarity(lead_a, best_a) + 1.0) / 2, 1e-12);
  EXPECT_NEAR(rep.ri, (0.2 / 0.5 + 0.0) / 2, 1e-12);
  EXPECT_EQ(rep.records[1].best, canonical_smiles("CCOC(=O)c1ccccc1N"));

  const auto failed = metrics({result("CCO", 0.5, std::nullopt, 0), result("CCN", 0.1, std::nullopt, 0)}, qed);
  EXPECT_EQ(failed.sr, 0.0);
  EXPECT_EQ(failed.sim, 1.0);
  EXPECT_EQ(failed.ri, 0.0);
}

TEST(Metrics, ZeroLeadValueSkipsTheTerm) {
  const Objective obj = Objective::preset("qed+plogp");
  LeadResult r;
  r.lead = "CCO";
  r.best = "CCN";
  for (const ObjectiveTerm &t : obj.terms()) {
    r.lead_values[t.oracle->name()] = 0.0;
    r.best_values[t.oracle->name()] = 0.5;
  }
  r.lead_values[obj.terms()[0].oracle->name()] = 0.25;
  const auto rep = metrics({r}, obj);
  EXPECT_EQ(rep.skipped_ri_terms, 1);
  EXPECT_NEAR(rep.ri, 1.0, 1e-12);
}

TEST(Metrics, EmptyResultSet) {
  try {
    metrics({}, Objective::preset("qed"));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoLeads);
    EXPECT_STREQ(e.what(), "no leads");
  }
}

TEST(Metrics, ReportRoundTripAndTrajectoryRebuild) {
  const Objective obj = Objective::preset("qed");
  RandomEditPolicy policy;
  std::vector<LeadResult> results;
  std::vector<Trajectory> all;
  for (const char *smiles : {"CC(=O)Nc1ccc(O)cc1", "CCOC(=O)c1ccccc1N"}) {
    SearchConfig cfg = small_config(obj, 2, 4);
    SearchResult r = optimize_lead(parse_smiles(smiles), cfg, policy, {});
    results.push_back(r.result);
    for (Trajectory &t : r.trajectories) all.push_back(std::move(t));
  }
  const EvalReport rep = metrics(results, obj);
  const std::string json = report_to_json(rep, results);
  const auto back = results_from_report_json(json);
  EXPECT_EQ(report_to_json(metrics(back, obj), back), json);

  const auto rebuilt = metrics(results_from_trajectories(all, obj), obj);
  EXPECT_EQ(rebuilt.sr, rep.sr);
  EXPECT_NEAR(rebuilt.sim, rep.sim, 1e-12);
  EXPECT_NEAR(rebuilt.ri, rep.ri, 1e-12);

  const std::string tsv = report_to_tsv(rep);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "objective\tleads\tSR\tSim\tRI");
}

}  // namespace
}  // namespace memopt
