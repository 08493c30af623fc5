// SPDX-License-Identifier: Apache-2.0

#include "memopt/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "memopt/credit.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/format.hpp"
#include "memopt/harness.hpp"

namespace memopt {

namespace {

namespace fs = std::filesystem;

// Objective loading shared by every command that scores molecules.
struct ObjectiveOpts {
  std::string spec = "qed";
  double gamma = 0.4;
  bool gamma_set(const CLI::App &app) const { return app.count("--gamma-sim") > 0; }

  void add(CLI::App &app) {
    app.add_option("--objective", spec, "Objective file (JSON) or preset task such as qed or qed+plogp")
        ->capture_default_str();
    app.add_option("--gamma-sim", gamma, "Similarity threshold to the lead")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
  }

  // The file's gamma unless --gamma-sim was given.
  ObjectiveFile load(const CLI::App &app) const {
    ObjectiveFile f = load_objective_file(spec);
    if (gamma_set(app)) {
      const std::string description = f.objective.description();
      f.objective = Objective(f.objective.name(), f.objective.terms(), gamma);
      f.objective.set_description(description);
    }
    return f;
  }
};

std::vector<double> parse_csv(const std::string &text, const char *what) {
  std::vector<double> out;
  std::string_view rest = trim(text);
  if (rest.empty()) return out;
  for (;;) {
    const auto comma = rest.find(',');
    const std::string_view field = trim(rest.substr(0, comma));
    double v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
      throw Error(ErrorCode::kConfig, std::string(what) + ": not a number: '" + std::string(field) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

// Inline CSV, or the contents of a file when the argument names one.
std::vector<double> csv_arg(const std::string &arg, const char *what) {
  return parse_csv(fs::is_regular_file(arg) ? read_text_file(arg) : arg, what);
}

std::vector<Trajectory> load_trajectories(const std::string &path) {
  return parse_trajectory_jsonl(read_text_file(path));
}

SkillBank load_or_new_skills(const std::string &path, std::size_t capacity) {
  if (path.empty() || !fs::exists(path)) return SkillBank(capacity);
  return SkillBank::load(path, capacity);
}

void emit_error(std::ostream &err, std::string_view kind, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << '\n';
}

void use_stderr_logger() {
  if (spdlog::get("memopt")) return;
  auto logger = spdlog::stderr_logger_mt("memopt");
  logger->set_pattern("memopt: %l: %v");
  spdlog::set_default_logger(logger);
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  use_stderr_logger();
  CLI::App app{"Memory-guided molecular optimization toolkit", "memopt"};
  app.set_config("--config", "", "TOML or INI file with flag values; command-line flags win");
  app.require_subcommand(1);
  app.get_formatter()->column_width(36);

  // build-bank -------------------------------------------------------------
  std::string corpus, bank_out;
  std::vector<std::string> compute;
  int fp_width = kDefaultFpWidth, fp_radius = kDefaultFpRadius;
  CLI::App *build = app.add_subcommand("build-bank", "Build an exemplar bank from a corpus");
  build->add_option("--corpus", corpus, "Corpus file (SMILES[TAB]props lines or JSONL)")->required();
  build->add_option("--out", bank_out, "Output prefix for .bank.jsonl and .fp.bin")->required();
  build->add_option("--compute", compute, "Builtin oracles to compute for rows lacking them")->delimiter(',');
  build->add_option("--fp-width", fp_width, "Fingerprint width in bits")->capture_default_str();
  build->add_option("--fp-radius", fp_radius, "Fingerprint radius")->capture_default_str();

  // retrieve ---------------------------------------------------------------
  std::string bank_prefix, query, lead_smiles;
  RetrievalParams rparams;
  bool approximate = false;
  ObjectiveOpts retrieve_obj;
  CLI::App *retrieve = app.add_subcommand("retrieve", "Print the exemplar hint block for a molecule");
  retrieve->add_option("--bank", bank_prefix, "Exemplar bank prefix")->required();
  retrieve->add_option("--query", query, "Current molecule")->required();
  retrieve->add_option("--lead", lead_smiles, "Lead molecule (defaults to the query)");
  retrieve_obj.add(*retrieve);
  retrieve->add_option("-k,--k-ex", rparams.k, "Exemplars to show")->capture_default_str();
  retrieve->add_option("--gamma-ex", rparams.gamma_ex, "Minimum similarity of an exemplar to the lead")
      ->capture_default_str();
  retrieve->add_option("--pool-size", rparams.pool_size, "Candidate pool recalled before filtering")
      ->capture_default_str();
  retrieve->add_flag("--approximate", approximate, "Recall through the inverted index");

  // skills -----------------------------------------------------------------
  std::string skill_path, task, summarizer;
  std::size_t skill_capacity = 1000;
  double harvest_delta = kDefaultHarvestDelta;
  CLI::App *skills = app.add_subcommand("skills", "Manage the skill bank");
  skills->require_subcommand(1);
  // Shared flags live on `skills` and are accepted before or after the
  // subcommand name.
  skills->fallthrough();
  skills->add_option("--skills", skill_path, "Skill bank JSONL file")->required();
  skills->add_option("--skill-capacity", skill_capacity, "Cards kept per task")->capture_default_str();
  skills->add_option("--task", task, "Task key (required by harvest and insert)");
  std::string traj_path;
  CLI::App *harvest_cmd = skills->add_subcommand("harvest", "Distill improving steps of trajectories into skills");
  harvest_cmd->add_option("trajectories", traj_path, "Trajectory JSONL")->required();
  harvest_cmd->add_option("--delta", harvest_delta, "Minimum score improvement")->capture_default_str();
  harvest_cmd->add_option("--summarizer", summarizer, "Summarizer endpoint (exec:<cmd> or tcp:<host>:<port>)");
  CLI::App *list_cmd = skills->add_subcommand("list", "List skill cards");
  std::string before, after, text;
  double score_before = 0, score_after = 0;
  CLI::App *insert_cmd = skills->add_subcommand("insert", "Insert one edit as a skill");
  insert_cmd->add_option("--before", before, "Molecule before the edit")->required();
  insert_cmd->add_option("--after", after, "Molecule after the edit")->required();
  insert_cmd->add_option("--score-before", score_before, "Objective score before")->required();
  insert_cmd->add_option("--score-after", score_after, "Objective score after")->required();
  insert_cmd->add_option("--text", text, "Strategy sentence (generated when omitted)");
  std::size_t report_capacity = 0;
  CLI::App *evict_cmd = skills->add_subcommand("evict-report", "Show which cards a capacity would evict");
  evict_cmd->add_option("--capacity", report_capacity, "Capacity to evaluate (defaults to --skill-capacity)");

  // run --------------------------------------------------------------------
  std::string leads_path, out_dir, exemplar_prefix, skills_in, policy_spec = "random";
  SearchConfig search;
  ObjectiveOpts run_obj;
  bool online_harvest = false;
  CLI::App *run = app.add_subcommand("run", "Optimize every lead and write trajectories and a report");
  run->add_option("--leads", leads_path, "Leads file, one SMILES per line")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run_obj.add(*run);
  run->add_option("--exemplar-bank", exemplar_prefix, "Exemplar bank prefix (exemplar memory off when omitted)");
  run->add_option("--skills", skills_in, "Skill bank JSONL (skill memory off when omitted)");
  run->add_option("--task", task, "Skill task key (defaults to the objective name)");
  run->add_option("--policy", policy_spec, "random, greedy or wire:<endpoint>")->capture_default_str();
  run->add_option("--budget", search.budget, "Oracle calls per lead")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--turns", search.env.max_turns, "Turns per rollout")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--generations", search.generations, "Search generations")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--rollouts", search.rollouts, "Rollouts per generation")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--temp0", search.temp0, "Initial temperature")->capture_default_str();
  run->add_option("--temp-step", search.temp_step, "Temperature increase per generation")->capture_default_str();
  run->add_option("--temp-max", search.temp_max, "Temperature cap")->capture_default_str();
  run->add_option("--plateau", search.env.plateau_patience, "Stalled turns before memory injection")
      ->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--copy-penalty", search.env.copy_penalty, "Reward for copying a shown exemplar")->capture_default_str();
  run->add_option("--memory-p", search.env.memory_select_p, "Probability of picking exemplars over skills")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  run->add_option("--k-ex", search.env.exemplar_params.k, "Exemplars per block")->capture_default_str();
  run->add_option("--gamma-ex", search.env.exemplar_params.gamma_ex, "Exemplar similarity floor to the lead")
      ->capture_default_str();
  run->add_option("--k-fp", search.env.skill_params.k_fp, "Skills from the fingerprint channel")->capture_default_str();
  run->add_option("--k-fg", search.env.skill_params.k_fg, "Skills from the functional-group channel")->capture_default_str();
  run->add_option("--skill-capacity", skill_capacity, "Cards kept per task")->capture_default_str();
  run->add_option("--seed", search.seed, "Random seed")->capture_default_str();
  run->add_flag("--warm-start-incumbent", search.warm_start_incumbent, "Start later rollouts from the incumbent");
  run->add_flag("--online-harvest", online_harvest, "Harvest skills after every generation");
  run->add_option("--harvest-delta", search.harvest_delta, "Minimum improvement for online harvest")->capture_default_str();

  // eval -------------------------------------------------------------------
  std::string report_path, eval_traj;
  ObjectiveOpts eval_obj;
  bool tsv = false;
  CLI::App *eval = app.add_subcommand("eval", "Recompute SR, Sim and RI");
  auto *report_opt = eval->add_option("--report", report_path, "Report JSON written by run");
  auto *traj_opt = eval->add_option("--trajectories", eval_traj, "Trajectory JSONL to re-score");
  report_opt->excludes(traj_opt);
  eval_obj.add(*eval);
  eval->add_flag("--tsv", tsv, "Print the one-row TSV summary instead of JSON");

  // credit -----------------------------------------------------------------
  std::string rewards_arg, values_arg;
  double gamma_rl = 0.99, lambda = 0.95;
  CLI::App *credit = app.add_subcommand("credit", "Credit-assignment numerics");
  credit->require_subcommand(1);
  CLI::App *gae_cmd = credit->add_subcommand("gae", "Advantages as CSV");
  gae_cmd->add_option("--rewards", rewards_arg, "Rewards, CSV or a file holding CSV")->required();
  gae_cmd->add_option("--values", values_arg, "Values (one more than rewards), CSV or file")->required();
  gae_cmd->add_option("--gamma", gamma_rl, "Discount")->capture_default_str();
  gae_cmd->add_option("--lambda", lambda, "GAE lambda")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp &e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp &e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::Success &) {
    return 0;
  } catch (const CLI::ParseError &e) {
    emit_error(err, "usage", e.what());
    return 2;
  }
  if ((*harvest_cmd || *insert_cmd) && task.empty()) {
    emit_error(err, "usage", "--task is required");
    return 2;
  }

  try {
    if (*build) {
      BuildReport rep;
      std::vector<OraclePtr> oracles;
      for (const std::string &name : compute) oracles.push_back(builtin_oracle(name));
      const ExemplarBank bank =
          ExemplarBank::build(parse_corpus(read_text_file(corpus)), oracles, &rep, fp_width, fp_radius);
      bank.save(bank_out);
      nlohmann::ordered_json j;
      j["records"] = bank.size();
      j["rows"] = rep.rows;
      j["duplicates"] = rep.duplicates;
      j["skipped"] = rep.skipped.size();
      out << j.dump() << '\n';
    } else if (*retrieve) {
      const ObjectiveFile f = retrieve_obj.load(*retrieve);
      const ExemplarBank bank = ExemplarBank::load(bank_prefix);
      const Molecule current = parse_smiles(query);
      const Molecule lead = lead_smiles.empty() ? current : parse_smiles(lead_smiles);
      rparams.mode = approximate ? RecallMode::kApproximate : RecallMode::kExact;
      out << render_exemplar_block(retrieve_exemplars(bank, current, lead, f.objective, rparams));
    } else if (*skills) {
      SkillBank bank = load_or_new_skills(skill_path, skill_capacity);
      if (*harvest_cmd) {
        std::vector<std::vector<ScoredState>> states;
        for (const Trajectory &t : load_trajectories(traj_path)) states.push_back(scored_states(t));
        std::vector<SkillCard> cards;
        for (EditCard &card : harvest(states, harvest_delta)) {
          std::string sentence =
              summarizer.empty() ? summarize_template(card, task) : summarize_external(card, task, summarizer);
          cards.push_back(make_skill_card(std::move(card), std::move(sentence), task));
        }
        const InsertReport rep = bank.insert(task, std::move(cards));
        bank.save(skill_path);
        nlohmann::ordered_json j;
        j["added"] = rep.added;
        j["merged"] = rep.merged;
        j["evicted"] = rep.evicted.size();
        j["size"] = bank.size(task);
        out << j.dump() << '\n';
      } else if (*insert_cmd) {
        EditCard card = build_edit_card(parse_smiles(before), parse_smiles(after), score_before, score_after);
        if (text.empty()) text = summarize_template(card, task);
        const InsertReport rep = bank.insert(task, {make_skill_card(std::move(card), text, task)});
        bank.save(skill_path);
        nlohmann::ordered_json j;
        j["added"] = rep.added;
        j["merged"] = rep.merged;
        j["evicted"] = rep.evicted.size();
        j["text"] = text;
        out << j.dump() << '\n';
      } else {
        const std::vector<std::string> tasks = task.empty() ? bank.tasks() : std::vector<std::string>{task};
        const std::size_t cap = report_capacity ? report_capacity : skill_capacity;
        for (const std::string &t : tasks) {
          std::vector<SkillCard> cards = bank.cards(t);
          if (*list_cmd) {
            for (const SkillCard &c : cards)
              out << t << '\t' << c.id << '\t' << format_fixed(c.delta, 3) << '\t' << c.text << '\n';
            continue;
          }
          // Same order the bank evicts in: smallest improvement, then oldest.
          std::sort(cards.begin(), cards.end(), [](const SkillCard &a, const SkillCard &b) {
            return a.delta != b.delta ? a.delta < b.delta : a.seq < b.seq;
          });
          const std::size_t evict = cards.size() > cap ? cards.size() - cap : 0;
          out << "task " << t << ": " << cards.size() << " cards, capacity " << cap << ", " << evict
              << " would be evicted\n";
          for (std::size_t i = 0; i < evict; ++i)
            out << "  " << cards[i].id << '\t' << format_fixed(cards[i].delta, 3) << '\t' << cards[i].text << '\n';
        }
      }
    } else if (*run) {
      const ObjectiveFile f = run_obj.load(*run);
      search.env.objective = f.objective;
      if (f.budget && run->count("--budget") == 0) search.budget = *f.budget;
      search.budget_unit = f.budget_unit;
      search.memoize = f.memoize;
      search.online_harvest = online_harvest;
      search.validate();

      std::optional<ExemplarBank> exemplars;
      if (!exemplar_prefix.empty()) exemplars = ExemplarBank::load(exemplar_prefix);
      std::optional<SkillBank> skill_bank;
      if (!skills_in.empty() || online_harvest) skill_bank = load_or_new_skills(skills_in, skill_capacity);
      Memories memories{exemplars ? &*exemplars : nullptr, skill_bank ? &*skill_bank : nullptr, task};

      const std::vector<std::string> leads = read_smiles_lines(read_text_file(leads_path));
      if (leads.empty()) throw Error(ErrorCode::kNoLeads, "no leads");
      std::unique_ptr<Policy> policy = make_policy(policy_spec);
      fs::create_directories(out_dir);

      std::vector<LeadResult> results;
      std::string traj_text;
      for (std::size_t i = 0; i < leads.size(); ++i) {
        SearchConfig cfg = search;
        cfg.seed = mix_seed(search.seed, i);
        const SearchResult r = optimize_lead(parse_smiles(leads[i]), cfg, *policy, memories,
                                             online_harvest ? &*skill_bank : nullptr);
        for (const Trajectory &t : r.trajectories) traj_text += trajectory_to_jsonl(t);
        results.push_back(r.result);
        spdlog::info("lead {}/{}: {} calls, {}", i + 1, leads.size(), r.result.calls_used,
                     r.result.best ? "success" : "no feasible molecule");
      }
      const EvalReport rep = metrics(results, f.objective);
      write_text_file_atomic((fs::path(out_dir) / "trajectories.jsonl").string(), traj_text);
      write_text_file_atomic((fs::path(out_dir) / "report.json").string(), report_to_json(rep, results));
      write_text_file_atomic((fs::path(out_dir) / "report.tsv").string(), report_to_tsv(rep));
      if (online_harvest) skill_bank->save((fs::path(out_dir) / "skills.jsonl").string());
      out << report_to_tsv(rep);
    } else if (*eval) {
      const ObjectiveFile f = eval_obj.load(*eval);
      std::vector<LeadResult> results;
      if (!report_path.empty())
        results = results_from_report_json(read_text_file(report_path));
      else if (!eval_traj.empty())
        results = results_from_trajectories(load_trajectories(eval_traj), f.objective);
      else
        throw Error(ErrorCode::kConfig, "eval needs --report or --trajectories");
      const EvalReport rep = metrics(results, f.objective);
      out << (tsv ? report_to_tsv(rep) : report_to_json(rep, results));
    } else if (*credit) {
      const std::vector<double> adv =
          gae(csv_arg(rewards_arg, "rewards"), csv_arg(values_arg, "values"), gamma_rl, lambda);
      std::string line;
      for (std::size_t i = 0; i < adv.size(); ++i) line += (i ? "," : "") + format_shortest(adv[i]);
      out << line << '\n';
    }
  } catch (const Error &e) {
    emit_error(err, error_code_name(e.code()), e.what());
    return 1;
  } catch (const std::exception &e) {
    emit_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace memopt
