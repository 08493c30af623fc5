// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include "memopt/exembank.hpp"
#include "memopt/skillbank.hpp"

namespace memopt::testing {

// Scan, filter on lead similarity, rank; written without the bank's index.
inline std::vector<std::string> brute_force_exemplars(const ExemplarBank &bank, const Molecule &current,
                                                      const Molecule &lead, const Objective &obj,
                                                      const RetrievalParams &p) {
  const Fingerprint q = morgan_fp(current);
  const Fingerprint l = morgan_fp(lead);
  std::vector<std::pair<double, std::string>> scan;
  for (const ExemplarRecord &r : bank.records()) scan.emplace_back(tanimoto(q, r.fp), r.canonical);
  std::sort(scan.begin(), scan.end(), [](const auto &a, const auto &b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (scan.size() > static_cast<std::size_t>(p.pool_size)) scan.resize(p.pool_size);
  struct Row {
    double score, lead_sim;
    std::string smiles;
  };
  std::vector<Row> rows;
  for (const auto &[sim, smiles] : scan) {
    const ExemplarRecord &r = bank.record(bank.find(smiles));
    const double ls = tanimoto(r.fp, l);
    if (ls < p.gamma_ex) continue;
    double score = 0;
    bool ok = true;
    for (const ObjectiveTerm &t : obj.terms()) {
      auto it = r.props.find(t.oracle->name());
      if (it == r.props.end()) {
        ok = false;
        break;
      }
      score += t.weight * t.direction * it->second;
    }
    if (ok) rows.push_back({score, ls, smiles});
  }
  std::sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.lead_sim != b.lead_sim) return a.lead_sim > b.lead_sim;
    return a.smiles < b.smiles;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rows.size() && i < static_cast<std::size_t>(p.k); ++i)
    out.push_back(rows[i].smiles);
  return out;
}

// Each channel keeps cards at or above its threshold, ranked by delta, then
// similarity, then id; the functional-group channel skips ids already taken.
inline std::vector<std::int64_t> brute_force_skills(const std::vector<SkillCard> &cards, const Molecule &m,
                                                    const SkillRetrievalParams &p) {
  const Fingerprint fp = morgan_fp(m);
  const FunctionalGroupSet fg = detect_functional_groups(m);
  auto channel = [&](bool use_fp, double gamma, int k) {
    std::vector<std::tuple<double, double, std::int64_t>> rows;  // (-delta, -sim, id)
    for (const SkillCard &c : cards) {
      const double sim = use_fp ? tanimoto(fp, c.fp_key) : jaccard(fg, c.fg_tags);
      if (sim >= gamma) rows.emplace_back(-c.delta, -sim, c.id);
    }
    std::sort(rows.begin(), rows.end());
    std::vector<std::int64_t> ids;
    for (std::size_t i = 0; i < rows.size() && i < static_cast<std::size_t>(k); ++i) ids.push_back(std::get<2>(rows[i]));
    return ids;
  };
  std::vector<std::int64_t> out = channel(true, p.gamma_fp, p.k_fp);
  for (std::int64_t id : channel(false, p.gamma_fg, p.k_fg)) {
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return out;
}

// Card whose before-molecule is `m`; the after text only needs to be unique.
inline SkillCard synthetic_card(const Molecule &m, double delta, int serial, const std::string &task = "qed") {
  EditCard c;
  c.before = m.canonical();
  c.after = "C" + std::to_string(serial);
  c.score_before = 0;
  c.score_after = delta;
  return make_skill_card(std::move(c), "Skill " + std::to_string(serial) + ".", task);
}

}  // namespace memopt::testing
