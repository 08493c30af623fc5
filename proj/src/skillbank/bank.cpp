// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "card_json.hpp"
#include "json.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/skillbank.hpp"

namespace memopt {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
T field(const json &j, const char *name) {
  auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::kConfig, std::string("skill card is missing '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception &) {
    throw Error(ErrorCode::kConfig, std::string("skill card field '") + name + "' has the wrong type");
  }
}

ordered_json fg_to_json(const FunctionalGroupSet &s) {
  ordered_json out = ordered_json::array();
  for (const std::string &t : s.tags()) out.push_back(t);
  return out;
}

FunctionalGroupSet fg_from_json(const json &j, const char *name) {
  auto tags = field<std::vector<std::string>>(j, name);
  return FunctionalGroupSet::unchecked(std::set<std::string>(tags.begin(), tags.end()));
}

}  // namespace

ordered_json edit_card_to_json(const EditCard &c) {
  ordered_json j;
  j["before"] = c.before;
  j["after"] = c.after;
  j["modification_type"] = modification_type_name(c.modification_type);
  j["removed_fragment"] = c.removed_fragment;
  j["added_fragment"] = c.added_fragment;
  j["scaffold_before"] = c.scaffold_before;
  j["scaffold_after"] = c.scaffold_after;
  j["scaffold_type"] = scaffold_type_name(c.scaffold_type);
  j["fg_removed"] = fg_to_json(c.fg_removed);
  j["fg_added"] = fg_to_json(c.fg_added);
  j["deltas"] = {{"mw", c.deltas.mw},
                 {"ring_count", c.deltas.ring_count},
                 {"hbd", c.deltas.hbd},
                 {"hba", c.deltas.hba},
                 {"psa_lite", c.deltas.psa_lite},
                 {"rotatable_bonds", c.deltas.rotatable_bonds}};
  j["score_before"] = c.score_before;
  j["score_after"] = c.score_after;
  j["mcs_approximate"] = c.mcs_approximate;
  j["removed_names"] = c.removed_names;
  j["added_names"] = c.added_names;
  j["attachment"] = {{"aromatic", c.attachment.aromatic_sites}, {"aliphatic", c.attachment.aliphatic_sites}};
  return j;
}

EditCard edit_card_from_json(const json &j) {
  EditCard c;
  c.before = field<std::string>(j, "before");
  c.after = field<std::string>(j, "after");
  c.modification_type = modification_type_from_name(field<std::string>(j, "modification_type"));
  c.removed_fragment = field<std::string>(j, "removed_fragment");
  c.added_fragment = field<std::string>(j, "added_fragment");
  c.scaffold_before = field<std::string>(j, "scaffold_before");
  c.scaffold_after = field<std::string>(j, "scaffold_after");
  c.scaffold_type = scaffold_type_from_name(field<std::string>(j, "scaffold_type"));
  c.fg_removed = fg_from_json(j, "fg_removed");
  c.fg_added = fg_from_json(j, "fg_added");
  const json d = field<json>(j, "deltas");
  c.deltas.mw = field<double>(d, "mw");
  c.deltas.ring_count = field<int>(d, "ring_count");
  c.deltas.hbd = field<int>(d, "hbd");
  c.deltas.hba = field<int>(d, "hba");
  c.deltas.psa_lite = field<double>(d, "psa_lite");
  c.deltas.rotatable_bonds = field<int>(d, "rotatable_bonds");
  c.score_before = field<double>(j, "score_before");
  c.score_after = field<double>(j, "score_after");
  c.mcs_approximate = j.value("mcs_approximate", false);
  c.removed_names = j.value("removed_names", std::vector<std::string>{});
  c.added_names = j.value("added_names", std::vector<std::string>{});
  if (auto it = j.find("attachment"); it != j.end()) {
    c.attachment.aromatic_sites = it->value("aromatic", 0);
    c.attachment.aliphatic_sites = it->value("aliphatic", 0);
  }
  return c;
}

SkillCard make_skill_card(EditCard card, std::string text, std::string task) {
  SkillCard s;
  const Molecule before = parse_smiles(card.before);
  s.fp_key = morgan_fp(before);
  s.fg_tags = detect_functional_groups(before);
  s.delta = card.delta();
  s.card = std::move(card);
  s.text = std::move(text);
  s.task = std::move(task);
  return s;
}

SkillBank::SkillBank(std::size_t capacity): capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::kConfig, "skill bank capacity must be positive");
}

SkillBank::SkillBank(const SkillBank &other) {
  std::shared_lock lock(other.mu_);
  capacity_ = other.capacity_;
  banks_ = other.banks_;
  next_id_ = other.next_id_;
  next_seq_ = other.next_seq_;
}

SkillBank &SkillBank::operator=(const SkillBank &other) {
  if (this == &other) return *this;
  SkillBank copy(other);
  std::unique_lock lock(mu_);
  capacity_ = copy.capacity_;
  banks_ = std::move(copy.banks_);
  next_id_ = copy.next_id_;
  next_seq_ = copy.next_seq_;
  return *this;
}

void SkillBank::set_capacity(std::size_t capacity) {
  if (capacity == 0) throw Error(ErrorCode::kConfig, "skill bank capacity must be positive");
  std::unique_lock lock(mu_);
  capacity_ = capacity;
  for (auto &[task, cards] : banks_) evict_locked(cards);
}

std::vector<std::int64_t> SkillBank::evict_locked(std::vector<SkillCard> &cards) {
  std::vector<std::int64_t> evicted;
  if (cards.size() <= capacity_) return evicted;
  std::vector<std::size_t> order(cards.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cards[a].delta != cards[b].delta) return cards[a].delta > cards[b].delta;
    return cards[a].seq > cards[b].seq;
  });
  std::vector<bool> keep(cards.size(), false);
  for (std::size_t i = 0; i < capacity_; ++i) keep[order[i]] = true;
  std::vector<SkillCard> kept;
  kept.reserve(capacity_);
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (keep[i])
      kept.push_back(std::move(cards[i]));
    else
      evicted.push_back(cards[i].id);
  }
  cards = std::move(kept);
  std::sort(evicted.begin(), evicted.end());
  return evicted;
}

InsertReport SkillBank::insert(const std::string &task, std::vector<SkillCard> incoming) {
  InsertReport report;
  std::unique_lock lock(mu_);
  std::vector<SkillCard> &cards = banks_[task];
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < cards.size(); ++i) index.emplace(std::make_pair(cards[i].card.before, cards[i].card.after), i);
  for (SkillCard &c : incoming) {
    if (c.task != task)
      throw Error(ErrorCode::kConfig, "skill card for task '" + c.task + "' inserted into bank '" + task + "'");
    const auto key = std::make_pair(c.card.before, c.card.after);
    auto it = index.find(key);
    if (it != index.end()) {
      ++report.merged;
      SkillCard &existing = cards[it->second];
      if (c.delta > existing.delta) {
        c.id = existing.id;
        c.seq = next_seq_++;
        existing = std::move(c);
      }
      continue;
    }
    c.id = next_id_++;
    c.seq = next_seq_++;
    index.emplace(key, cards.size());
    cards.push_back(std::move(c));
    ++report.added;
  }
  report.evicted = evict_locked(cards);
  return report;
}

std::vector<SkillCard> SkillBank::cards(const std::string &task) const {
  std::shared_lock lock(mu_);
  auto it = banks_.find(task);
  if (it == banks_.end()) return {};
  std::vector<SkillCard> out = it->second;
  std::sort(out.begin(), out.end(), [](const SkillCard &a, const SkillCard &b) { return a.seq < b.seq; });
  return out;
}

std::vector<std::string> SkillBank::tasks() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto &[task, cards] : banks_) out.push_back(task);
  return out;
}

std::size_t SkillBank::size(const std::string &task) const {
  std::shared_lock lock(mu_);
  auto it = banks_.find(task);
  return it == banks_.end() ? 0 : it->second.size();
}

std::vector<RetrievedSkill> SkillBank::retrieve(const Molecule &current, const std::string &task,
                                                const SkillRetrievalParams &p) const {
  if (p.gamma_fp < 0 || p.gamma_fp > 1 || p.gamma_fg < 0 || p.gamma_fg > 1)
    throw Error(ErrorCode::kConfig, "skill retrieval thresholds must lie in [0, 1]");
  const Fingerprint fp = morgan_fp(current);
  const FunctionalGroupSet fg = detect_functional_groups(current);

  std::shared_lock lock(mu_);
  auto bank = banks_.find(task);
  if (bank == banks_.end()) return {};
  const std::vector<SkillCard> &cards = bank->second;

  using Scored = std::pair<double, std::size_t>;
  auto rank = [&](std::vector<Scored> &v, int k) {
    std::sort(v.begin(), v.end(), [&](const Scored &a, const Scored &b) {
      const SkillCard &ca = cards[a.second];
      const SkillCard &cb = cards[b.second];
      if (ca.delta != cb.delta) return ca.delta > cb.delta;
      if (a.first != b.first) return a.first > b.first;
      return ca.id < cb.id;
    });
    if (v.size() > static_cast<std::size_t>(std::max(k, 0))) v.resize(std::max(k, 0));
  };
  std::vector<Scored> by_fp, by_fg;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    const double s_fp = tanimoto(fp, cards[i].fp_key);
    if (s_fp >= p.gamma_fp) by_fp.emplace_back(s_fp, i);
    const double s_fg = jaccard(fg, cards[i].fg_tags);
    if (s_fg >= p.gamma_fg) by_fg.emplace_back(s_fg, i);
  }
  rank(by_fp, p.k_fp);
  rank(by_fg, p.k_fg);

  std::vector<RetrievedSkill> out;
  std::set<std::size_t> taken;
  for (const auto &[sim, i] : by_fp) {
    taken.insert(i);
    out.push_back({cards[i], RetrievedSkill::Channel::kFingerprint, sim});
  }
  for (const auto &[sim, i] : by_fg) {
    if (taken.insert(i).second) out.push_back({cards[i], RetrievedSkill::Channel::kFunctionalGroup, sim});
  }
  return out;
}

std::string SkillBank::to_jsonl() const {
  std::shared_lock lock(mu_);
  std::string out;
  for (const auto &[task, unsorted] : banks_) {
    std::vector<const SkillCard *> cards;
    for (const SkillCard &c : unsorted) cards.push_back(&c);
    std::sort(cards.begin(), cards.end(), [](const SkillCard *a, const SkillCard *b) { return a->seq < b->seq; });
    for (const SkillCard *c : cards) {
      ordered_json j;
      j["id"] = c->id;
      j["task"] = c->task;
      j["text"] = c->text;
      j["delta"] = c->delta;
      j["fg_tags"] = fg_to_json(c->fg_tags);
      j["card"] = edit_card_to_json(c->card);
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

void SkillBank::save(const std::string &path) const { write_text_file_atomic(path, to_jsonl()); }

SkillBank SkillBank::from_jsonl(std::string_view text, std::size_t capacity) {
  SkillBank bank(capacity);
  std::map<std::string, std::vector<SkillCard>> by_task;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kConfig, "skill bank line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      EditCard card = edit_card_from_json(field<json>(j, "card"));
      SkillCard s = make_skill_card(std::move(card), field<std::string>(j, "text"), field<std::string>(j, "task"));
      by_task[s.task].push_back(std::move(s));
    } catch (const Error &e) {
      throw Error(e.code(), "skill bank line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (auto &[task, cards] : by_task) bank.insert(task, std::move(cards));
  return bank;
}

SkillBank SkillBank::load(const std::string &path, std::size_t capacity) {
  return from_jsonl(read_text_file(path), capacity);
}

std::string render_skill_block(const std::vector<std::string> &sentences, std::string_view task) {
  std::string out(kSkillBlockPrefix);
  out += task;
  out += " ===\n";
  for (std::size_t i = 0; i < sentences.size(); ++i) out += std::to_string(i + 1) + ". " + sentences[i] + "\n";
  return out;
}

std::string render_skill_block(const std::vector<RetrievedSkill> &skills, std::string_view task) {
  std::vector<std::string> sentences;
  for (const RetrievedSkill &s : skills) sentences.push_back(s.skill.text);
  return render_skill_block(sentences, task);
}

}  // namespace memopt
