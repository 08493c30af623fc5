// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <queue>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/exembank.hpp"
#include "memopt/format.hpp"

namespace memopt {

namespace {

constexpr char kMagic[4] = {'E', 'X', 'F', 'P'};
constexpr std::uint8_t kFpVersion = 1;

}  // namespace

ExemplarBank::ExemplarBank(std::vector<ExemplarRecord> records, int width, int radius)
    : records_(std::move(records)), width_(width), radius_(radius) {
  index();
}

void ExemplarBank::index() {
  words_per_fp_ = (width_ + 63) / 64;
  words_.clear();
  words_.reserve(records_.size() * words_per_fp_);
  popcount_.clear();
  by_canonical_.clear();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const ExemplarRecord &r = records_[i];
    if (r.fp.width() != width_ || r.fp.radius() != radius_)
      throw Error(ErrorCode::kWidthMismatch, "record " + r.canonical + " has a different fingerprint shape");
    if (!by_canonical_.emplace(r.canonical, static_cast<int>(i)).second)
      throw Error(ErrorCode::kConfig, "duplicate bank record " + r.canonical);
    words_.insert(words_.end(), r.fp.words().begin(), r.fp.words().end());
    popcount_.push_back(r.fp.popcount());
  }
  by_popcount_.resize(records_.size());
  std::iota(by_popcount_.begin(), by_popcount_.end(), 0);
  std::stable_sort(by_popcount_.begin(), by_popcount_.end(),
                   [&](int a, int b) { return popcount_[a] < popcount_[b]; });
  inverted_.clear();
  inverted_ready_ = false;
}

ExemplarBank ExemplarBank::build(const std::vector<CorpusRow> &rows,
                                 const std::vector<OraclePtr> &compute, BuildReport *report,
                                 int width, int radius) {
  BuildReport local;
  BuildReport &rep = report ? *report : local;
  std::vector<ExemplarRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  for (const CorpusRow &row : rows) {
    ++rep.rows;
    std::optional<Molecule> m;
    try {
      m = parse_smiles(row.smiles);
    } catch (const Error &e) {
      rep.skipped.emplace_back(row.line, e.what());
      spdlog::warn("corpus line {}: skipped ({})", row.line, e.what());
      continue;
    }
    auto it = seen.find(m->canonical());
    if (it != seen.end()) {
      ++rep.duplicates;
      PropertyMap &props = records[it->second].props;
      for (const auto &[k, v] : row.props) props.emplace(k, v);
      continue;
    }
    ExemplarRecord r;
    r.canonical = m->canonical();
    r.fp = morgan_fp(*m, radius, width);
    r.props = row.props;
    try {
      for (const OraclePtr &o : compute)
        if (!r.props.count(o->name())) r.props[o->name()] = o->evaluate(*m);
    } catch (const Error &e) {
      rep.skipped.emplace_back(row.line, e.what());
      spdlog::warn("corpus line {}: skipped ({})", row.line, e.what());
      continue;
    }
    seen.emplace(r.canonical, records.size());
    records.push_back(std::move(r));
  }
  return ExemplarBank(std::move(records), width, radius);
}

int ExemplarBank::find(std::string_view canonical) const {
  auto it = by_canonical_.find(std::string(canonical));
  return it == by_canonical_.end() ? -1 : it->second;
}

double ExemplarBank::similarity_to(int i, const Fingerprint &query) const {
  const std::uint64_t *w = words_.data() + static_cast<std::size_t>(i) * words_per_fp_;
  const auto q = query.words();
  int common = 0;
  for (int k = 0; k < words_per_fp_; ++k) common += std::popcount(w[k] & q[k]);
  return tanimoto_from_counts(popcount_[i], query.popcount(), common);
}

void ExemplarBank::build_inverted() const {
  if (inverted_ready_) return;
  inverted_.assign(width_, {});
  for (std::size_t i = 0; i < records_.size(); ++i)
    for (int bit : records_[i].fp.on_bits()) inverted_[bit].push_back(static_cast<int>(i));
  inverted_ready_ = true;
}

std::vector<RecallHit> ExemplarBank::candidate_recall(const Fingerprint &query, int pool_size,
                                                      RecallMode mode) const {
  if (records_.empty()) throw Error(ErrorCode::kEmptyBank, "exemplar bank is empty");
  if (pool_size < 1) throw Error(ErrorCode::kConfig, "pool size must be at least 1");
  if (query.width() != width_ || query.radius() != radius_)
    throw Error(ErrorCode::kWidthMismatch, "query fingerprint shape differs from the bank");

  // Better-first ordering; the heap top is the worst kept hit.
  auto better = [&](const RecallHit &a, const RecallHit &b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return records_[a.index].canonical < records_[b.index].canonical;
  };
  std::priority_queue<RecallHit, std::vector<RecallHit>, decltype(better)> heap(better);
  const std::size_t want = std::min<std::size_t>(pool_size, records_.size());
  auto offer = [&](int i) {
    const RecallHit hit{i, similarity_to(i, query)};
    if (heap.size() < want) {
      heap.push(hit);
    } else if (better(hit, heap.top())) {
      heap.pop();
      heap.push(hit);
    }
  };

  if (mode == RecallMode::kExact) {
    // Walk outward from the query's popcount; min(p,q)/max(p,q) bounds the
    // similarity of everything further out on that side.
    const int q = query.popcount();
    auto bound = [&](int i) {
      const int p = popcount_[i];
      const int hi = std::max(p, q);
      return hi == 0 ? 1.0 : static_cast<double>(std::min(p, q)) / hi;
    };
    const auto split = std::lower_bound(by_popcount_.begin(), by_popcount_.end(), q,
                                        [&](int i, int v) { return popcount_[i] < v; });
    std::ptrdiff_t up = split - by_popcount_.begin();
    std::ptrdiff_t down = up - 1;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(by_popcount_.size());
    while (up < n || down >= 0) {
      const double bu = up < n ? bound(by_popcount_[up]) : -1.0;
      const double bd = down >= 0 ? bound(by_popcount_[down]) : -1.0;
      const double best = std::max(bu, bd);
      // Small slack so ties at the bound still reach the canonical tie-break.
      if (heap.size() == want && best + 1e-12 < heap.top().similarity) break;
      if (bu >= bd)
        offer(by_popcount_[up++]);
      else
        offer(by_popcount_[down--]);
    }
  } else {
    build_inverted();
    std::vector<int> shared(records_.size(), 0);
    for (int bit : query.on_bits())
      for (int i : inverted_[bit]) ++shared[i];
    std::vector<int> cand;
    for (std::size_t i = 0; i < shared.size(); ++i)
      if (shared[i] > 0) cand.push_back(static_cast<int>(i));
    const std::size_t keep = std::min(cand.size(), std::max<std::size_t>(want * 8, 1000));
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(),
                      [&](int a, int b) { return shared[a] != shared[b] ? shared[a] > shared[b] : a < b; });
    cand.resize(keep);
    for (int i : cand) offer(i);
    // Records sharing no bit have similarity 0 (or 1 when both are empty).
    if (heap.size() < want)
      for (std::size_t i = 0; i < shared.size(); ++i)
        if (shared[i] == 0) offer(static_cast<int>(i));
  }

  std::vector<RecallHit> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void ExemplarBank::save(const std::string &prefix) const {
  std::string jsonl;
  for (const ExemplarRecord &r : records_) {
    nlohmann::ordered_json j;
    j["smiles"] = r.canonical;
    j["props"] = nlohmann::ordered_json::object();
    for (const auto &[k, v] : r.props) j["props"][k] = v;
    jsonl += j.dump();
    jsonl += '\n';
  }
  std::string bin;
  bin.append(kMagic, 4);
  bin.push_back(static_cast<char>(kFpVersion));
  bin.push_back(static_cast<char>(radius_));
  bin.append(2, '\0');
  const std::uint32_t width = static_cast<std::uint32_t>(width_);
  const std::uint64_t count = records_.size();
  bin.append(reinterpret_cast<const char *>(&width), sizeof width);
  bin.append(reinterpret_cast<const char *>(&count), sizeof count);
  bin.append(reinterpret_cast<const char *>(words_.data()), words_.size() * sizeof(std::uint64_t));
  write_text_file_atomic(prefix + ".bank.jsonl", jsonl);
  write_text_file_atomic(prefix + ".fp.bin", bin);
}

ExemplarBank ExemplarBank::load(const std::string &prefix, bool verify) {
  const std::string bin = read_text_file(prefix + ".fp.bin");
  constexpr std::size_t kHeader = 4 + 1 + 1 + 2 + 4 + 8;
  if (bin.size() < kHeader || std::memcmp(bin.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::kConfig, prefix + ".fp.bin: not a fingerprint file");
  if (static_cast<std::uint8_t>(bin[4]) != kFpVersion)
    throw Error(ErrorCode::kConfig, prefix + ".fp.bin: unsupported version");
  const int radius = static_cast<std::uint8_t>(bin[5]);
  std::uint32_t width = 0;
  std::uint64_t count = 0;
  std::memcpy(&width, bin.data() + 8, sizeof width);
  std::memcpy(&count, bin.data() + 12, sizeof count);
  const std::size_t words_per = (width + 63) / 64;
  if (bin.size() != kHeader + count * words_per * sizeof(std::uint64_t))
    throw Error(ErrorCode::kConfig, prefix + ".fp.bin: size does not match header");

  const std::vector<CorpusRow> rows = parse_corpus_jsonl(read_text_file(prefix + ".bank.jsonl"));
  if (rows.size() != count)
    throw Error(ErrorCode::kConfig, prefix + ": record count differs between jsonl and fp.bin");
  std::vector<ExemplarRecord> records;
  records.reserve(count);
  const char *p = bin.data() + kHeader;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::uint64_t> words(words_per);
    std::memcpy(words.data(), p, words_per * sizeof(std::uint64_t));
    p += words_per * sizeof(std::uint64_t);
    ExemplarRecord r;
    r.canonical = rows[i].smiles;
    r.fp = Fingerprint::from_words(static_cast<int>(width), radius, std::move(words));
    r.props = rows[i].props;
    if (verify) {
      const Molecule m = parse_smiles(r.canonical);
      if (m.canonical() != r.canonical || morgan_fp(m, radius, static_cast<int>(width)) != r.fp)
        throw Error(ErrorCode::kConfig, prefix + ": record " + std::to_string(i + 1) + " is stale");
    }
    records.push_back(std::move(r));
  }
  return ExemplarBank(std::move(records), static_cast<int>(width), radius);
}

std::vector<RetrievedExemplar> retrieve_exemplars(const ExemplarBank &bank, const Molecule &current,
                                                  const Molecule &lead, const Objective &obj,
                                                  const RetrievalParams &params) {
  if (params.k < 1) throw Error(ErrorCode::kConfig, "K must be at least 1");
  if (!(params.gamma_ex >= 0 && params.gamma_ex <= 1))
    throw Error(ErrorCode::kConfig, "gamma_ex outside [0, 1]");
  const Fingerprint q = morgan_fp(current, bank.radius(), bank.width());
  const Fingerprint l = morgan_fp(lead, bank.radius(), bank.width());
  std::vector<RetrievedExemplar> kept;
  for (const RecallHit &hit : bank.candidate_recall(q, params.pool_size, params.mode)) {
    const ExemplarRecord &r = bank.record(hit.index);
    const double lead_sim = tanimoto(r.fp, l);
    if (lead_sim < params.gamma_ex) continue;
    bool complete = true;
    for (const ObjectiveTerm &t : obj.terms()) complete &= r.props.count(t.oracle->name()) > 0;
    if (!complete) continue;
    kept.push_back({hit.index, r.canonical, obj.aggregate(r.props), lead_sim, hit.similarity});
  }
  std::sort(kept.begin(), kept.end(), [](const RetrievedExemplar &a, const RetrievedExemplar &b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.lead_similarity != b.lead_similarity) return a.lead_similarity > b.lead_similarity;
    return a.canonical < b.canonical;
  });
  if (kept.size() > static_cast<std::size_t>(params.k)) kept.resize(params.k);
  return kept;
}

std::string render_exemplar_block(const std::vector<RetrievedExemplar> &exemplars) {
  std::string out(kExemplarBlockHeader);
  out += "\nHere are " + std::to_string(exemplars.size()) +
         " similar molecules with high target scores (higher is better):\n\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const RetrievedExemplar &e = exemplars[i];
    out += std::to_string(i + 1) + ". SMILES: " + e.canonical + "\n";
    out += "    target score: " + format_fixed(e.score, 3) + "\n";
    out += "    Similarity to original lead: " + format_fixed(e.lead_similarity, 3) + "\n\n";
  }
  out += "Learn from structural patterns, but do not copy directly.\n";
  return out;
}

}  // namespace memopt
