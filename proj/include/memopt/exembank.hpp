// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memopt/chemfeat.hpp"
#include "memopt/oracles.hpp"

namespace memopt {

struct ExemplarRecord {
  std::string canonical;
  Fingerprint fp;
  PropertyMap props;
};

// One corpus row before parsing.
struct CorpusRow {
  int line = 0;
  std::string smiles;
  PropertyMap props;
};

// `smiles<TAB>prop=val;prop=val` lines (the second column is optional; a
// blank-separated name after the SMILES is ignored).
std::vector<CorpusRow> parse_corpus_tsv(std::string_view text);
// `{"smiles": ..., "props": {...}}` lines.
std::vector<CorpusRow> parse_corpus_jsonl(std::string_view text);
// Picks the format from the first non-blank, non-comment line.
std::vector<CorpusRow> parse_corpus(std::string_view text);

struct BuildReport {
  std::size_t rows = 0;
  std::size_t duplicates = 0;
  // (line, message) for every skipped row.
  std::vector<std::pair<int, std::string>> skipped;
};

enum class RecallMode {
  kExact,
  // Candidates ranked by shared on-bits through an inverted index, then
  // rescored exactly. May miss true neighbours.
  kApproximate,
};

struct RecallHit {
  int index;
  double similarity;
};

class ExemplarBank {
public:
  ExemplarBank() = default;
  ExemplarBank(std::vector<ExemplarRecord> records, int width = kDefaultFpWidth,
               int radius = kDefaultFpRadius);

  // Parses, canonicalizes and deduplicates rows (first occurrence wins;
  // later duplicates only fill in missing properties). `compute` oracles
  // fill properties a row does not provide. Never charges a budget.
  static ExemplarBank build(const std::vector<CorpusRow> &rows,
                            const std::vector<OraclePtr> &compute = {},
                            BuildReport *report = nullptr, int width = kDefaultFpWidth,
                            int radius = kDefaultFpRadius);

  // Writes `<prefix>.bank.jsonl` and `<prefix>.fp.bin`.
  void save(const std::string &prefix) const;
  // Throws kIo or kConfig on missing or inconsistent files. With `verify`,
  // every fingerprint is recomputed from its SMILES and compared.
  static ExemplarBank load(const std::string &prefix, bool verify = false);

  const std::vector<ExemplarRecord> &records() const { return records_; }
  const ExemplarRecord &record(int i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  int width() const { return width_; }
  int radius() const { return radius_; }
  // Index of a canonical SMILES, or -1.
  int find(std::string_view canonical) const;

  // The `pool_size` records most similar to `query`, ordered by similarity
  // descending then canonical ascending. Throws kEmptyBank.
  std::vector<RecallHit> candidate_recall(const Fingerprint &query, int pool_size,
                                          RecallMode mode = RecallMode::kExact) const;

private:
  void index();
  double similarity_to(int i, const Fingerprint &query) const;
  void build_inverted() const;

  std::vector<ExemplarRecord> records_;
  int width_ = kDefaultFpWidth;
  int radius_ = kDefaultFpRadius;
  int words_per_fp_ = 0;
  std::vector<std::uint64_t> words_;  // records_ fingerprints, contiguous
  std::vector<int> popcount_;
  std::vector<int> by_popcount_;  // record indices sorted by popcount
  std::unordered_map<std::string, int> by_canonical_;
  mutable std::vector<std::vector<int>> inverted_;  // bit -> records, built on demand
  mutable bool inverted_ready_ = false;
};

struct RetrievedExemplar {
  int index;
  std::string canonical;
  double score;             // objective aggregate over stored props
  double lead_similarity;
  double query_similarity;
};

struct RetrievalParams {
  int k = 3;
  double gamma_ex = 0.4;
  int pool_size = 200;
  RecallMode mode = RecallMode::kExact;
};

// Recall around `current`, keep records whose similarity to `lead` is at
// least gamma_ex and that carry every objective term, rank by aggregate
// score, then lead similarity, then canonical string. Throws kEmptyBank.
std::vector<RetrievedExemplar> retrieve_exemplars(const ExemplarBank &bank, const Molecule &current,
                                                  const Molecule &lead, const Objective &obj,
                                                  const RetrievalParams &params = {});

inline constexpr std::string_view kExemplarBlockHeader =
    "=== SIMILAR HIGH-SCORING MOLECULES FOR REFERENCE ===";

std::string render_exemplar_block(const std::vector<RetrievedExemplar> &exemplars);

}  // namespace memopt
