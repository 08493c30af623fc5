// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "json.hpp"
#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/exembank.hpp"

namespace memopt {

namespace {

double parse_value(std::string_view text, int line) {
  const std::string s(trim(text));
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception &) {
  }
  throw Error(ErrorCode::kConfig, "corpus line " + std::to_string(line) + ": bad value '" + s + "'");
}

template <class Fn>
void for_each_line(std::string_view text, Fn fn) {
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    fn(line_no, line);
  }
}

}  // namespace

std::vector<CorpusRow> parse_corpus_tsv(std::string_view text) {
  std::vector<CorpusRow> rows;
  for_each_line(text, [&](int line_no, std::string_view line) {
    CorpusRow row;
    row.line = line_no;
    const auto tab = line.find('\t');
    // SMILES never contain blanks; anything after one (a name) is ignored.
    const std::string_view first = trim(line.substr(0, tab));
    row.smiles = std::string(first.substr(0, first.find_first_of(" \t")));
    if (tab != std::string_view::npos) {
      std::string_view rest = line.substr(tab + 1);
      while (!rest.empty()) {
        const auto semi = rest.find(';');
        const std::string_view item = trim(rest.substr(0, semi));
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0)
          throw Error(ErrorCode::kConfig,
                      "corpus line " + std::to_string(line_no) + ": expected prop=value");
        row.props[std::string(trim(item.substr(0, eq)))] = parse_value(item.substr(eq + 1), line_no);
      }
    }
    rows.push_back(std::move(row));
  });
  return rows;
}

std::vector<CorpusRow> parse_corpus_jsonl(std::string_view text) {
  std::vector<CorpusRow> rows;
  for_each_line(text, [&](int line_no, std::string_view line) {
    const auto where = "corpus line " + std::to_string(line_no);
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("smiles") || !j.at("smiles").is_string())
      throw Error(ErrorCode::kConfig, where + ": expected {\"smiles\": ..., \"props\": {...}}");
    CorpusRow row;
    row.line = line_no;
    row.smiles = j.at("smiles").get<std::string>();
    if (j.contains("props")) {
      if (!j.at("props").is_object()) throw Error(ErrorCode::kConfig, where + ": props must be an object");
      for (const auto &[k, v] : j.at("props").items()) {
        if (!v.is_number()) throw Error(ErrorCode::kConfig, where + ": prop " + k + " is not a number");
        row.props[k] = v.get<double>();
      }
    }
    rows.push_back(std::move(row));
  });
  return rows;
}

std::vector<CorpusRow> parse_corpus(std::string_view text) {
  bool json = false;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const std::string_view line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    json = line.front() == '{';
    break;
  }
  return json ? parse_corpus_jsonl(text) : parse_corpus_tsv(text);
}

}  // namespace memopt
