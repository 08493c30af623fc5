// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "memopt/data.hpp"
#include "memopt/molgraph.hpp"

#ifndef MEMOPT_DATA_DIR
#error "MEMOPT_DATA_DIR must be defined"
#endif

namespace memopt::testing {

inline std::string data_path(const std::string &rel) {
  return std::string(MEMOPT_DATA_DIR) + "/" + rel;
}

// The seed corpus followed by the mutation-walk corpus.
inline std::vector<std::string> corpus_smiles() {
  std::vector<std::string> out;
  for (const char *file : {"corpus/drugs.smi", "corpus/walks.smi"})
    for (std::string &s : read_smiles_lines(read_text_file(data_path(file))))
      out.push_back(std::move(s));
  return out;
}

inline std::vector<Molecule> corpus_molecules() {
  std::vector<Molecule> out;
  for (const std::string &s : corpus_smiles()) out.push_back(parse_smiles(s));
  return out;
}

}  // namespace memopt::testing
