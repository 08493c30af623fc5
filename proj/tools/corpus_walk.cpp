// SPDX-License-Identifier: Apache-2.0

// Expands a seed corpus with molecules reached by short seeded mutation
// walks. Output is one canonical SMILES per line, sorted, seeds excluded.
//
//   memopt_corpus_walk <seeds.smi> <steps> <walks-per-seed> <seed>

#include <cstdlib>
#include <iostream>
#include <set>

#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/molgraph.hpp"
#include "memopt/random.hpp"

int main(int argc, char **argv) {
  using namespace memopt;
  if (argc != 5) {
    std::cerr << "usage: memopt_corpus_walk <seeds.smi> <steps> <walks-per-seed> <seed>\n";
    return 2;
  }
  const int steps = std::atoi(argv[2]);
  const int walks = std::atoi(argv[3]);
  const std::uint64_t seed = std::strtoull(argv[4], nullptr, 10);
  constexpr EditKind kKinds[] = {EditKind::kSubstituteAtom, EditKind::kAppendTerminalAtom,
                                 EditKind::kDeleteTerminalAtom, EditKind::kChangeBondOrder};

  std::set<std::string> seeds;
  std::set<std::string> out;
  std::uint64_t counter = 0;
  for (const std::string &s : read_smiles_lines(read_text_file(argv[1]))) {
    const Molecule start = parse_smiles(s);
    seeds.insert(start.canonical());
    for (int w = 0; w < walks; ++w) {
      Molecule cur = start;
      for (int k = 0; k < steps; ++k) {
        const std::uint64_t step_seed = mix_seed(seed, ++counter);
        const EditOp op{kKinds[step_seed % 4], std::nullopt};
        try {
          cur = mutate(cur, op, step_seed);
        } catch (const Error &) {
          continue;
        }
      }
      out.insert(cur.canonical());
    }
  }
  for (const std::string &s : out)
    if (!seeds.count(s)) std::cout << s << '\n';
  return 0;
}
