// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "memopt/exembank.hpp"
#include "memopt/oracles.hpp"

namespace memopt::testing {

// A lead whose only satisfying analogue sits one edit from a bank exemplar
// and at least three edits from the lead. Hand trace of the greedy policy:
// two random turns that cannot improve (every other molecule scores at or
// below the lead), a plateau on turn three that injects the exemplar block
// with `kExemplar` first, then the proposal `kTarget`, the neighbour of
// `kExemplar` closest to the lead, which satisfies the criterion.
struct GreedyFixture {
  static constexpr const char *kLead = "CC(=O)Nc1ccc(OCC)cc1C(=O)NCCc1ccc(OC)c(OC)c1";
  static constexpr const char *kExemplar = "CCOc1ccc(c(c1)C(NCCc1cc(c(cc1F)ON)OC)=O)NC";
  static constexpr const char *kTarget = "CCOc1ccc(c(c1)C(NCCc1ccc(c(c1)OC)ON)=O)NC";
  static constexpr const char *kDecoys[3] = {"CC(=O)Nc1ccc(OC)cc1C(=O)NCCc1ccc(OC)c(OC)c1",
                                             "CC(=O)Nc1ccc(OCC)cc1C(=O)NCc1ccc(OC)c(OC)c1",
                                             "CC(=O)Nc1ccc(OCC)cc1C(=O)NCCc1ccc(O)c(OC)c1"};

  Objective objective() const {
    std::string rows = std::string(kLead) + "\t0.1\n" + kExemplar + "\t0.9\n" + kTarget + "\t0.95\n";
    for (const char *d : kDecoys) rows += std::string(d) + "\t0.05\n";
    auto table = TableOracle::parse("activity", rows);
    table->set_default(0.0);
    ObjectiveTerm t;
    t.oracle = table;
    t.success.threshold = 0.8;
    Objective obj("activity", {t}, 0.4);
    obj.set_description("Increase activity to at least 0.8.");
    return obj;
  }

  ExemplarBank bank() const {
    std::vector<CorpusRow> rows;
    rows.push_back({1, kExemplar, {}});
    for (const char *d : kDecoys) rows.push_back({2, d, {}});
    const Objective obj = objective();
    return ExemplarBank::build(rows, {obj.terms()[0].oracle});
  }
};

}  // namespace memopt::testing
