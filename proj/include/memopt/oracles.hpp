// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memopt/chemfeat.hpp"
#include "memopt/molgraph.hpp"

namespace memopt {

class LineClient;

enum class OracleKind { kBuiltin, kTable, kExternal };

std::string_view oracle_kind_name(OracleKind kind);

// Oracle name to value.
using PropertyMap = std::map<std::string, double, std::less<>>;

class Oracle {
public:
  virtual ~Oracle() = default;

  const std::string &name() const { return name_; }
  // +1 to maximize, -1 to minimize.
  int direction() const { return direction_; }
  OracleKind kind() const { return kind_; }

  virtual double evaluate(const Molecule &m) const = 0;

protected:
  Oracle(std::string name, int direction, OracleKind kind);

private:
  std::string name_;
  int direction_;
  OracleKind kind_;
};

using OraclePtr = std::shared_ptr<const Oracle>;

// mw, ring, hbd, hba, psa, rotb, logp_lite, qed_lite, sa_lite.
std::vector<std::string> builtin_oracle_names();
// Throws kConfig for unknown names.
OraclePtr builtin_oracle(std::string_view name);

double builtin_mw(const Molecule &m);
double builtin_ring(const Molecule &m);
double builtin_hbd(const Molecule &m);
double builtin_hba(const Molecule &m);

// Per-atom contribution sum; classes are listed in logp.tsv.
double builtin_logp_lite(const Molecule &m);
// Contribution class of one atom, e.g. "C_H", "c_noH", "O_H", "Cl".
std::string logp_class(const Molecule &m, int atom);

struct QedParam {
  double center;
  double scale;
  double amplitude;
};

// Desirability amplitude·2/(1+exp(|x−center|/scale)), equal to the
// amplitude at the center and falling off symmetrically.
double qed_desirability(double x, const QedParam &p);

// Parameters keyed by descriptor field name, from qed.tsv.
const std::map<std::string, QedParam, std::less<>> &qed_params();

// Geometric mean of the six field desirabilities.
double qed_lite_from_descriptors(const DescriptorVector &d);
double builtin_qed_lite(const Molecule &m);

// −(0.3·rings + 0.1·heavy atoms + 1.0·fraction of atoms in fused ring
// systems). Minimized.
double builtin_sa_lite(const Molecule &m);
// Atoms lying in a ring system with at least two independent cycles.
int fused_ring_atom_count(const Molecule &m);

// Lookup keyed by canonical SMILES.
class TableOracle: public Oracle {
public:
  // Rows are `smiles<TAB>value`; keys are canonicalized on load.
  static std::shared_ptr<TableOracle> parse(std::string name, std::string_view text,
                                            int direction = +1);
  static std::shared_ptr<TableOracle> load(std::string name, const std::string &path,
                                           int direction = +1);

  // Throws kMissingEntry unless a default value is set.
  double evaluate(const Molecule &m) const override;

  void set_default(std::optional<double> value) { default_ = value; }
  std::size_t size() const { return values_.size(); }

private:
  TableOracle(std::string name, int direction): Oracle(std::move(name), direction, OracleKind::kTable) { }

  std::unordered_map<std::string, double> values_;
  std::optional<double> default_;
};

// Remote oracle over the `EVAL <name> <smiles>` / `OK <float>` protocol.
class ExternalOracle: public Oracle {
public:
  ExternalOracle(std::string name, std::string endpoint, int direction = +1,
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~ExternalOracle() override;

  // Throws kProtocol or kTimeout.
  double evaluate(const Molecule &m) const override;

private:
  std::unique_ptr<LineClient> client_;
  mutable std::mutex mu_;
};

enum class SuccessMode { kAbsolute, kDelta };
enum class Comparator { kGreaterEqual, kLessEqual };

struct SuccessCriterion {
  SuccessMode mode = SuccessMode::kAbsolute;
  Comparator cmp = Comparator::kGreaterEqual;
  double threshold = 0;

  bool holds(double value, double lead_value) const;
};

struct ObjectiveTerm {
  OraclePtr oracle;
  double weight = 1.0;  // normalized by Objective
  int direction = +1;
  SuccessCriterion success;
};

enum class BudgetUnit { kPerCandidate, kPerTerm };

class Objective {
public:
  Objective() = default;
  // Normalizes weights; throws kConfig when a comparator disagrees with its
  // term's direction or weights are not positive.
  Objective(std::string name, std::vector<ObjectiveTerm> terms, double similarity_threshold);

  const std::string &name() const { return name_; }
  const std::vector<ObjectiveTerm> &terms() const { return terms_; }
  double similarity_threshold() const { return gamma_; }
  const std::string &description() const { return description_; }
  void set_description(std::string d) { description_ = std::move(d); }

  // Σ w_i·sgn_i·F_i. Throws kConfig when a term value is missing.
  double aggregate(const PropertyMap &values) const;

  // Table-6-style task names: qed, plogp, sa, or a '+'-joined combination
  // (multi-property tasks use the delta criteria).
  static Objective preset(std::string_view task, double similarity_threshold = 0.4);

  // JSON object with `name`, `terms`, optional `gamma`, `description`.
  // Term oracles are builtin names, or `{"table": path}` /
  // `{"external": endpoint}` objects. Relative table paths resolve against
  // `base_dir`.
  static Objective from_json(std::string_view text, const std::string &base_dir = ".");

private:
  std::string name_;
  std::vector<ObjectiveTerm> terms_;
  double gamma_ = 0.4;
  std::string description_;
};

// Objective plus the ledger settings that travel with it in a config file.
struct ObjectiveFile {
  Objective objective;
  std::optional<std::int64_t> budget;
  BudgetUnit budget_unit = BudgetUnit::kPerCandidate;
  bool memoize = true;
};

// `from_json` plus optional `budget`, `budget_unit` (per_candidate |
// per_term) and `memoize` keys. A bare task name such as "qed" or
// "qed+plogp" is accepted in place of a path and yields the preset.
ObjectiveFile load_objective_file(const std::string &path_or_task);

// True iff sim(lead, cand) ≥ γ and every term's criterion holds.
bool check_success(const Molecule &lead, const Molecule &cand, const Objective &obj,
                   const PropertyMap &values, const PropertyMap &lead_values);
bool check_success(double similarity, const Objective &obj, const PropertyMap &values,
                   const PropertyMap &lead_values);

// Oracle-call budget with a memo cache keyed by canonical SMILES. All
// methods are serialized: a cache miss reserves its units and records the
// result under one lock, so the last unit is never spent twice.
class BudgetLedger {
public:
  explicit BudgetLedger(std::int64_t budget, BudgetUnit unit = BudgetUnit::kPerCandidate,
                        bool memoize = true);

  // Values for every term of `obj`. A miss costs one unit (per candidate) or
  // one per uncached term; hits are free. Throws kBudgetExhausted when the
  // cost does not fit.
  PropertyMap evaluate(const Molecule &m, const Objective &obj);

  // Cached values for `m`, if all terms are present. Never charges.
  std::optional<PropertyMap> peek(const Molecule &m, const Objective &obj) const;

  std::int64_t budget() const { return budget_; }
  std::int64_t consumed() const;
  std::int64_t remaining() const;
  bool exhausted() const;
  // Number of charged evaluation events.
  std::int64_t charged_events() const;

private:
  const std::int64_t budget_;
  const BudgetUnit unit_;
  const bool memoize_;
  mutable std::mutex mu_;
  std::int64_t consumed_ = 0;
  std::int64_t events_ = 0;
  std::unordered_map<std::string, PropertyMap> cache_;
};

}  // namespace memopt
