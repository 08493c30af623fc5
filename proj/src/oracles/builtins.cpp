// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <numeric>

#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/oracles.hpp"

namespace memopt {

std::string_view oracle_kind_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::kBuiltin:
      return "builtin";
    case OracleKind::kTable:
      return "table";
    case OracleKind::kExternal:
      return "external";
  }
  return "?";
}

Oracle::Oracle(std::string name, int direction, OracleKind kind)
    : name_(std::move(name)), direction_(direction), kind_(kind) {
  if (direction != 1 && direction != -1)
    throw Error(ErrorCode::kConfig, "oracle direction must be +1 or -1");
}

double builtin_mw(const Molecule &m) { return descriptors(m).mw; }
double builtin_ring(const Molecule &m) { return m.ring_count(); }
double builtin_hbd(const Molecule &m) { return descriptors(m).hbd; }
double builtin_hba(const Molecule &m) { return descriptors(m).hba; }

namespace {

const ValueTable &logp_table() {
  static const ValueTable t = ValueTable::parse(shipped_data("logp.tsv"), "logp.tsv");
  return t;
}

}  // namespace

std::string logp_class(const Molecule &m, int atom) {
  const Atom &a = m.atom(atom);
  std::string key(element_symbol(a.element));
  if (a.aromatic) key[0] = static_cast<char>(key[0] - 'A' + 'a');
  if (a.element == Element::kC) key += a.hydrogens > 0 ? "_H" : "_noH";
  if (a.element == Element::kO && !a.aromatic) key += a.hydrogens > 0 ? "_H" : "_noH";
  return key;
}

double builtin_logp_lite(const Molecule &m) {
  const ValueTable &t = logp_table();
  double sum = 0;
  for (int i = 0; i < m.num_atoms(); ++i) sum += t.at(logp_class(m, i));
  return sum;
}

double qed_desirability(double x, const QedParam &p) {
  return p.amplitude * 2.0 / (1.0 + std::exp(std::abs(x - p.center) / p.scale));
}

const std::map<std::string, QedParam, std::less<>> &qed_params() {
  static const auto params = [] {
    std::map<std::string, QedParam, std::less<>> out;
    for (const TsvRow &row : parse_tsv(shipped_data("qed.tsv"))) {
      if (row.fields.size() != 4)
        throw Error(ErrorCode::kConfig, "qed.tsv line " + std::to_string(row.line) +
                                            ": expected field, center, scale, amplitude");
      QedParam p{std::stod(row.fields[1]), std::stod(row.fields[2]), std::stod(row.fields[3])};
      if (!(p.scale > 0) || !(p.amplitude > 0) || p.amplitude > 1)
        throw Error(ErrorCode::kConfig, "qed.tsv line " + std::to_string(row.line) +
                                            ": scale must be positive, amplitude in (0, 1]");
      out.emplace(row.fields[0], p);
    }
    for (const char *field : {"mw", "ring_count", "hbd", "hba", "psa_lite", "rotatable_bonds"})
      if (!out.count(field)) throw Error(ErrorCode::kConfig, std::string("qed.tsv lacks ") + field);
    return out;
  }();
  return params;
}

double qed_lite_from_descriptors(const DescriptorVector &d) {
  const auto &p = qed_params();
  const std::pair<const char *, double> fields[] = {
      {"mw", d.mw},   {"ring_count", d.ring_count}, {"hbd", d.hbd},
      {"hba", d.hba}, {"psa_lite", d.psa_lite},     {"rotatable_bonds", d.rotatable_bonds}};
  double log_sum = 0;
  for (const auto &[name, x] : fields) log_sum += std::log(qed_desirability(x, p.find(name)->second));
  return std::exp(log_sum / std::size(fields));
}

double builtin_qed_lite(const Molecule &m) { return qed_lite_from_descriptors(descriptors(m)); }

int fused_ring_atom_count(const Molecule &m) {
  // Components of the ring-bond subgraph; a component is fused when its
  // cyclomatic number is at least two.
  const int n = m.num_atoms();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int b = 0; b < m.num_bonds(); ++b)
    if (m.bond_in_ring(b)) parent[find(m.bond(b).begin)] = find(m.bond(b).end);
  std::vector<int> atoms(n, 0);
  std::vector<int> bonds(n, 0);
  for (int i = 0; i < n; ++i)
    if (m.atom_in_ring(i)) ++atoms[find(i)];
  for (int b = 0; b < m.num_bonds(); ++b)
    if (m.bond_in_ring(b)) ++bonds[find(m.bond(b).begin)];
  int fused = 0;
  for (int r = 0; r < n; ++r)
    if (atoms[r] > 0 && bonds[r] - atoms[r] + 1 >= 2) fused += atoms[r];
  return fused;
}

double builtin_sa_lite(const Molecule &m) {
  const int heavy = m.num_atoms();
  const double fused_fraction =
      heavy == 0 ? 0.0 : static_cast<double>(fused_ring_atom_count(m)) / heavy;
  return -(0.3 * m.ring_count() + 0.1 * heavy + 1.0 * fused_fraction);
}

namespace {

class BuiltinOracle: public Oracle {
public:
  BuiltinOracle(std::string name, int direction, double (*fn)(const Molecule &))
      : Oracle(std::move(name), direction, OracleKind::kBuiltin), fn_(fn) { }

  double evaluate(const Molecule &m) const override { return fn_(m); }

private:
  double (*fn_)(const Molecule &);
};

double builtin_psa(const Molecule &m) { return descriptors(m).psa_lite; }
double builtin_rotb(const Molecule &m) { return descriptors(m).rotatable_bonds; }

struct BuiltinSpec {
  const char *name;
  int direction;
  double (*fn)(const Molecule &);
};

constexpr BuiltinSpec kBuiltins[] = {
    {"mw", +1, builtin_mw},
    {"ring", +1, builtin_ring},
    {"hbd", +1, builtin_hbd},
    {"hba", +1, builtin_hba},
    {"psa", +1, builtin_psa},
    {"rotb", +1, builtin_rotb},
    {"logp_lite", +1, builtin_logp_lite},
    {"qed_lite", +1, builtin_qed_lite},
    {"sa_lite", -1, builtin_sa_lite},
};

}  // namespace

std::vector<std::string> builtin_oracle_names() {
  std::vector<std::string> out;
  for (const BuiltinSpec &b : kBuiltins) out.emplace_back(b.name);
  return out;
}

OraclePtr builtin_oracle(std::string_view name) {
  for (const BuiltinSpec &b : kBuiltins)
    if (name == b.name) return std::make_shared<BuiltinOracle>(b.name, b.direction, b.fn);
  throw Error(ErrorCode::kConfig, "unknown builtin oracle: " + std::string(name));
}

}  // namespace memopt
