// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include "json.hpp"

#include "memopt/data.hpp"
#include "memopt/error.hpp"
#include "memopt/format.hpp"
#include "memopt/oracles.hpp"
#include "memopt/wire.hpp"

namespace memopt {

using json = nlohmann::json;

std::shared_ptr<TableOracle> TableOracle::parse(std::string name, std::string_view text,
                                                int direction) {
  std::shared_ptr<TableOracle> t(new TableOracle(std::move(name), direction));
  for (const TsvRow &row : parse_tsv(text)) {
    const auto where = "table oracle " + t->name() + " line " + std::to_string(row.line);
    if (row.fields.size() != 2) throw Error(ErrorCode::kConfig, where + ": expected smiles, value");
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(row.fields[1], &used);
      if (used != row.fields[1].size()) throw std::invalid_argument("");
    } catch (const std::exception &) {
      throw Error(ErrorCode::kConfig, where + ": bad value '" + row.fields[1] + "'");
    }
    std::string key;
    try {
      key = canonical_smiles(row.fields[0]);
    } catch (const Error &e) {
      throw Error(ErrorCode::kConfig, where + ": " + e.what());
    }
    t->values_[key] = v;
  }
  return t;
}

std::shared_ptr<TableOracle> TableOracle::load(std::string name, const std::string &path,
                                               int direction) {
  return parse(std::move(name), read_text_file(path), direction);
}

double TableOracle::evaluate(const Molecule &m) const {
  auto it = values_.find(m.canonical());
  if (it != values_.end()) return it->second;
  if (default_) return *default_;
  throw Error(ErrorCode::kMissingEntry, "no " + name() + " entry for " + m.canonical());
}

ExternalOracle::ExternalOracle(std::string name, std::string endpoint, int direction,
                               std::chrono::milliseconds timeout)
    : Oracle(std::move(name), direction, OracleKind::kExternal),
      client_(std::make_unique<LineClient>(std::move(endpoint), timeout)) { }

ExternalOracle::~ExternalOracle() = default;

double ExternalOracle::evaluate(const Molecule &m) const {
  std::lock_guard lock(mu_);
  const std::string payload = expect_ok(client_->request("EVAL " + name() + " " + m.canonical()));
  try {
    std::size_t used = 0;
    const double v = std::stod(payload, &used);
    if (used == trim(payload).size() && std::isfinite(v)) return v;
  } catch (const std::exception &) {
  }
  throw Error(ErrorCode::kProtocol, "oracle " + name() + " returned non-numeric '" + payload + "'");
}

bool SuccessCriterion::holds(double value, double lead_value) const {
  const double x = mode == SuccessMode::kAbsolute ? value : value - lead_value;
  return cmp == Comparator::kGreaterEqual ? x >= threshold : x <= threshold;
}

Objective::Objective(std::string name, std::vector<ObjectiveTerm> terms, double similarity_threshold)
    : name_(std::move(name)), terms_(std::move(terms)), gamma_(similarity_threshold) {
  if (terms_.empty()) throw Error(ErrorCode::kConfig, "objective needs at least one term");
  if (!(gamma_ >= 0 && gamma_ <= 1)) throw Error(ErrorCode::kConfig, "similarity threshold outside [0, 1]");
  double total = 0;
  for (const ObjectiveTerm &t : terms_) {
    if (!t.oracle) throw Error(ErrorCode::kConfig, "objective term without an oracle");
    if (!(t.weight > 0) || !std::isfinite(t.weight))
      throw Error(ErrorCode::kConfig, "term weights must be positive");
    if (t.direction != 1 && t.direction != -1)
      throw Error(ErrorCode::kConfig, "term direction must be +1 or -1");
    const bool upward = t.success.cmp == Comparator::kGreaterEqual;
    if (upward != (t.direction > 0))
      throw Error(ErrorCode::kConfig, "success comparator for " + t.oracle->name() +
                                          " disagrees with its direction");
    total += t.weight;
  }
  for (ObjectiveTerm &t : terms_) t.weight /= total;
}

double Objective::aggregate(const PropertyMap &values) const {
  double sum = 0;
  for (const ObjectiveTerm &t : terms_) {
    auto it = values.find(t.oracle->name());
    if (it == values.end()) throw Error(ErrorCode::kConfig, "missing value for " + t.oracle->name());
    sum += t.weight * t.direction * it->second;
  }
  return sum;
}

namespace {

struct PresetSpec {
  const char *task;
  const char *oracle;
  const char *label;
  SuccessCriterion single;
  SuccessCriterion multi;
};

const PresetSpec kPresets[] = {
    {"qed", "qed_lite", "QED",
     {SuccessMode::kAbsolute, Comparator::kGreaterEqual, 0.9},
     {SuccessMode::kDelta, Comparator::kGreaterEqual, 0.1}},
    {"plogp", "logp_lite", "plogP",
     {SuccessMode::kAbsolute, Comparator::kGreaterEqual, 2.0},
     {SuccessMode::kDelta, Comparator::kGreaterEqual, 1.0}},
    {"sa", "sa_lite", "SA",
     {SuccessMode::kAbsolute, Comparator::kLessEqual, -2.5},
     {SuccessMode::kDelta, Comparator::kLessEqual, -0.5}},
};

std::string describe(const std::string &label, const SuccessCriterion &c) {
  const bool up = c.cmp == Comparator::kGreaterEqual;
  const std::string verb = up ? "Increase " : "Decrease ";
  if (c.mode == SuccessMode::kAbsolute)
    return verb + label + (up ? " to at least " : " to at most ") + format_shortest(c.threshold);
  return verb + label + " by at least " + format_shortest(std::abs(c.threshold));
}

}  // namespace

Objective Objective::preset(std::string_view task, double similarity_threshold) {
  std::vector<std::string_view> parts;
  for (std::string_view rest = task;;) {
    const auto plus = rest.find('+');
    parts.push_back(rest.substr(0, plus));
    if (plus == std::string_view::npos) break;
    rest.remove_prefix(plus + 1);
  }
  const bool multi = parts.size() > 1;
  std::vector<ObjectiveTerm> terms;
  std::string description;
  for (std::string_view part : parts) {
    const PresetSpec *spec = nullptr;
    for (const PresetSpec &p : kPresets)
      if (part == p.task) spec = &p;
    if (!spec) throw Error(ErrorCode::kConfig, "unknown task preset: " + std::string(part));
    ObjectiveTerm t;
    t.oracle = builtin_oracle(spec->oracle);
    t.direction = t.oracle->direction();
    t.success = multi ? spec->multi : spec->single;
    terms.push_back(t);
    if (!description.empty()) description += "; ";
    description += describe(spec->label, t.success);
  }
  Objective obj(std::string(task), std::move(terms), similarity_threshold);
  obj.set_description(description + ".");
  return obj;
}

namespace {

SuccessCriterion criterion_from_json(const json &j, int direction) {
  SuccessCriterion c;
  const std::string mode = j.value("mode", "absolute");
  if (mode == "absolute")
    c.mode = SuccessMode::kAbsolute;
  else if (mode == "delta")
    c.mode = SuccessMode::kDelta;
  else
    throw Error(ErrorCode::kConfig, "success mode must be absolute or delta");
  const std::string cmp = j.value("cmp", direction > 0 ? ">=" : "<=");
  if (cmp == ">=")
    c.cmp = Comparator::kGreaterEqual;
  else if (cmp == "<=")
    c.cmp = Comparator::kLessEqual;
  else
    throw Error(ErrorCode::kConfig, "success cmp must be >= or <=");
  if (!j.contains("threshold")) throw Error(ErrorCode::kConfig, "success needs a threshold");
  c.threshold = j.at("threshold").get<double>();
  return c;
}

OraclePtr oracle_from_json(const json &j, const std::string &base_dir, const json &term) {
  const int direction = term.value("direction", 1);
  if (j.is_string()) return builtin_oracle(j.get<std::string>());
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "oracle must be a name or an object");
  const std::string name = j.value("name", term.value("name", std::string()));
  if (j.contains("table")) {
    std::filesystem::path p = j.at("table").get<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    auto t = TableOracle::load(name.empty() ? p.stem().string() : name, p.string(), direction);
    if (j.contains("default")) t->set_default(j.at("default").get<double>());
    return t;
  }
  if (j.contains("external")) {
    if (name.empty()) throw Error(ErrorCode::kConfig, "external oracle needs a name");
    const int timeout_ms = j.value("timeout_ms", 5000);
    return std::make_shared<ExternalOracle>(name, j.at("external").get<std::string>(), direction,
                                            std::chrono::milliseconds(timeout_ms));
  }
  throw Error(ErrorCode::kConfig, "oracle object needs table or external");
}

Objective objective_from(const json &j, const std::string &base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "objective config must be a JSON object");
  const double gamma = j.value("gamma", 0.4);
  if (j.contains("task") && !j.contains("terms")) {
    Objective o = Objective::preset(j.at("task").get<std::string>(), gamma);
    if (j.contains("description")) o.set_description(j.at("description").get<std::string>());
    return o;
  }
  if (!j.contains("terms") || !j.at("terms").is_array())
    throw Error(ErrorCode::kConfig, "objective config needs a terms array");
  std::vector<ObjectiveTerm> terms;
  for (const json &tj : j.at("terms")) {
    ObjectiveTerm t;
    if (!tj.contains("oracle")) throw Error(ErrorCode::kConfig, "term needs an oracle");
    t.oracle = oracle_from_json(tj.at("oracle"), base_dir, tj);
    t.direction = tj.value("direction", t.oracle->direction());
    t.weight = tj.value("weight", 1.0);
    if (!tj.contains("success")) throw Error(ErrorCode::kConfig, "term needs a success criterion");
    t.success = criterion_from_json(tj.at("success"), t.direction);
    terms.push_back(std::move(t));
  }
  std::string generated;
  for (const ObjectiveTerm &t : terms) {
    if (!generated.empty()) generated += "; ";
    generated += describe(t.oracle->name(), t.success);
  }
  Objective o(j.value("name", std::string("objective")), std::move(terms), gamma);
  o.set_description(j.value("description", generated + "."));
  return o;
}

}  // namespace

Objective Objective::from_json(std::string_view text, const std::string &base_dir) {
  try {
    return objective_from(json::parse(text), base_dir);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kConfig, std::string("objective config: ") + e.what());
  }
}

ObjectiveFile load_objective_file(const std::string &path_or_task) {
  ObjectiveFile f;
  if (!std::filesystem::exists(path_or_task)) {
    f.objective = Objective::preset(path_or_task);
    return f;
  }
  const std::string base = std::filesystem::path(path_or_task).parent_path().string();
  try {
    const json j = json::parse(read_text_file(path_or_task));
    f.objective = objective_from(j, base.empty() ? "." : base);
    if (j.contains("budget")) f.budget = j.at("budget").get<std::int64_t>();
    const std::string unit = j.value("budget_unit", std::string("per_candidate"));
    if (unit == "per_candidate")
      f.budget_unit = BudgetUnit::kPerCandidate;
    else if (unit == "per_term")
      f.budget_unit = BudgetUnit::kPerTerm;
    else
      throw Error(ErrorCode::kConfig, "budget_unit must be per_candidate or per_term");
    f.memoize = j.value("memoize", true);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kConfig, path_or_task + ": " + e.what());
  }
  return f;
}

bool check_success(double similarity, const Objective &obj, const PropertyMap &values,
                   const PropertyMap &lead_values) {
  if (!(similarity >= obj.similarity_threshold())) return false;
  for (const ObjectiveTerm &t : obj.terms()) {
    auto v = values.find(t.oracle->name());
    auto l = lead_values.find(t.oracle->name());
    if (v == values.end() || l == lead_values.end())
      throw Error(ErrorCode::kConfig, "missing value for " + t.oracle->name());
    if (!t.success.holds(v->second, l->second)) return false;
  }
  return true;
}

bool check_success(const Molecule &lead, const Molecule &cand, const Objective &obj,
                   const PropertyMap &values, const PropertyMap &lead_values) {
  return check_success(similarity(lead, cand), obj, values, lead_values);
}

BudgetLedger::BudgetLedger(std::int64_t budget, BudgetUnit unit, bool memoize)
    : budget_(budget), unit_(unit), memoize_(memoize) {
  if (budget < 0) throw Error(ErrorCode::kConfig, "budget must be non-negative");
}

PropertyMap BudgetLedger::evaluate(const Molecule &m, const Objective &obj) {
  std::lock_guard lock(mu_);
  PropertyMap *cached = nullptr;
  if (memoize_) {
    auto it = cache_.find(m.canonical());
    if (it != cache_.end()) cached = &it->second;
  }
  std::vector<const ObjectiveTerm *> missing;
  for (const ObjectiveTerm &t : obj.terms())
    if (!cached || !cached->count(t.oracle->name())) missing.push_back(&t);

  PropertyMap out;
  if (!missing.empty()) {
    const std::int64_t cost =
        unit_ == BudgetUnit::kPerCandidate ? 1 : static_cast<std::int64_t>(missing.size());
    if (consumed_ + cost > budget_)
      throw Error(ErrorCode::kBudgetExhausted, "oracle budget of " + std::to_string(budget_) +
                                                   " exhausted");
    PropertyMap fresh;
    for (const ObjectiveTerm *t : missing) fresh[t->oracle->name()] = t->oracle->evaluate(m);
    // Charged only once every oracle answered.
    consumed_ += cost;
    ++events_;
    if (memoize_) {
      PropertyMap &slot = cache_[m.canonical()];
      for (const auto &[k, v] : fresh) slot[k] = v;
      cached = &slot;
    } else {
      out = std::move(fresh);
    }
  }
  if (cached)
    for (const ObjectiveTerm &t : obj.terms()) out[t.oracle->name()] = cached->at(t.oracle->name());
  return out;
}

std::optional<PropertyMap> BudgetLedger::peek(const Molecule &m, const Objective &obj) const {
  std::lock_guard lock(mu_);
  auto it = cache_.find(m.canonical());
  if (it == cache_.end()) return std::nullopt;
  PropertyMap out;
  for (const ObjectiveTerm &t : obj.terms()) {
    auto v = it->second.find(t.oracle->name());
    if (v == it->second.end()) return std::nullopt;
    out[t.oracle->name()] = v->second;
  }
  return out;
}

std::int64_t BudgetLedger::consumed() const {
  std::lock_guard lock(mu_);
  return consumed_;
}

std::int64_t BudgetLedger::remaining() const {
  std::lock_guard lock(mu_);
  return budget_ - consumed_;
}

bool BudgetLedger::exhausted() const { return remaining() <= 0; }

std::int64_t BudgetLedger::charged_events() const {
  std::lock_guard lock(mu_);
  return events_;
}

}  // namespace memopt
