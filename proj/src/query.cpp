#include "hierflow/query.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

#include "hierflow/error.hpp"
#include "hierflow/hash.hpp"

namespace hierflow {

using nlohmann::json;

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::In: return "in";
  }
  return "?";
}

CompareOp parse_compare_op(std::string_view t) {
  if (t == "==" || t == "=" || t == "eq") return CompareOp::Eq;
  if (t == "!=" || t == "ne") return CompareOp::Ne;
  if (t == "<" || t == "lt") return CompareOp::Lt;
  if (t == "<=" || t == "le") return CompareOp::Le;
  if (t == ">" || t == "gt") return CompareOp::Gt;
  if (t == ">=" || t == "ge") return CompareOp::Ge;
  if (t == "in") return CompareOp::In;
  fail(ErrorCode::InvalidSpec, "unknown comparison operator '" + std::string(t) + "'");
}

bool AttributeConstraint::matches(const AttributeValue& value) const {
  if (std::holds_alternative<std::monostate>(value)) return false;
  if (op == CompareOp::In) {
    return std::find(values.begin(), values.end(), value) != values.end();
  }
  if (values.size() != 1 || value.index() != values[0].index()) return false;
  const AttributeValue& rhs = values[0];
  switch (op) {
    case CompareOp::Eq: return value == rhs;
    case CompareOp::Ne: return value != rhs;
    case CompareOp::Lt: return value < rhs;
    case CompareOp::Le: return value <= rhs;
    case CompareOp::Gt: return value > rhs;
    case CompareOp::Ge: return value >= rhs;
    case CompareOp::In: break;
  }
  return false;
}

namespace {

AttributeValue value_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_null()) return std::monostate{};
  fail(ErrorCode::InvalidSpec, "attribute value must be a number or string");
}

json value_to_json(const AttributeValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return nullptr;
}

AttributeConstraint constraint_from_json(const json& j) {
  AttributeConstraint c;
  c.attribute = j.at("attribute").get<std::string>();
  c.op = parse_compare_op(j.at("op").get<std::string>());
  if (c.op == CompareOp::In) {
    for (const auto& v : j.at("values")) c.values.push_back(value_from_json(v));
  } else {
    c.values.push_back(value_from_json(j.at("value")));
  }
  return c;
}

json constraint_to_json(const AttributeConstraint& c) {
  json j = {{"attribute", c.attribute}, {"op", std::string(to_string(c.op))}};
  if (c.op == CompareOp::In) {
    json vs = json::array();
    for (const auto& v : c.values) vs.push_back(value_to_json(v));
    j["values"] = vs;
  } else {
    j["value"] = c.values.empty() ? json(nullptr) : value_to_json(c.values[0]);
  }
  return j;
}

json spec_to_json(const QuerySpec& s) {
  json constraints = json::array();
  for (const auto& c : s.attribute_constraints) constraints.push_back(constraint_to_json(c));
  json outcome = s.outcome;
  if (s.outcome_window == OutcomeWindow::AfterFirstAnchor) {
    outcome = {{"codes", s.outcome}, {"window", "after_first_anchor"}};
  }
  return {{"inclusion", s.inclusion},
          {"attribute_constraints", constraints},
          {"lookback_days", s.lookback_days},
          {"outcome", outcome}};
}

std::uint64_t constraint_hash(Fnv1a& h, const AttributeConstraint& c) {
  h.str(constraint_to_json(c).dump());
  return h.value();
}

// Index of the earliest event in `events` within `subtree` dated on or after
// `from` and not already used, or dynamic_extent.
std::size_t find_anchor(std::span<const Event> events, const TypeHierarchy& types, NodeId subtree,
                        Day from, const std::vector<std::size_t>& used) {
  auto it = std::lower_bound(events.begin(), events.end(), from,
                             [](const Event& e, Day d) { return e.day < d; });
  for (auto k = static_cast<std::size_t>(it - events.begin()); k < events.size(); ++k) {
    if (!types.contains(subtree, events[k].type)) continue;
    if (std::find(used.begin(), used.end(), k) != used.end()) continue;
    return k;
  }
  return std::dynamic_extent;
}

}  // namespace

QuerySpec parse_query_spec(std::string_view text) {
  try {
    json j = json::parse(text);
    QuerySpec s;
    s.inclusion = j.at("inclusion").get<std::vector<std::string>>();
    if (j.contains("attribute_constraints")) {
      for (const auto& c : j.at("attribute_constraints")) {
        s.attribute_constraints.push_back(constraint_from_json(c));
      }
    }
    s.lookback_days = j.value("lookback_days", 0);
    const json& outcome = j.at("outcome");
    if (outcome.is_object()) {
      s.outcome = outcome.at("codes").get<std::vector<std::string>>();
      auto window = outcome.value("window", "after_final_anchor");
      if (window == "after_first_anchor") {
        s.outcome_window = OutcomeWindow::AfterFirstAnchor;
      } else if (window != "after_final_anchor") {
        fail(ErrorCode::InvalidSpec, "unknown outcome window '" + window + "'");
      }
    } else {
      s.outcome = outcome.get<std::vector<std::string>>();
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("malformed query spec: ") + e.what());
  }
}

std::string to_json(const QuerySpec& spec) { return spec_to_json(spec).dump(); }
std::string to_json(const AttributeConstraint& c) { return constraint_to_json(c).dump(); }

AttributeConstraint parse_attribute_constraint(std::string_view text) {
  try {
    return constraint_from_json(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("malformed attribute constraint: ") + e.what());
  }
}

std::size_t Cohort::positives() const {
  return static_cast<std::size_t>(
      std::count_if(members.begin(), members.end(), [](const auto& m) { return m.outcome; }));
}

Bitset Cohort::outcome_bits() const {
  Bitset bits(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].outcome) bits.set(i);
  }
  return bits;
}

std::vector<int> Cohort::outcome_vector() const {
  std::vector<int> v(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) v[i] = members[i].outcome ? 1 : 0;
  return v;
}

CohortHandle execute_query(const DatasetHandle& dataset, const QuerySpec& spec) {
  if (spec.inclusion.empty()) fail(ErrorCode::InvalidSpec, "query needs an inclusion constraint");
  if (spec.lookback_days < 0) fail(ErrorCode::InvalidSpec, "lookback_days must be >= 0");
  const TypeHierarchy& types = dataset->types();

  std::vector<NodeId> inclusion, outcome;
  for (const auto& c : spec.inclusion) inclusion.push_back(types.id(c));
  for (const auto& c : spec.outcome) outcome.push_back(types.id(c));
  std::vector<std::size_t> attr_index;
  for (const auto& c : spec.attribute_constraints) {
    auto idx = dataset->attribute_index(c.attribute);
    if (!idx) fail(ErrorCode::UnknownAttribute, "unknown attribute '" + c.attribute + "'");
    attr_index.push_back(*idx);
  }

  auto cohort = std::make_shared<Cohort>();
  cohort->dataset = dataset;
  cohort->query = spec;
  cohort->id = hex_id("c-", Fnv1a().str(dataset->id()).str(to_json(spec)).value());

  std::vector<std::size_t> used;
  for (std::uint32_t e = 0; e < dataset->entities.size(); ++e) {
    const EntityRecord& rec = dataset->entities[e];
    bool keep = true;
    for (std::size_t k = 0; k < attr_index.size() && keep; ++k) {
      keep = spec.attribute_constraints[k].matches(rec.attributes[attr_index[k]]);
    }
    if (!keep) continue;

    std::span<const Event> events(rec.events);
    CohortMember m;
    m.entity = e;
    used.clear();
    Day prev{std::numeric_limits<std::int32_t>::min()};
    for (NodeId c : inclusion) {
      std::size_t k = find_anchor(events, types, c, prev, used);
      if (k == std::dynamic_extent) {
        keep = false;
        break;
      }
      used.push_back(k);
      prev = events[k].day;
      m.anchors.push_back(prev);
    }
    if (!keep) continue;

    const Day label_after =
        spec.outcome_window == OutcomeWindow::AfterFinalAnchor ? m.anchors.back() : m.anchors.front();
    for (const Event& ev : events) {
      if (ev.day <= label_after) continue;
      bool hit = std::any_of(outcome.begin(), outcome.end(),
                             [&](NodeId o) { return types.contains(o, ev.type); });
      if (hit) {
        m.outcome = true;
        m.outcome_day = ev.day;
        break;
      }
    }

    const Day start = m.anchors.front() - spec.lookback_days;
    auto first = std::lower_bound(events.begin(), events.end(), start,
                                  [](const Event& ev, Day d) { return ev.day < d; });
    m.events = events.subspan(static_cast<std::size_t>(first - events.begin()));
    cohort->members.push_back(std::move(m));
  }
  cohort->empty_warning = cohort->members.empty();
  return cohort;
}

CohortHandle apply_attribute_filter(const Cohort& cohort, const AttributeConstraint& constraint) {
  auto idx = cohort.dataset->attribute_index(constraint.attribute);
  if (!idx) fail(ErrorCode::UnknownAttribute, "unknown attribute '" + constraint.attribute + "'");
  auto out = std::make_shared<Cohort>();
  out->dataset = cohort.dataset;
  out->query = cohort.query;
  out->filters = cohort.filters;
  out->filters.push_back(constraint);
  Fnv1a h;
  h.str(cohort.id);
  constraint_hash(h, constraint);
  out->id = hex_id("c-", h.value());
  for (const auto& m : cohort.members) {
    if (constraint.matches(cohort.dataset->entities[m.entity].attributes[*idx])) {
      out->members.push_back(m);
    }
  }
  out->empty_warning = out->members.empty();
  return out;
}

std::span<const Event> AnalyticContext::events(std::size_t i) const {
  std::span<const Event> all = cohort->members[i].events;
  if (windows.empty()) return all;
  const DayWindow& w = windows[i];
  if (w.empty()) return {};
  auto lo = std::lower_bound(all.begin(), all.end(), w.first,
                             [](const Event& e, Day d) { return e.day < d; });
  auto hi = std::upper_bound(lo, all.end(), w.last,
                             [](Day d, const Event& e) { return d < e.day; });
  return all.subspan(static_cast<std::size_t>(lo - all.begin()),
                     static_cast<std::size_t>(hi - lo));
}

AnalyticContext whole_record_context(const CohortHandle& cohort) {
  return AnalyticContext{cohort, {}, "whole"};
}

}  // namespace hierflow
