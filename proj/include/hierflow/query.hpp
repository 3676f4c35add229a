#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hierflow/bitset.hpp"
#include "hierflow/dataset.hpp"

namespace hierflow {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, In };

std::string_view to_string(CompareOp op);
CompareOp parse_compare_op(std::string_view text);

struct AttributeConstraint {
  std::string attribute;
  CompareOp op = CompareOp::Eq;
  std::vector<AttributeValue> values;  // exactly one unless op is In

  // Missing values never match. Numeric comparisons against a categorical
  // value (or vice versa) never match.
  bool matches(const AttributeValue& value) const;
};

// Which outcome occurrences label an entity positive.
enum class OutcomeWindow {
  AfterFinalAnchor,  // default
  AfterFirstAnchor,  // also counts occurrences between inclusion anchors
};

struct QuerySpec {
  // Ordered inclusion constraints; each code stands for its whole subtree.
  std::vector<std::string> inclusion;
  std::vector<AttributeConstraint> attribute_constraints;
  std::int32_t lookback_days = 0;
  std::vector<std::string> outcome;
  OutcomeWindow outcome_window = OutcomeWindow::AfterFinalAnchor;
};

// JSON document with fields inclusion, attribute_constraints, lookback_days,
// outcome. Throws InvalidSpec.
QuerySpec parse_query_spec(std::string_view json_text);
std::string to_json(const QuerySpec& spec);
std::string to_json(const AttributeConstraint& constraint);
AttributeConstraint parse_attribute_constraint(std::string_view json_text);

struct CohortMember {
  std::uint32_t entity = 0;          // index into Dataset::entities
  std::span<const Event> events;     // [first anchor - lookback, end of record]
  std::vector<Day> anchors;          // one per inclusion constraint
  bool outcome = false;
  std::optional<Day> outcome_day;    // first qualifying outcome occurrence
};

class Cohort {
 public:
  std::string id;
  DatasetHandle dataset;
  QuerySpec query;
  std::vector<AttributeConstraint> filters;  // applied after the query, in order
  std::vector<CohortMember> members;
  bool empty_warning = false;

  std::size_t size() const { return members.size(); }
  const TypeHierarchy& types() const { return dataset->types(); }
  const EntityRecord& entity(std::size_t i) const { return dataset->entities[members[i].entity]; }
  std::size_t positives() const;
  // Outcome vector aligned with member order.
  Bitset outcome_bits() const;
  std::vector<int> outcome_vector() const;
};

using CohortHandle = std::shared_ptr<const Cohort>;

// Entities pass when every attribute constraint holds and the inclusion
// constraints can be anchored in order: each anchors at the earliest unused
// event of its subtree dated no earlier than the previous anchor. Errors:
// InvalidSpec, UnknownCode, UnknownAttribute. An empty result sets
// empty_warning instead of throwing.
CohortHandle execute_query(const DatasetHandle& dataset, const QuerySpec& spec);

// New cohort (fresh id and indexing) holding the members that satisfy the
// constraint. Throws UnknownAttribute.
CohortHandle apply_attribute_filter(const Cohort& cohort, const AttributeConstraint& constraint);

// Inclusive calendar-day range; empty when last < first.
struct DayWindow {
  Day first{1};
  Day last{0};
  bool empty() const { return last < first; }
  bool contains(Day d) const { return first <= d && d <= last; }
  bool operator==(const DayWindow&) const = default;
};

// Per-member time windows over which statistics are computed.
struct AnalyticContext {
  CohortHandle cohort;
  std::vector<DayWindow> windows;  // one per member; empty vector = whole record
  std::string provenance;          // selection that produced the context

  bool whole_record() const { return windows.empty(); }
  // In-window events of member i.
  std::span<const Event> events(std::size_t i) const;
};

AnalyticContext whole_record_context(const CohortHandle& cohort);

}  // namespace hierflow
