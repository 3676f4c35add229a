#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hierflow/query.hpp"

namespace hierflow {

inline constexpr std::string_view kStartMilestone = "start";
inline constexpr std::string_view kLookbackEdge = "lookback";

struct Milestone {
  std::string id;
  std::string type_code;  // empty for the synthetic start of the lookback window
  std::vector<std::uint32_t> members;  // cohort member indexes, ascending
  double proportion = 0;
  double avg_outcome = 0;
  double position = 0;  // left-to-right order along the timeline

  bool is_start() const { return type_code.empty(); }
};

struct TimeEdge {
  std::string id;
  std::string from;
  std::string to;
  std::vector<std::uint32_t> members;
  double proportion = 0;
  double avg_days = 0;
  double avg_outcome = 0;
  std::string split_from;  // edge this one replaced, if any
};

struct TimelinePath {
  std::vector<std::string> milestones;
  std::vector<std::uint32_t> members;
};

// One immutable version of the milestone/edge model. Milestones carry each
// member's anchor day; edges connect consecutive milestones of the members
// that traverse both.
class TimelineModel {
 public:
  std::string version;
  std::string parent_version;
  CohortHandle cohort;
  std::vector<Milestone> milestones;
  std::vector<TimeEdge> edges;
  std::vector<TimelinePath> paths;

  const Milestone* find_milestone(std::string_view id) const;
  const TimeEdge* find_edge(std::string_view id) const;
  // Anchor day of member i at a milestone it belongs to.
  Day anchor(std::string_view milestone, std::uint32_t member) const;
  // Calendar window of member i on an edge it traverses: (from, to], or
  // [from, to) for edges leaving the lookback start.
  DayWindow edge_window(const TimeEdge& edge, std::uint32_t member) const;

  std::size_t next_milestone = 0;
  std::size_t next_edge = 0;
  // Dense anchor days, one vector per milestone (same order as milestones).
  std::vector<std::vector<Day>> anchor_days;
};

// One milestone per inclusion constraint, an edge between each consecutive
// pair and, when the query has a lookback, a leading edge from a synthetic
// start milestone.
TimelineModel build_timeline(const CohortHandle& cohort);

// Routes the edge's members whose window contains an occurrence of
// `type_code` (or a descendant) through a new milestone anchored at the first
// such occurrence; the rest follow a bypass edge. Returns a new version.
// Errors: UnknownEdge, UnknownCode, NoMatchingEntities.
TimelineModel add_milestone(const TimelineModel& timeline, std::string_view edge_id,
                            std::string_view type_code);

struct Selection {
  enum class Kind { Whole, Milestone, Edge };
  Kind kind = Kind::Whole;
  std::string id;

  // "whole", a milestone id, an edge id, or "milestone:<id>" / "edge:<id>".
  static Selection parse(std::string_view text, const TimelineModel& timeline);
  std::string to_string() const;
};

// Per-member windows for a selection: a milestone covers its anchor day, an
// edge its window; members off the selected element get an empty window.
// Throws UnknownSelection.
AnalyticContext context_window(const TimelineModel& timeline, const Selection& selection);

struct SurvivalObservation {
  double time = 0;
  bool event = false;
};

struct SurvivalPoint {
  double time = 0;
  double survival = 1;
  std::size_t at_risk = 0;
  std::size_t events = 0;
  std::size_t censored = 0;
};

struct SurvivalCurve {
  std::vector<SurvivalPoint> points;  // starts at (0, 1)
  std::vector<double> censor_times;

  // Right-continuous step value at t.
  double at(double t) const;
};

// Product-limit estimate.
SurvivalCurve kaplan_meier(std::span<const SurvivalObservation> observations);

// Event time is the first outcome occurrence after the final anchor; others
// are censored at their last observed event (0 if nothing follows the
// anchor). Days since the final anchor.
std::vector<SurvivalObservation> survival_observations(const Cohort& cohort);
// Throws EmptyCohort.
SurvivalCurve kaplan_meier(const Cohort& cohort);

}  // namespace hierflow
