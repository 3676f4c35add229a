#include "hierflow/timeline.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "hierflow/error.hpp"
#include "hierflow/hash.hpp"

namespace hierflow {

namespace {

double mean_outcome(const Cohort& cohort, std::span<const std::uint32_t> members) {
  if (members.empty()) return 0;
  std::size_t pos = 0;
  for (auto i : members) pos += cohort.members[i].outcome ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(members.size());
}

double proportion(const Cohort& cohort, std::size_t count) {
  return cohort.size() ? static_cast<double>(count) / static_cast<double>(cohort.size()) : 0.0;
}

std::size_t milestone_index(const TimelineModel& t, std::string_view id) {
  for (std::size_t k = 0; k < t.milestones.size(); ++k) {
    if (t.milestones[k].id == id) return k;
  }
  fail(ErrorCode::UnknownSelection, "unknown milestone '" + std::string(id) + "'");
}

void refresh_milestone(const TimelineModel& t, Milestone& m) {
  m.proportion = proportion(*t.cohort, m.members.size());
  m.avg_outcome = mean_outcome(*t.cohort, m.members);
}

void refresh_edge(const TimelineModel& t, TimeEdge& e) {
  e.proportion = proportion(*t.cohort, e.members.size());
  e.avg_outcome = mean_outcome(*t.cohort, e.members);
  double days = 0;
  for (auto i : e.members) days += t.anchor(e.to, i) - t.anchor(e.from, i);
  e.avg_days = e.members.empty() ? 0.0 : days / static_cast<double>(e.members.size());
}

void rebuild_paths(TimelineModel& t) {
  std::vector<std::size_t> by_position(t.milestones.size());
  for (std::size_t k = 0; k < by_position.size(); ++k) by_position[k] = k;
  std::stable_sort(by_position.begin(), by_position.end(), [&](std::size_t a, std::size_t b) {
    return t.milestones[a].position < t.milestones[b].position;
  });

  const std::size_t n = t.cohort->size();
  std::vector<std::vector<std::string>> seq(n);
  for (std::size_t k : by_position) {
    for (auto i : t.milestones[k].members) seq[i].push_back(t.milestones[k].id);
  }
  std::map<std::vector<std::string>, std::size_t> index;
  t.paths.clear();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto [it, inserted] = index.emplace(seq[i], t.paths.size());
    if (inserted) t.paths.push_back({seq[i], {}});
    t.paths[it->second].members.push_back(i);
  }
}

TimeEdge make_edge(std::string id, std::string from, std::string to,
                   std::vector<std::uint32_t> members) {
  TimeEdge e;
  e.id = std::move(id);
  e.from = std::move(from);
  e.to = std::move(to);
  e.members = std::move(members);
  return e;
}

std::string derive_version(std::string_view parent, std::string_view edge, std::string_view code) {
  return hex_id("t-", Fnv1a().str(parent).str(edge).str(code).value());
}

}  // namespace

const Milestone* TimelineModel::find_milestone(std::string_view id) const {
  for (const auto& m : milestones) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

const TimeEdge* TimelineModel::find_edge(std::string_view id) const {
  for (const auto& e : edges) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

Day TimelineModel::anchor(std::string_view milestone, std::uint32_t member) const {
  return anchor_days[milestone_index(*this, milestone)][member];
}

DayWindow TimelineModel::edge_window(const TimeEdge& edge, std::uint32_t member) const {
  const Day from = anchor(edge.from, member);
  const Day to = anchor(edge.to, member);
  if (edge.from == kStartMilestone) return {from, to - 1};
  return {from + 1, to};
}

TimelineModel build_timeline(const CohortHandle& cohort) {
  TimelineModel t;
  t.cohort = cohort;
  t.version = hex_id("t-", Fnv1a().str(cohort->id).value());
  const std::size_t n = cohort->size();
  std::vector<std::uint32_t> everyone(n);
  for (std::uint32_t i = 0; i < n; ++i) everyone[i] = i;

  const auto& inclusion = cohort->query.inclusion;
  const std::int32_t lookback = cohort->query.lookback_days;
  if (lookback > 0) {
    Milestone start{std::string(kStartMilestone), "", everyone, 0, 0, -1.0};
    std::vector<Day> days(n);
    for (std::uint32_t i = 0; i < n; ++i) days[i] = cohort->members[i].anchors.front() - lookback;
    t.milestones.push_back(std::move(start));
    t.anchor_days.push_back(std::move(days));
  }
  for (std::size_t k = 0; k < inclusion.size(); ++k) {
    Milestone m{"m" + std::to_string(t.next_milestone++), inclusion[k], everyone, 0, 0,
                static_cast<double>(k)};
    std::vector<Day> days(n);
    for (std::uint32_t i = 0; i < n; ++i) days[i] = cohort->members[i].anchors[k];
    t.milestones.push_back(std::move(m));
    t.anchor_days.push_back(std::move(days));
  }
  if (lookback > 0) {
    t.edges.push_back(
        make_edge(std::string(kLookbackEdge), std::string(kStartMilestone), "m0", everyone));
  }
  for (std::size_t k = 0; k + 1 < inclusion.size(); ++k) {
    t.edges.push_back(make_edge("e" + std::to_string(t.next_edge++), "m" + std::to_string(k),
                                "m" + std::to_string(k + 1), everyone));
  }
  for (auto& m : t.milestones) refresh_milestone(t, m);
  for (auto& e : t.edges) refresh_edge(t, e);
  rebuild_paths(t);
  return t;
}

TimelineModel add_milestone(const TimelineModel& timeline, std::string_view edge_id,
                            std::string_view type_code) {
  const TimeEdge* edge = timeline.find_edge(edge_id);
  if (!edge) fail(ErrorCode::UnknownEdge, "unknown time edge '" + std::string(edge_id) + "'");
  const Cohort& cohort = *timeline.cohort;
  const NodeId node = cohort.types().id(type_code);

  std::vector<std::uint32_t> matched, bypass;
  std::vector<Day> days(cohort.size(), Day{std::numeric_limits<std::int32_t>::min()});
  for (auto i : edge->members) {
    const DayWindow w = timeline.edge_window(*edge, i);
    bool found = false;
    for (const Event& ev : cohort.members[i].events) {
      if (ev.day > w.last) break;
      if (ev.day < w.first || !cohort.types().contains(node, ev.type)) continue;
      days[i] = ev.day;
      found = true;
      break;
    }
    (found ? matched : bypass).push_back(i);
  }
  if (matched.empty()) {
    fail(ErrorCode::NoMatchingEntities, "no member of edge '" + edge->id + "' has '" +
                                            std::string(type_code) + "' in its window");
  }

  TimelineModel t = timeline;
  t.parent_version = timeline.version;
  t.version = derive_version(timeline.version, edge_id, type_code);

  const Milestone* from = timeline.find_milestone(edge->from);
  const Milestone* to = timeline.find_milestone(edge->to);
  Milestone added{"m" + std::to_string(t.next_milestone++), std::string(type_code), matched, 0, 0,
                  (from->position + to->position) / 2};
  t.milestones.push_back(added);
  t.anchor_days.push_back(std::move(days));

  const TimeEdge original = *edge;
  std::vector<TimeEdge> replacement;
  replacement.push_back(
      make_edge("e" + std::to_string(t.next_edge++), original.from, added.id, matched));
  replacement.push_back(
      make_edge("e" + std::to_string(t.next_edge++), added.id, original.to, matched));
  if (!bypass.empty()) {
    replacement.push_back(
        make_edge("e" + std::to_string(t.next_edge++), original.from, original.to, bypass));
  }
  auto pos = std::find_if(t.edges.begin(), t.edges.end(),
                          [&](const TimeEdge& e) { return e.id == original.id; });
  pos = t.edges.erase(pos);
  for (auto& e : replacement) {
    e.split_from = original.id;
    refresh_edge(t, e);
  }
  t.edges.insert(pos, replacement.begin(), replacement.end());
  refresh_milestone(t, t.milestones.back());
  rebuild_paths(t);
  return t;
}

Selection Selection::parse(std::string_view text, const TimelineModel& timeline) {
  if (text.empty() || text == "whole") return {Kind::Whole, ""};
  std::string_view id = text;
  std::optional<Kind> forced;
  if (text.rfind("milestone:", 0) == 0) {
    forced = Kind::Milestone;
    id = text.substr(10);
  } else if (text.rfind("edge:", 0) == 0) {
    forced = Kind::Edge;
    id = text.substr(5);
  }
  if ((!forced || *forced == Kind::Milestone) && timeline.find_milestone(id)) {
    return {Kind::Milestone, std::string(id)};
  }
  if ((!forced || *forced == Kind::Edge) && timeline.find_edge(id)) {
    return {Kind::Edge, std::string(id)};
  }
  fail(ErrorCode::UnknownSelection, "unknown timeline selection '" + std::string(text) + "'");
}

std::string Selection::to_string() const {
  switch (kind) {
    case Kind::Whole: return "whole";
    case Kind::Milestone: return "milestone:" + id;
    case Kind::Edge: return "edge:" + id;
  }
  return "whole";
}

AnalyticContext context_window(const TimelineModel& t, const Selection& selection) {
  const CohortHandle& cohort = t.cohort;
  if (selection.kind == Selection::Kind::Whole) {
    AnalyticContext ctx = whole_record_context(cohort);
    ctx.provenance = t.version + "/whole";
    return ctx;
  }
  AnalyticContext ctx{cohort, std::vector<DayWindow>(cohort->size()),
                      t.version + "/" + selection.to_string()};
  if (selection.kind == Selection::Kind::Milestone) {
    const Milestone* m = t.find_milestone(selection.id);
    if (!m) fail(ErrorCode::UnknownSelection, "unknown milestone '" + selection.id + "'");
    for (auto i : m->members) {
      const Day d = t.anchor(m->id, i);
      ctx.windows[i] = {d, d};
    }
  } else {
    const TimeEdge* e = t.find_edge(selection.id);
    if (!e) fail(ErrorCode::UnknownSelection, "unknown time edge '" + selection.id + "'");
    for (auto i : e->members) ctx.windows[i] = t.edge_window(*e, i);
  }
  return ctx;
}

double SurvivalCurve::at(double t) const {
  double s = 1;
  for (const auto& p : points) {
    if (p.time > t) break;
    s = p.survival;
  }
  return s;
}

SurvivalCurve kaplan_meier(std::span<const SurvivalObservation> observations) {
  std::vector<SurvivalObservation> obs(observations.begin(), observations.end());
  std::sort(obs.begin(), obs.end(),
            [](const auto& a, const auto& b) { return a.time < b.time; });
  SurvivalCurve curve;
  curve.points.push_back({0.0, 1.0, obs.size(), 0, 0});
  double s = 1;
  std::size_t at_risk = obs.size();
  for (std::size_t k = 0; k < obs.size();) {
    const double t = obs[k].time;
    std::size_t events = 0, censored = 0;
    while (k < obs.size() && obs[k].time == t) {
      (obs[k].event ? events : censored) += 1;
      ++k;
    }
    if (events > 0) {
      s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      if (t == 0) {
        curve.points.front() = {0.0, s, at_risk, events, censored};
      } else {
        curve.points.push_back({t, s, at_risk, events, censored});
      }
    }
    for (std::size_t c = 0; c < censored; ++c) curve.censor_times.push_back(t);
    at_risk -= events + censored;
  }
  return curve;
}

std::vector<SurvivalObservation> survival_observations(const Cohort& cohort) {
  std::vector<SurvivalObservation> obs;
  obs.reserve(cohort.size());
  for (const auto& m : cohort.members) {
    const Day final_anchor = m.anchors.back();
    if (m.outcome && m.outcome_day) {
      obs.push_back({static_cast<double>(std::max(0, *m.outcome_day - final_anchor)), true});
    } else {
      const Day last = m.events.empty() ? final_anchor : m.events.back().day;
      obs.push_back({static_cast<double>(std::max(0, last - final_anchor)), false});
    }
  }
  return obs;
}

SurvivalCurve kaplan_meier(const Cohort& cohort) {
  if (cohort.size() == 0) fail(ErrorCode::EmptyCohort, "survival needs a non-empty cohort");
  auto obs = survival_observations(cohort);
  return kaplan_meier(obs);
}

}  // namespace hierflow
