#include "hierflow/api/views.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "hierflow/csv.hpp"
#include "hierflow/error.hpp"

namespace hierflow::api {

namespace {

double mean_outcome(const Cohort& cohort, const std::vector<std::uint32_t>& members) {
  if (members.empty()) return 0;
  std::size_t pos = 0;
  for (auto i : members) pos += cohort.members[i].outcome ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(members.size());
}

Json member_ids(const Cohort& cohort, const std::vector<std::uint32_t>& members) {
  Json ids = Json::array();
  for (auto i : members) ids.push_back(cohort.entity(i).id);
  return ids;
}

Json focus_mark_json(const FocusMark& m) {
  return Json{{"code", m.code},
              {"label", m.label},
              {"depth", m.depth},
              {"leaf", m.leaf},
              {"seq_count", m.seq_count},
              {"prevalence", m.prevalence},
              {"correlation", m.correlation},
              {"scent", m.scent},
              {"x", m.x},
              {"y0", m.y0},
              {"y", m.y},
              {"optimized_prevalence", m.optimized_prevalence}};
}

}  // namespace

TableSort parse_table_sort(std::string_view text) {
  if (text == "seq_count") return TableSort::SeqCount;
  if (text == "occ_count") return TableSort::OccCount;
  if (text == "correlation") return TableSort::Correlation;
  fail(ErrorCode::InvalidArgument,
       "sort must be seq_count, occ_count or correlation, got '" + std::string(text) + "'");
}

Json dataset_json(const Dataset& d) {
  Json attrs = Json::array();
  for (const auto& a : d.attributes) {
    attrs.push_back({{"name", a.name},
                     {"kind", a.kind == AttributeKind::Numeric ? "numeric" : "categorical"}});
  }
  return Json{{"dataset_id", d.id()},
              {"entities", d.entities.size()},
              {"events", d.event_count()},
              {"nodes", d.types().size()},
              {"leaves", d.types().leaf_count()},
              {"attributes", attrs},
              {"ingested_at", d.info.ingested_at}};
}

Json cohort_json(const Cohort& c) {
  Json filters = Json::array();
  for (const auto& f : c.filters) filters.push_back(Json::parse(to_json(f)));
  const std::size_t pos = c.positives();
  return Json{{"cohort_id", c.id},
              {"dataset_id", c.dataset->id()},
              {"size", c.size()},
              {"positives", pos},
              {"outcome_rate", c.size() ? static_cast<double>(pos) / c.size() : 0.0},
              {"empty_warning", c.empty_warning},
              {"query", Json::parse(to_json(c.query))},
              {"filters", filters}};
}

Json timeline_json(const TimelineModel& t, bool detail) {
  const Cohort& cohort = *t.cohort;
  const TypeHierarchy& types = cohort.types();
  Json milestones = Json::array();
  for (const auto& m : t.milestones) {
    Json j{{"id", m.id},
           {"code", m.type_code},
           {"label", m.is_start() ? std::string("lookback start") : types.label(types.id(m.type_code))},
           {"members", m.members.size()},
           {"proportion", m.proportion},
           {"avg_outcome", m.avg_outcome},
           {"position", m.position}};
    if (detail) j["member_ids"] = member_ids(cohort, m.members);
    milestones.push_back(std::move(j));
  }
  Json edges = Json::array();
  for (const auto& e : t.edges) {
    Json j{{"id", e.id},
           {"from", e.from},
           {"to", e.to},
           {"members", e.members.size()},
           {"proportion", e.proportion},
           {"avg_days", e.avg_days},
           {"avg_outcome", e.avg_outcome},
           {"split_from", e.split_from}};
    if (detail) j["member_ids"] = member_ids(cohort, e.members);
    edges.push_back(std::move(j));
  }
  Json paths = Json::array();
  for (const auto& p : t.paths) {
    Json j{{"milestones", p.milestones},
           {"members", p.members.size()},
           {"avg_outcome", mean_outcome(cohort, p.members)}};
    if (detail) j["member_ids"] = member_ids(cohort, p.members);
    paths.push_back(std::move(j));
  }
  return Json{{"cohort_id", cohort.id},
              {"version", t.version},
              {"parent_version", t.parent_version},
              {"size", cohort.size()},
              {"milestones", milestones},
              {"edges", edges},
              {"paths", paths}};
}

Json stats_row_json(const StatsTable& stats, const ScentMap& scents, NodeId n) {
  const TypeHierarchy& types = stats.types();
  const EventTypeStats& s = stats[n];
  return Json{{"code", types.code(n)},
              {"label", types.label(n)},
              {"depth", types.depth(n)},
              {"leaf", types.is_leaf(n)},
              {"seq_count", s.seq_count},
              {"occ_count", s.occ_count},
              {"prevalence", s.prevalence},
              {"chi2", s.chi2},
              {"p_value", s.p_value},
              {"correlation", s.correlation},
              {"scent", scents[n]}};
}

Json scatter_json(const StatsTable& stats, const ScentMap& scents, const CutResult& cut,
                  const ScatterOptions& options) {
  double half = 0, y_max = 0;
  Json marks = Json::array();
  for (NodeId n : cut.post_filter) {
    half = std::max(half, std::abs(stats[n].correlation));
    y_max = std::max(y_max, stats[n].prevalence);
    marks.push_back(stats_row_json(stats, scents, n));
  }
  half = std::max(half * (1 + options.x_padding), options.min_half_width);
  y_max = std::min(1.0, y_max > 0 ? y_max * (1 + options.x_padding) : 1.0);

  std::vector<std::pair<double, double>> points;
  points.reserve(stats.size());
  for (const auto& s : stats.rows()) {
    points.emplace_back((s.correlation + half) / (2 * half), s.prevalence / y_max);
  }
  const HexBinGrid grid = hexbin(points, options.hex_radius);
  Json bins = Json::array();
  for (const auto& b : grid.bins) {
    bins.push_back({{"q", b.q}, {"r", b.r}, {"count", b.count}, {"cx", b.cx}, {"cy", b.cy}});
  }
  return Json{{"context", cut.context_id},
              {"r", cut.params.r},
              {"cohort_size", stats.cohort_size()},
              {"pre_filter_size", cut.pre_filter.size()},
              {"post_filter_size", cut.post_filter.size()},
              {"x_domain", {-half, half}},
              {"y_domain", {0.0, y_max}},
              {"zero_guide", 0.0},
              {"marks", marks},
              {"hexbins",
               {{"radius", grid.radius},
                {"coordinates", "unit"},
                {"total", grid.total},
                {"bins", bins}}}};
}

Json cut_json(const StatsTable& stats, const CutResult& cut) {
  const TypeHierarchy& types = stats.types();
  Json pre = Json::array(), rows = Json::array();
  for (NodeId n : cut.pre_filter) pre.push_back(types.code(n));
  for (NodeId n : cut.post_filter) {
    const EventTypeStats& s = stats[n];
    rows.push_back({{"code", types.code(n)},
                    {"label", types.label(n)},
                    {"seq_count", s.seq_count},
                    {"occ_count", s.occ_count},
                    {"prevalence", s.prevalence},
                    {"chi2", s.chi2},
                    {"p_value", s.p_value},
                    {"correlation", s.correlation}});
  }
  return Json{{"context", cut.context_id},
              {"r", cut.params.r},
              {"cohort_size", stats.cohort_size()},
              {"pre_filter", pre},
              {"post_filter", rows}};
}

void write_cut_csv(std::ostream& out, const StatsTable& stats, const CutResult& cut) {
  write_stats_csv(out, stats, cut.post_filter);
}

Json focus_json(const FocusLayout& l) {
  Json ancestors = Json::array(), children = Json::array();
  for (const auto& m : l.ancestors) ancestors.push_back(focus_mark_json(m));
  for (const auto& m : l.children) children.push_back(focus_mark_json(m));
  return Json{{"focus", focus_mark_json(l.focus)},
              {"ancestors", ancestors},
              {"children", children},
              {"x_domain", {l.x_min, l.x_max}},
              {"y_domain", {0.0, l.y_max}},
              {"guides", {{"zero", l.zero_guide}, {"focus", l.focus_guide}}},
              {"mark_diameter", l.diameter},
              {"plot", {{"width", l.width}, {"height", l.height}}},
              {"layout_cost", {{"initial", l.initial_cost}, {"final", l.cost}}},
              {"iterations", l.iterations}};
}

Json survival_json(const SurvivalCurve& c) {
  Json points = Json::array();
  for (const auto& p : c.points) {
    points.push_back({{"t", p.time},
                      {"s", p.survival},
                      {"at_risk", p.at_risk},
                      {"events", p.events},
                      {"censored", p.censored}});
  }
  std::size_t events = 0;
  for (const auto& p : c.points) events += p.events;
  return Json{{"time_unit", "days since final inclusion anchor"},
              {"events", events},
              {"censored", c.censor_times.size()},
              {"points", points},
              {"censor_times", c.censor_times}};
}

Json attributes_json(const Cohort& cohort, int numeric_bins) {
  const Dataset& d = *cohort.dataset;
  Json out = Json::array();
  for (std::size_t a = 0; a < d.attributes.size(); ++a) {
    const auto& column = d.attributes[a];
    std::size_t missing = 0;
    if (column.kind == AttributeKind::Numeric) {
      std::vector<std::pair<double, bool>> values;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& v = cohort.entity(i).attributes[a];
        if (const double* x = std::get_if<double>(&v)) {
          values.emplace_back(*x, cohort.members[i].outcome);
        } else {
          ++missing;
        }
      }
      Json bins = Json::array();
      if (!values.empty()) {
        double lo = values.front().first, hi = lo;
        for (const auto& [x, o] : values) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        const int k = hi > lo ? numeric_bins : 1;
        std::vector<std::size_t> count(k, 0), pos(k, 0);
        for (const auto& [x, o] : values) {
          int b = hi > lo ? static_cast<int>((x - lo) / (hi - lo) * k) : 0;
          b = std::clamp(b, 0, k - 1);
          ++count[b];
          pos[b] += o ? 1 : 0;
        }
        const double width = hi > lo ? (hi - lo) / k : 0.0;
        for (int b = 0; b < k; ++b) {
          bins.push_back({{"lo", lo + b * width},
                          {"hi", b + 1 == k ? hi : lo + (b + 1) * width},
                          {"count", count[b]},
                          {"avg_outcome", count[b] ? static_cast<double>(pos[b]) / count[b] : 0.0}});
        }
      }
      out.push_back({{"name", column.name}, {"kind", "numeric"}, {"missing", missing}, {"bins", bins}});
    } else {
      std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& v = cohort.entity(i).attributes[a];
        if (const auto* s = std::get_if<std::string>(&v)) {
          auto& [n, p] = counts[*s];
          ++n;
          p += cohort.members[i].outcome ? 1 : 0;
        } else {
          ++missing;
        }
      }
      Json cats = Json::array();
      for (const auto& [value, np] : counts) {
        cats.push_back({{"value", value},
                        {"count", np.first},
                        {"avg_outcome", static_cast<double>(np.second) / np.first}});
      }
      out.push_back(
          {{"name", column.name}, {"kind", "categorical"}, {"missing", missing}, {"categories", cats}});
    }
  }
  return Json{{"cohort_id", cohort.id}, {"size", cohort.size()}, {"attributes", out}};
}

Json events_table_json(const StatsTable& stats, std::span<const NodeId> nodes, TableSort sort,
                       bool ascending) {
  const TypeHierarchy& types = stats.types();
  std::vector<NodeId> order(nodes.begin(), nodes.end());
  auto key = [&](NodeId n) -> double {
    switch (sort) {
      case TableSort::SeqCount: return static_cast<double>(stats[n].seq_count);
      case TableSort::OccCount: return static_cast<double>(stats[n].occ_count);
      case TableSort::Correlation: return stats[n].correlation;
    }
    return 0;
  };
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ascending ? ka < kb : ka > kb;
    return types.code(a) < types.code(b);
  });
  Json rows = Json::array();
  for (NodeId n : order) {
    const EventTypeStats& s = stats[n];
    rows.push_back({{"code", types.code(n)},
                    {"label", types.label(n)},
                    {"seq_count", s.seq_count},
                    {"occ_count", s.occ_count},
                    {"prevalence", s.prevalence},
                    {"correlation", s.correlation},
                    {"chi2", s.chi2}});
  }
  const char* name = sort == TableSort::SeqCount   ? "seq_count"
                     : sort == TableSort::OccCount ? "occ_count"
                                                   : "correlation";
  return Json{{"sort", name}, {"order", ascending ? "ascending" : "descending"}, {"rows", rows}};
}

}  // namespace hierflow::api
