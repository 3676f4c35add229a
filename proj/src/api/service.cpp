#include "hierflow/api/service.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "hierflow/error.hpp"

namespace hierflow::api {

namespace fs = std::filesystem;

namespace {

std::string r_key(double r) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, r);
  return std::string(buf, p);
}

std::optional<std::string> text_or_file(const Json& m, const char* text_key, const char* path_key,
                                        std::optional<fs::path>& path) {
  if (m.contains(text_key)) return m.at(text_key).get<std::string>();
  if (m.contains(path_key)) path = fs::path(m.at(path_key).get<std::string>());
  return std::nullopt;
}

}  // namespace

Service::Service(ServiceConfig config)
    : config_(std::move(config)), views_(config_.cache_size), scatters_(config_.cache_size * 8) {
  if (config_.data_dir.empty()) return;
  std::error_code ec;
  if (!fs::exists(config_.data_dir, ec)) {
    fs::create_directories(config_.data_dir, ec);
    if (ec) fail(ErrorCode::BadConfig, "cannot create data directory " + config_.data_dir.string());
    return;
  }
  if (!fs::is_directory(config_.data_dir)) {
    fail(ErrorCode::BadConfig, config_.data_dir.string() + " is not a directory");
  }
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(config_.data_dir)) {
    if (d.is_directory() && fs::exists(d.path() / "manifest.json")) dirs.push_back(d.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto ds = load_snapshot(d);
    datasets_[ds->id()] = ds;
  }
}

std::string Service::add_dataset(DatasetHandle dataset) {
  std::unique_lock guard(mutex_);
  const std::string id = dataset->id();
  if (!config_.data_dir.empty() && !datasets_.count(id)) save_snapshot(*dataset, config_.data_dir / id);
  datasets_[id] = std::move(dataset);
  return id;
}

Json Service::add_dataset(const Json& m) {
  if (!m.is_object()) fail(ErrorCode::InvalidArgument, "dataset manifest must be a JSON object");
  DatasetHandle ds;
  if (m.contains("snapshot")) {
    ds = load_snapshot(m.at("snapshot").get<std::string>());
  } else {
    DatasetManifest manifest;
    manifest.dataset_id = m.value("dataset_id", std::string());
    manifest.events_text = text_or_file(m, "events", "events_path", manifest.events_path);
    manifest.hierarchy_text = text_or_file(m, "hierarchy", "hierarchy_path", manifest.hierarchy_path);
    manifest.attributes_text =
        text_or_file(m, "attributes", "attributes_path", manifest.attributes_path);
    ds = ingest(manifest);
  }
  add_dataset(ds);
  return dataset_json(*ds);
}

DatasetHandle Service::dataset(const std::string& id) const {
  std::shared_lock guard(mutex_);
  auto it = datasets_.find(id);
  if (it == datasets_.end()) fail(ErrorCode::NotFound, "unknown dataset '" + id + "'");
  return it->second;
}

Json Service::datasets() const {
  std::shared_lock guard(mutex_);
  Json out = Json::array();
  for (const auto& [id, ds] : datasets_) out.push_back(dataset_json(*ds));
  return out;
}

Json Service::open_cohort(CohortHandle cohort) {
  auto timeline = std::make_shared<const TimelineModel>(build_timeline(cohort));
  std::unique_lock guard(mutex_);
  auto [it, inserted] = cohorts_.try_emplace(cohort->id);
  CohortEntry& e = it->second;
  if (inserted) {
    e.cohort = cohort;
    e.versions[timeline->version] = timeline;
    e.session.dataset_id = cohort->dataset->id();
    e.session.cohort_id = cohort->id;
    e.session.timeline_version = timeline->version;
  }
  Json j = cohort_json(*e.cohort);
  j["timeline_version"] = e.session.timeline_version;
  return j;
}

Json Service::query(const std::string& dataset_id, const QuerySpec& spec) {
  return open_cohort(execute_query(dataset(dataset_id), spec));
}

Json Service::filter(const std::string& cohort_id, const AttributeConstraint& constraint) {
  return open_cohort(apply_attribute_filter(*cohort(cohort_id), constraint));
}

const Service::CohortEntry& Service::entry(const std::string& cohort_id) const {
  auto it = cohorts_.find(cohort_id);
  if (it == cohorts_.end()) fail(ErrorCode::NotFound, "unknown cohort '" + cohort_id + "'");
  return it->second;
}

Service::CohortEntry& Service::entry(const std::string& cohort_id) {
  auto it = cohorts_.find(cohort_id);
  if (it == cohorts_.end()) fail(ErrorCode::NotFound, "unknown cohort '" + cohort_id + "'");
  return it->second;
}

CohortHandle Service::cohort(const std::string& cohort_id) const {
  std::shared_lock guard(mutex_);
  return entry(cohort_id).cohort;
}

SessionState Service::session(const std::string& cohort_id) const {
  std::shared_lock guard(mutex_);
  return entry(cohort_id).session;
}

Json Service::timeline(const std::string& cohort_id, bool detail) const {
  std::shared_ptr<const TimelineModel> t;
  std::string selection;
  {
    std::shared_lock guard(mutex_);
    const CohortEntry& e = entry(cohort_id);
    t = e.versions.at(e.session.timeline_version);
    selection = e.session.selection;
  }
  Json j = timeline_json(*t, detail);
  j["selection"] = selection;
  return j;
}

Json Service::select(const std::string& cohort_id, const std::string& selection,
                     std::optional<double> r) {
  if (r && !(*r >= 0 && *r <= 1)) fail(ErrorCode::InvalidArgument, "R must lie in [0, 1]");
  std::unique_lock guard(mutex_);
  CohortEntry& e = entry(cohort_id);
  const auto& t = *e.versions.at(e.session.timeline_version);
  const Selection parsed = Selection::parse(selection, t);
  e.session.selection = parsed.to_string();
  if (r) e.session.r = *r;
  return Json{{"cohort_id", cohort_id},
              {"timeline_version", e.session.timeline_version},
              {"selection", e.session.selection},
              {"context", t.version + "/" + e.session.selection},
              {"r", e.session.r}};
}

Json Service::add_milestone(const std::string& cohort_id, const std::string& edge,
                            const std::string& code) {
  std::unique_lock guard(mutex_);
  CohortEntry& e = entry(cohort_id);
  const auto& current = *e.versions.at(e.session.timeline_version);
  auto next = std::make_shared<const TimelineModel>(hierflow::add_milestone(current, edge, code));
  e.versions[next->version] = next;
  e.session.timeline_version = next->version;
  if (e.session.selection != "whole") {
    const std::string sel = e.session.selection;
    const auto colon = sel.find(':');
    const std::string id = colon == std::string::npos ? sel : sel.substr(colon + 1);
    if (!next->find_milestone(id) && !next->find_edge(id)) e.session.selection = "whole";
  }
  Json j = timeline_json(*next);
  j["selection"] = e.session.selection;
  return j;
}

Json Service::lock(const std::string& cohort_id, const std::vector<std::string>& codes) {
  std::unique_lock guard(mutex_);
  CohortEntry& e = entry(cohort_id);
  for (const auto& c : codes) e.cohort->types().id(c);
  e.session.locked = std::set<std::string>(codes.begin(), codes.end());
  return Json{{"cohort_id", cohort_id}, {"locked", e.session.locked}};
}

std::shared_ptr<const AnalyticView> Service::view_for(const CohortEntry& e,
                                                      const std::string& version,
                                                      const std::string& selection) const {
  const std::string key = e.cohort->id + "|" + version + "|" + selection;
  if (auto hit = views_.get(key)) return *hit;
  const TimelineModel& t = *e.versions.at(version);
  AnalyticContext ctx = context_window(t, Selection::parse(selection, t));
  StatsTable stats = stats_for_all_types(ctx, e.cohort->types());
  ScentMap scents = scent(stats);
  auto v = std::make_shared<const AnalyticView>(
      AnalyticView{t, std::move(ctx), std::move(stats), std::move(scents)});
  views_.put(key, v);
  return v;
}

std::shared_ptr<const AnalyticView> Service::view(const std::string& cohort_id) const {
  std::shared_lock guard(mutex_);
  const CohortEntry& e = entry(cohort_id);
  return view_for(e, e.session.timeline_version, e.session.selection);
}

double Service::resolve_r(const SessionState& s, std::optional<double> r) const {
  const double value = r.value_or(s.r);
  if (!(value >= 0 && value <= 1)) fail(ErrorCode::InvalidArgument, "R must lie in [0, 1]");
  return value;
}

CutResult Service::cut_for(const AnalyticView& v, double r) const {
  CutResult cut = informative_cut(v.stats, {r});
  cut.context_id = v.context.provenance;
  return cut;
}

Json Service::scatter(const std::string& cohort_id, std::optional<double> r) const {
  SessionState s = session(cohort_id);
  const double value = resolve_r(s, r);
  std::string key = cohort_id + "|" + s.timeline_version + "|" + s.selection + "|" + r_key(value);
  for (const auto& c : s.locked) key += "|" + c;
  if (auto hit = scatters_.get(key)) return **hit;

  auto v = view(cohort_id);
  const CutResult cut = cut_for(*v, value);
  Json j = scatter_json(v->stats, v->scents, cut, config_.scatter);
  for (auto& m : j["marks"]) m["locked"] = s.locked.count(m["code"].get<std::string>()) > 0;
  Json locked = Json::array();
  for (const auto& c : s.locked) {
    locked.push_back(stats_row_json(v->stats, v->scents, v->stats.types().id(c)));
  }
  Json out{{"cohort_id", cohort_id},
           {"timeline_version", s.timeline_version},
           {"selection", s.selection}};
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value();
  out["locked"] = locked;
  scatters_.put(key, std::make_shared<const Json>(out));
  return out;
}

Json Service::cut(const std::string& cohort_id, std::optional<double> r) const {
  SessionState s = session(cohort_id);
  auto v = view(cohort_id);
  Json j = cut_json(v->stats, cut_for(*v, resolve_r(s, r)));
  j["cohort_id"] = cohort_id;
  j["selection"] = s.selection;
  return j;
}

std::string Service::cut_csv(const std::string& cohort_id, std::optional<double> r) const {
  SessionState s = session(cohort_id);
  auto v = view(cohort_id);
  std::ostringstream out;
  write_cut_csv(out, v->stats, cut_for(*v, resolve_r(s, r)));
  return out.str();
}

Json Service::focus(const std::string& cohort_id, const std::string& code) const {
  auto v = view(cohort_id);
  Json j = focus_json(focus_layout(v->stats, v->scents, code, config_.focus));
  j["cohort_id"] = cohort_id;
  j["context"] = v->context.provenance;
  return j;
}

Json Service::survival(const std::string& cohort_id) const {
  Json j = survival_json(kaplan_meier(*cohort(cohort_id)));
  j["cohort_id"] = cohort_id;
  return j;
}

Json Service::attributes(const std::string& cohort_id) const {
  return attributes_json(*cohort(cohort_id));
}

Json Service::events_table(const std::string& cohort_id, TableSort sort, bool ascending,
                           bool all_nodes) const {
  SessionState s = session(cohort_id);
  auto v = view(cohort_id);
  std::vector<NodeId> nodes;
  if (all_nodes) {
    for (NodeId n = 0; n < v->stats.size(); ++n) nodes.push_back(n);
  } else {
    nodes = cut_for(*v, s.r).post_filter;
  }
  Json j = events_table_json(v->stats, nodes, sort, ascending);
  j["cohort_id"] = cohort_id;
  j["context"] = v->context.provenance;
  return j;
}

std::string Service::stats_csv(const std::string& cohort_id) const {
  auto v = view(cohort_id);
  std::vector<NodeId> nodes(v->stats.size());
  for (NodeId n = 0; n < nodes.size(); ++n) nodes[n] = n;
  std::ostringstream out;
  write_stats_csv(out, v->stats, nodes);
  return out.str();
}

std::size_t Service::cache_hits() const { return views_.hits() + scatters_.hits(); }

}  // namespace hierflow::api
