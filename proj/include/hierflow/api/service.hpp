#pragma once

#include <cstddef>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "hierflow/api/views.hpp"

namespace hierflow::api {

struct ServiceConfig {
  std::filesystem::path data_dir;  // snapshots loaded at start, new datasets saved here
  std::size_t cache_size = 64;     // analytic contexts kept
  FocusOptions focus;
  ScatterOptions scatter;
};

struct SessionState {
  std::string dataset_id;
  std::string cohort_id;
  std::string timeline_version;
  std::string selection = "whole";
  double r = 0.0;
  std::set<std::string> locked;
};

// Thread-safe least-recently-used map.
template <class V>
class LruCache {
 public:
  explicit LruCache(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  std::optional<V> get(const std::string& key) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    items_.splice(items_.begin(), items_, it->second);
    ++hits_;
    return it->second->second;
  }
  void put(const std::string& key, V value) {
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) {
      it->second->second = std::move(value);
      items_.splice(items_.begin(), items_, it->second);
      return;
    }
    items_.emplace_front(key, std::move(value));
    index_[key] = items_.begin();
    if (items_.size() > capacity_) {
      index_.erase(items_.back().first);
      items_.pop_back();
    }
  }
  std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<std::pair<std::string, V>> items_;
  std::unordered_map<std::string, typename std::list<std::pair<std::string, V>>::iterator> index_;
  std::size_t hits_ = 0;
};

// Statistics and scent for one (cohort, timeline version, selection).
struct AnalyticView {
  TimelineModel timeline;
  AnalyticContext context;
  StatsTable stats;
  ScentMap scents;
};

// Registry of datasets, cohorts, timeline versions and per-cohort sessions
// behind the HTTP service and the CLI. Reads run concurrently; writes are
// exclusive. Derived statistics are cached by (cohort, version, selection).
class Service {
 public:
  explicit Service(ServiceConfig config = {});

  // Manifest: {"dataset_id"?, "snapshot"} or {"dataset_id"?, "events" |
  // "events_path", "hierarchy" | "hierarchy_path", "attributes" |
  // "attributes_path"}.
  Json add_dataset(const Json& manifest);
  std::string add_dataset(DatasetHandle dataset);
  DatasetHandle dataset(const std::string& id) const;
  Json datasets() const;

  // New cohort and session; its timeline starts at the initial version.
  Json query(const std::string& dataset_id, const QuerySpec& spec);
  Json filter(const std::string& cohort_id, const AttributeConstraint& constraint);
  CohortHandle cohort(const std::string& cohort_id) const;
  SessionState session(const std::string& cohort_id) const;

  Json timeline(const std::string& cohort_id, bool detail = false) const;
  // "whole", a milestone or an edge id of the current version.
  Json select(const std::string& cohort_id, const std::string& selection,
              std::optional<double> r = std::nullopt);
  Json add_milestone(const std::string& cohort_id, const std::string& edge,
                     const std::string& code);
  Json lock(const std::string& cohort_id, const std::vector<std::string>& codes);

  Json scatter(const std::string& cohort_id, std::optional<double> r = std::nullopt) const;
  Json cut(const std::string& cohort_id, std::optional<double> r = std::nullopt) const;
  std::string cut_csv(const std::string& cohort_id, std::optional<double> r = std::nullopt) const;
  Json focus(const std::string& cohort_id, const std::string& code) const;
  Json survival(const std::string& cohort_id) const;
  Json attributes(const std::string& cohort_id) const;
  Json events_table(const std::string& cohort_id, TableSort sort, bool ascending = false,
                    bool all_nodes = false) const;
  std::string stats_csv(const std::string& cohort_id) const;

  std::shared_ptr<const AnalyticView> view(const std::string& cohort_id) const;
  std::size_t cache_hits() const;

 private:
  struct CohortEntry {
    CohortHandle cohort;
    std::map<std::string, std::shared_ptr<const TimelineModel>> versions;
    SessionState session;
  };

  const CohortEntry& entry(const std::string& cohort_id) const;
  CohortEntry& entry(const std::string& cohort_id);
  Json open_cohort(CohortHandle cohort);
  std::shared_ptr<const AnalyticView> view_for(const CohortEntry& e, const std::string& version,
                                               const std::string& selection) const;
  CutResult cut_for(const AnalyticView& v, double r) const;
  double resolve_r(const SessionState& s, std::optional<double> r) const;

  ServiceConfig config_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, DatasetHandle> datasets_;
  std::map<std::string, CohortEntry> cohorts_;

  // Keyed by cohort, version and selection; scatter bodies also by R.
  mutable LruCache<std::shared_ptr<const AnalyticView>> views_;
  mutable LruCache<std::shared_ptr<const Json>> scatters_;
};

}  // namespace hierflow::api
