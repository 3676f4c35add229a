#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hierflow/cut.hpp"
#include "hierflow/layout.hpp"
#include "hierflow/stats.hpp"
#include "hierflow/timeline.hpp"

namespace hierflow::api {

using Json = nlohmann::ordered_json;

enum class TableSort { SeqCount, OccCount, Correlation };
TableSort parse_table_sort(std::string_view text);  // throws InvalidArgument

struct ScatterOptions {
  double hex_radius = 0.025;  // in unit plot coordinates
  double x_padding = 0.1;
  double min_half_width = 0.05;
};

Json dataset_json(const Dataset& dataset);
Json cohort_json(const Cohort& cohort);
// Counts only unless `detail`, which adds member entity ids.
Json timeline_json(const TimelineModel& timeline, bool detail = false);
Json stats_row_json(const StatsTable& stats, const ScentMap& scents, NodeId n);

// Cut marks (post-filter) with stats and scent, cut sizes, axis domains and
// background hex bins over every hierarchy node in unit plot coordinates.
Json scatter_json(const StatsTable& stats, const ScentMap& scents, const CutResult& cut,
                  const ScatterOptions& options = {});
Json cut_json(const StatsTable& stats, const CutResult& cut);
void write_cut_csv(std::ostream& out, const StatsTable& stats, const CutResult& cut);
Json focus_json(const FocusLayout& layout);
Json survival_json(const SurvivalCurve& curve);
// Histogram (numeric) or category counts per attribute, with mean outcome.
Json attributes_json(const Cohort& cohort, int numeric_bins = 10);
// Rows sorted descending by `sort` (ties by code); `ascending` flips it.
Json events_table_json(const StatsTable& stats, std::span<const NodeId> nodes, TableSort sort,
                       bool ascending = false);

}  // namespace hierflow::api
