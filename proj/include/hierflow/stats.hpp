#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "hierflow/bitset.hpp"
#include "hierflow/hierarchy.hpp"
#include "hierflow/query.hpp"

namespace hierflow {

// 2x2 table of event occurrence (rows) against outcome (columns):
// n10 counts entities with the event but without the outcome.
struct ContingencyTable {
  std::uint64_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;

  std::uint64_t row0() const { return n00 + n01; }  // n0.
  std::uint64_t row1() const { return n10 + n11; }  // n1.
  std::uint64_t col0() const { return n00 + n10; }  // n.0
  std::uint64_t col1() const { return n01 + n11; }  // n.1
  std::uint64_t total() const { return n00 + n01 + n10 + n11; }

  // From the number of entities, entities with the event, entities with the
  // outcome, and entities with both.
  static ContingencyTable from_margins(std::uint64_t n, std::uint64_t with_event,
                                       std::uint64_t with_outcome, std::uint64_t both);

  bool operator==(const ContingencyTable&) const = default;
};

// Yates-corrected chi-square of independence; 0 when any margin is 0.
double chi_square_yates(const ContingencyTable& t);
// Uncorrected Pearson chi-square; 0 when any margin is 0.
double chi_square_pearson(const ContingencyTable& t);
// Upper tail of the chi-square distribution with one degree of freedom.
double chi_square_p_value(double statistic);
// Signed phi coefficient; 0 when any margin is 0.
double correlation(const ContingencyTable& t);

// One packed bit row per hierarchy node, each cohort-size bits long.
class OccurrenceMatrix {
 public:
  OccurrenceMatrix() = default;
  OccurrenceMatrix(std::size_t nodes, std::size_t entities)
      : entities_(entities),
        stride_((entities + 63) / 64),
        words_(nodes * stride_, 0),
        occurrences_(nodes, 0) {}

  std::size_t nodes() const { return occurrences_.size(); }
  std::size_t entities() const { return entities_; }

  std::span<const std::uint64_t> row(NodeId n) const {
    return {words_.data() + n * stride_, stride_};
  }
  std::span<std::uint64_t> row(NodeId n) { return {words_.data() + n * stride_, stride_}; }
  Bitset vector(NodeId n) const { return Bitset(entities_, row(n)); }
  bool test(NodeId n, std::size_t entity) const {
    return (row(n)[entity >> 6] >> (entity & 63)) & 1u;
  }
  void set(NodeId n, std::size_t entity) {
    row(n)[entity >> 6] |= std::uint64_t{1} << (entity & 63);
  }

  // In-window event occurrences in the node's subtree.
  std::uint64_t occurrences(NodeId n) const { return occurrences_[n]; }
  std::vector<std::uint64_t>& occurrence_counts() { return occurrences_; }

 private:
  std::size_t entities_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> occurrences_;
};

// Bit i of node j is set iff j or any descendant occurs in member i's window.
// Computed from direct occurrences and a bottom-up union.
OccurrenceMatrix occurrence_vectors(const AnalyticContext& context, const TypeHierarchy& types);

struct EventTypeStats {
  NodeId node = 0;
  std::uint64_t seq_count = 0;
  std::uint64_t occ_count = 0;
  double prevalence = 0;
  double chi2 = 0;
  double p_value = 1;
  double correlation = 0;
  ContingencyTable table;
};

class StatsTable {
 public:
  StatsTable(const TypeHierarchy& types, std::size_t cohort_size,
             std::vector<EventTypeStats> rows)
      : types_(&types), cohort_size_(cohort_size), rows_(std::move(rows)) {}

  std::size_t size() const { return rows_.size(); }
  std::size_t cohort_size() const { return cohort_size_; }
  const TypeHierarchy& types() const { return *types_; }
  const EventTypeStats& operator[](NodeId n) const { return rows_[n]; }
  const EventTypeStats& at(std::string_view code) const { return rows_[types_->id(code)]; }
  std::span<const EventTypeStats> rows() const { return rows_; }

 private:
  const TypeHierarchy* types_;
  std::size_t cohort_size_;
  std::vector<EventTypeStats> rows_;
};

// Per-node statistics for the whole hierarchy under `context`.
// Throws EmptyCohort.
StatsTable stats_for_all_types(const AnalyticContext& context, const TypeHierarchy& types);
StatsTable stats_from_occurrences(const OccurrenceMatrix& occurrences, const Bitset& outcome,
                                  const TypeHierarchy& types);

// code,label,seq_count,occ_count,prevalence,chi2,p_value,correlation
void write_stats_csv(std::ostream& out, const StatsTable& stats, std::span<const NodeId> nodes);

std::string format_number(double value);

}  // namespace hierflow
