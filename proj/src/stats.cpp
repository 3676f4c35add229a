#include "hierflow/stats.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ostream>

#include "hierflow/csv.hpp"
#include "hierflow/error.hpp"

namespace hierflow {

ContingencyTable ContingencyTable::from_margins(std::uint64_t n, std::uint64_t with_event,
                                                std::uint64_t with_outcome, std::uint64_t both) {
  ContingencyTable t;
  t.n11 = both;
  t.n10 = with_event - both;
  t.n01 = with_outcome - both;
  t.n00 = n - with_event - t.n01;
  return t;
}

namespace {

// |n00*n11 - n01*n10| without overflow for any realistic cohort.
double abs_cross_difference(const ContingencyTable& t) {
  const __int128 ad = static_cast<__int128>(t.n00) * t.n11;
  const __int128 bc = static_cast<__int128>(t.n01) * t.n10;
  return static_cast<double>(ad >= bc ? ad - bc : bc - ad);
}

double margin_product(const ContingencyTable& t) {
  return static_cast<double>(t.row0()) * static_cast<double>(t.row1()) *
         static_cast<double>(t.col0()) * static_cast<double>(t.col1());
}

}  // namespace

double chi_square_yates(const ContingencyTable& t) {
  if (t.row0() == 0 || t.row1() == 0 || t.col0() == 0 || t.col1() == 0) return 0.0;
  const double n = static_cast<double>(t.total());
  const double corrected = std::max(abs_cross_difference(t) - n / 2.0, 0.0);
  return n * corrected * corrected / margin_product(t);
}

double chi_square_pearson(const ContingencyTable& t) {
  if (t.row0() == 0 || t.row1() == 0 || t.col0() == 0 || t.col1() == 0) return 0.0;
  const double n = static_cast<double>(t.total());
  const double diff = abs_cross_difference(t);
  return n * diff * diff / margin_product(t);
}

double chi_square_p_value(double statistic) {
  if (statistic <= 0) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

double correlation(const ContingencyTable& t) {
  if (t.row0() == 0 || t.row1() == 0 || t.col0() == 0 || t.col1() == 0) return 0.0;
  const double ad = static_cast<double>(t.n00) * static_cast<double>(t.n11);
  const double bc = static_cast<double>(t.n01) * static_cast<double>(t.n10);
  const double rho = (ad - bc) / std::sqrt(margin_product(t));
  return std::clamp(rho, -1.0, 1.0);
}

OccurrenceMatrix occurrence_vectors(const AnalyticContext& context, const TypeHierarchy& types) {
  const Cohort& cohort = *context.cohort;
  OccurrenceMatrix m(types.size(), cohort.size());
  auto& occ = m.occurrence_counts();
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    for (const Event& e : context.events(i)) {
      m.set(e.type, i);
      ++occ[e.type];
    }
  }
  // Children have larger preorder ids than their parents.
  for (NodeId n = static_cast<NodeId>(types.size()); n-- > 1;) {
    const NodeId p = *types.parent(n);
    auto src = m.row(n);
    auto dst = m.row(p);
    for (std::size_t w = 0; w < src.size(); ++w) dst[w] |= src[w];
    occ[p] += occ[n];
  }
  return m;
}

StatsTable stats_from_occurrences(const OccurrenceMatrix& occurrences, const Bitset& outcome,
                                  const TypeHierarchy& types) {
  const std::uint64_t n = occurrences.entities();
  const std::uint64_t positives = outcome.count();
  std::vector<EventTypeStats> rows(types.size());
  for (NodeId j = 0; j < types.size(); ++j) {
    auto bits = occurrences.row(j);
    EventTypeStats& s = rows[j];
    s.node = j;
    s.seq_count = Bitset::popcount(bits);
    s.occ_count = occurrences.occurrences(j);
    s.prevalence = n ? static_cast<double>(s.seq_count) / static_cast<double>(n) : 0.0;
    s.table = ContingencyTable::from_margins(n, s.seq_count, positives,
                                             Bitset::and_count(bits, outcome.words()));
    s.chi2 = chi_square_yates(s.table);
    s.p_value = chi_square_p_value(s.chi2);
    s.correlation = correlation(s.table);
  }
  return StatsTable(types, n, std::move(rows));
}

StatsTable stats_for_all_types(const AnalyticContext& context, const TypeHierarchy& types) {
  if (!context.cohort || context.cohort->size() == 0) {
    fail(ErrorCode::EmptyCohort, "statistics need a non-empty cohort");
  }
  return stats_from_occurrences(occurrence_vectors(context, types), context.cohort->outcome_bits(),
                                types);
}

std::string format_number(double value) {
  if (value == 0) return "0";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void write_stats_csv(std::ostream& out, const StatsTable& stats, std::span<const NodeId> nodes) {
  csv::write_row(out, {"code", "label", "seq_count", "occ_count", "prevalence", "chi2", "p_value",
                       "correlation"});
  const TypeHierarchy& types = stats.types();
  for (NodeId j : nodes) {
    const EventTypeStats& s = stats[j];
    csv::write_row(out, {types.code(j), types.label(j), std::to_string(s.seq_count),
                         std::to_string(s.occ_count), format_number(s.prevalence),
                         format_number(s.chi2), format_number(s.p_value),
                         format_number(s.correlation)});
  }
}

}  // namespace hierflow
