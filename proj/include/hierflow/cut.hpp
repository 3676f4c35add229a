#pragma once

#include <span>
#include <string>
#include <vector>

#include "hierflow/hierarchy.hpp"
#include "hierflow/stats.hpp"

namespace hierflow {

struct CutParams {
  double r = 0.0;  // in [0, 1]
};

struct CutResult {
  std::vector<NodeId> pre_filter;   // the cut, in preorder
  std::vector<NodeId> post_filter;  // cut nodes with chi2 > 0
  CutParams params;
  std::string context_id;
};

// Fraction of j's children that are strictly more informative than j.
// Throws LeafNode.
double comparison_ratio(const TypeHierarchy& types, std::span<const double> chi2, NodeId j);
double comparison_ratio(const StatsTable& stats, NodeId j);

// Depth-first from the root: a node joins the cut when it is a leaf or its
// comparison ratio is <= r; otherwise each child is visited. Throws
// InvalidArgument for r outside [0, 1].
CutResult informative_cut(const TypeHierarchy& types, std::span<const double> chi2,
                          CutParams params);
CutResult informative_cut(const StatsTable& stats, CutParams params);

// All leaves, in preorder.
std::vector<NodeId> leaf_cut(const TypeHierarchy& types);

class ScentMap {
 public:
  explicit ScentMap(std::vector<double> values) : values_(std::move(values)) {}
  double operator[](NodeId n) const { return values_[n]; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

// Leaves score 0; an interior node scores the larger of its children's
// correlation spread (max - min) and its children's scents.
ScentMap scent(const TypeHierarchy& types, std::span<const double> correlation);
ScentMap scent(const StatsTable& stats);

std::vector<double> chi2_column(const StatsTable& stats);
std::vector<double> correlation_column(const StatsTable& stats);

}  // namespace hierflow
