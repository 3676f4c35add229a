#include "hierflow/cut.hpp"

#include <algorithm>

#include "hierflow/error.hpp"

namespace hierflow {

double comparison_ratio(const TypeHierarchy& types, std::span<const double> chi2, NodeId j) {
  auto kids = types.children(j);
  if (kids.empty()) fail(ErrorCode::LeafNode, "'" + types.code(j) + "' has no children");
  std::size_t better = 0;
  for (NodeId c : kids) better += chi2[j] < chi2[c] ? 1 : 0;
  return static_cast<double>(better) / static_cast<double>(kids.size());
}

double comparison_ratio(const StatsTable& stats, NodeId j) {
  auto chi2 = chi2_column(stats);
  return comparison_ratio(stats.types(), chi2, j);
}

CutResult informative_cut(const TypeHierarchy& types, std::span<const double> chi2,
                          CutParams params) {
  if (!(params.r >= 0.0 && params.r <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "R must lie in [0, 1]");
  }
  CutResult result;
  result.params = params;
  std::vector<NodeId> stack{types.root()};
  while (!stack.empty()) {
    NodeId j = stack.back();
    stack.pop_back();
    if (types.is_leaf(j) || comparison_ratio(types, chi2, j) <= params.r) {
      result.pre_filter.push_back(j);
      continue;
    }
    auto kids = types.children(j);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  for (NodeId j : result.pre_filter) {
    if (chi2[j] > 0) result.post_filter.push_back(j);
  }
  return result;
}

CutResult informative_cut(const StatsTable& stats, CutParams params) {
  auto chi2 = chi2_column(stats);
  return informative_cut(stats.types(), chi2, params);
}

std::vector<NodeId> leaf_cut(const TypeHierarchy& types) {
  std::vector<NodeId> leaves;
  for (NodeId n = 0; n < types.size(); ++n) {
    if (types.is_leaf(n)) leaves.push_back(n);
  }
  return leaves;
}

ScentMap scent(const TypeHierarchy& types, std::span<const double> correlation) {
  std::vector<double> values(types.size(), 0.0);
  for (NodeId j = static_cast<NodeId>(types.size()); j-- > 0;) {
    auto kids = types.children(j);
    if (kids.empty()) continue;
    double lo = correlation[kids.front()], hi = lo, best_child = 0.0;
    for (NodeId c : kids) {
      lo = std::min(lo, correlation[c]);
      hi = std::max(hi, correlation[c]);
      best_child = std::max(best_child, values[c]);
    }
    values[j] = std::max(hi - lo, best_child);
  }
  return ScentMap(std::move(values));
}

ScentMap scent(const StatsTable& stats) {
  auto rho = correlation_column(stats);
  return scent(stats.types(), rho);
}

std::vector<double> chi2_column(const StatsTable& stats) {
  std::vector<double> out(stats.size());
  for (NodeId j = 0; j < stats.size(); ++j) out[j] = stats[j].chi2;
  return out;
}

std::vector<double> correlation_column(const StatsTable& stats) {
  std::vector<double> out(stats.size());
  for (NodeId j = 0; j < stats.size(); ++j) out[j] = stats[j].correlation;
  return out;
}

}  // namespace hierflow
