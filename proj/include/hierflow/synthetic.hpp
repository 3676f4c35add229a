#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hierflow/dataset.hpp"

namespace hierflow {

// Subtree whose presence in a record multiplies the odds of the outcome.
// An empty code picks a random node at `depth` of the generated hierarchy.
struct RiskFactor {
  std::string code;
  std::uint32_t depth = 2;
  double odds = 2.0;
};

struct SyntheticSpec {
  std::uint32_t n_entities = 1000;
  std::uint32_t n_event_types = 500;  // leaves, the outcome code included
  std::uint32_t branching = 8;        // mean children per interior node
  std::uint32_t depth = 3;            // leaf depth below the root
  double mean_seq_length = 50;        // events per entity
  double outcome_prevalence = 0.1;    // target fraction of positive entities
  std::vector<RiskFactor> risk;
  std::uint64_t seed = 1;
  std::uint32_t total_nodes = 0;      // when non-zero, exact hierarchy size
  double zipf_exponent = 1.0;         // leaf popularity skew
  double group_skew = 0.0;            // popularity skew among sibling groups
  std::int32_t record_span_days = 1095;
  std::string outcome_code = "OUTCOME";
  // Random risk factors: each node at this depth (0 = none) becomes a risk
  // subtree with the given probability and log-normal odds.
  std::uint32_t random_risk_depth = 0;
  double random_risk_fraction = 1.0;
  double random_risk_log_odds_sd = 1.0;
};

// JSON object with the SyntheticSpec field names. Throws InvalidSpec.
SyntheticSpec parse_synthetic_spec(std::string_view json_text);
// Throws InvalidSpec on non-positive counts or a prevalence outside (0, 1).
void validate(const SyntheticSpec& spec);

// Tree with exactly spec.n_event_types leaves (or spec.total_nodes nodes in
// total): the outcome code as a top-level leaf plus generated leaves at depth
// spec.depth, grouped bottom-up into parents of random size around
// spec.branching.
TypeHierarchy synthetic_hierarchy(const SyntheticSpec& spec);

// Deterministic for a fixed spec. Every entity gets at least one event; leaf
// popularity follows a Zipf law over a random ranking; exactly
// round(prevalence * n_entities) entities are chosen positive with weights
// given by the risk odds and receive an outcome event after their last event.
// Attributes: age (numeric) and sex (categorical).
DatasetHandle generate_synthetic(const SyntheticSpec& spec);

// 4,936 entities, 13,118 leaves, skewed leaf and group popularity, risk spread over
// depth-2 subtrees; average row of the reference query statistics.
SyntheticSpec aggregation_trend_spec();
// 8,360 entities over a 15,376-node hierarchy, 185 events per entity.
SyntheticSpec largest_query_spec();

}  // namespace hierflow
