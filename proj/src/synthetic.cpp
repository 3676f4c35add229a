#include "hierflow/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <json.hpp>

#include "hierflow/error.hpp"
#include "hierflow/hash.hpp"

namespace hierflow {

using nlohmann::json;

namespace {

constexpr Day kFirstRecordDay{15340};  // 2012-01-01
constexpr std::int32_t kStartSpreadDays = 1460;

// Node counts per level, leaves first, top level last.
std::vector<std::uint32_t> level_sizes(std::uint32_t leaves, std::uint32_t branching,
                                       std::uint32_t depth) {
  std::vector<std::uint32_t> sizes{leaves};
  for (std::uint32_t k = 1; k < depth; ++k) {
    sizes.push_back(std::max<std::uint32_t>(1, (sizes.back() + branching - 1) / branching));
  }
  return sizes;
}

std::uint64_t interior_count(const std::vector<std::uint32_t>& sizes) {
  return std::accumulate(sizes.begin() + 1, sizes.end(), std::uint64_t{0});
}

// Random composition of `items` into `groups` positive parts.
std::vector<std::uint32_t> random_composition(std::uint32_t items, std::uint32_t groups,
                                              std::mt19937_64& rng) {
  std::vector<std::uint32_t> cuts(items - 1);
  std::iota(cuts.begin(), cuts.end(), 1u);
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(groups - 1);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::uint32_t> parts;
  std::uint32_t prev = 0;
  for (auto c : cuts) {
    parts.push_back(c - prev);
    prev = c;
  }
  parts.push_back(items - prev);
  return parts;
}

std::string child_code(const std::string& parent, std::size_t index, std::size_t siblings) {
  const int width = siblings > 100 ? 3 : siblings > 10 ? 2 : 1;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*zu", width, index);
  return parent + "." + buf;
}

std::uint64_t spec_hash(const SyntheticSpec& s) {
  Fnv1a h;
  h.u64(s.n_entities).u64(s.n_event_types).u64(s.branching).u64(s.depth);
  h.f64(s.mean_seq_length).f64(s.outcome_prevalence).u64(s.seed).u64(s.total_nodes);
  h.f64(s.zipf_exponent).u64(static_cast<std::uint64_t>(s.record_span_days)).str(s.outcome_code);
  for (const auto& r : s.risk) h.str(r.code).u64(r.depth).f64(r.odds);
  h.f64(s.group_skew).u64(s.random_risk_depth).f64(s.random_risk_fraction).f64(s.random_risk_log_odds_sd);
  return h.value();
}

}  // namespace

void validate(const SyntheticSpec& s) {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::InvalidSpec, std::string("synthetic spec: ") + what);
  };
  require(s.n_entities > 0, "n_entities must be positive");
  require(s.n_event_types >= 2 || s.total_nodes > 0, "n_event_types must be at least 2");
  require(s.branching >= 1, "branching must be positive");
  require(s.depth >= 1, "depth must be positive");
  require(s.mean_seq_length >= 1, "mean_seq_length must be at least 1");
  require(s.outcome_prevalence > 0 && s.outcome_prevalence < 1,
          "outcome_prevalence must lie in (0, 1)");
  require(s.zipf_exponent >= 0, "zipf_exponent must be non-negative");
  require(s.group_skew >= 0, "group_skew must be non-negative");
  require(s.record_span_days >= 1, "record_span_days must be positive");
  require(!s.outcome_code.empty() && s.outcome_code != kRootCode, "invalid outcome_code");
  require(s.random_risk_depth <= s.depth, "random_risk_depth out of range");
  require(s.random_risk_fraction >= 0 && s.random_risk_fraction <= 1,
          "random_risk_fraction must lie in [0, 1]");
  require(s.random_risk_log_odds_sd >= 0, "random_risk_log_odds_sd must be non-negative");
  require(s.total_nodes == 0 || s.total_nodes >= s.depth + 2, "total_nodes too small");
  for (const auto& r : s.risk) {
    require(r.odds > 0, "risk odds must be positive");
    require(!r.code.empty() || (r.depth >= 1 && r.depth <= s.depth), "risk depth out of range");
  }
}

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec s;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) fail(ErrorCode::InvalidSpec, "synthetic spec must be a JSON object");
    s.n_entities = j.value("n_entities", s.n_entities);
    s.n_event_types = j.value("n_event_types", s.n_event_types);
    s.branching = j.value("branching", s.branching);
    s.depth = j.value("depth", s.depth);
    s.mean_seq_length = j.value("mean_seq_length", s.mean_seq_length);
    s.outcome_prevalence = j.value("outcome_prevalence", s.outcome_prevalence);
    s.seed = j.value("seed", s.seed);
    s.total_nodes = j.value("total_nodes", s.total_nodes);
    s.zipf_exponent = j.value("zipf_exponent", s.zipf_exponent);
    s.group_skew = j.value("group_skew", s.group_skew);
    s.record_span_days = j.value("record_span_days", s.record_span_days);
    s.outcome_code = j.value("outcome_code", s.outcome_code);
    s.random_risk_depth = j.value("random_risk_depth", s.random_risk_depth);
    s.random_risk_fraction = j.value("random_risk_fraction", s.random_risk_fraction);
    s.random_risk_log_odds_sd = j.value("random_risk_log_odds_sd", s.random_risk_log_odds_sd);
    if (j.contains("risk")) {
      for (const auto& r : j.at("risk")) {
        RiskFactor f;
        f.code = r.value("code", f.code);
        f.depth = r.value("depth", f.depth);
        f.odds = r.value("odds", f.odds);
        s.risk.push_back(f);
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("synthetic spec: ") + e.what());
  }
  validate(s);
  return s;
}

TypeHierarchy synthetic_hierarchy(const SyntheticSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);

  std::uint32_t leaves = spec.n_event_types - 1;
  std::vector<std::uint32_t> sizes = level_sizes(leaves, spec.branching, spec.depth);
  if (spec.total_nodes) {
    // Largest leaf count whose tree fits, then top up with extra leaves.
    const std::uint64_t budget = spec.total_nodes - 2;
    std::uint32_t lo = 1, hi = spec.total_nodes;
    while (lo < hi) {
      const std::uint32_t mid = lo + (hi - lo + 1) / 2;
      const auto s = level_sizes(mid, spec.branching, spec.depth);
      if (mid + interior_count(s) <= budget) lo = mid; else hi = mid - 1;
    }
    sizes = level_sizes(lo, spec.branching, spec.depth);
    sizes[0] = static_cast<std::uint32_t>(budget - interior_count(sizes));
  }

  // children_count[k][g]: children of group g at level k + 1.
  std::vector<std::vector<std::uint32_t>> children_count(sizes.size());
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    children_count[k] = random_composition(sizes[k], sizes[k + 1], rng);
  }

  std::vector<HierarchyEdge> edges{{std::string(kRootCode), "", "All event types"}};
  edges.push_back({spec.outcome_code, std::string(kRootCode), "Outcome"});
  // Codes of the current level, top-down.
  std::vector<std::string> level;
  const std::uint32_t top = sizes.back();
  for (std::uint32_t i = 0; i < top; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%04u", i);
    level.emplace_back(buf);
    edges.push_back({level.back(), std::string(kRootCode), ""});
  }
  for (std::size_t k = sizes.size() - 1; k-- > 0;) {
    std::vector<std::string> next;
    next.reserve(sizes[k]);
    const auto& counts = children_count[k];
    for (std::size_t g = 0; g < level.size(); ++g) {
      for (std::uint32_t c = 0; c < counts[g]; ++c) {
        next.push_back(child_code(level[g], c, counts[g]));
        edges.push_back({next.back(), level[g], ""});
      }
    }
    level = std::move(next);
  }
  return build_hierarchy(edges);
}

DatasetHandle generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  auto types = std::make_shared<const TypeHierarchy>(synthetic_hierarchy(spec));
  const TypeHierarchy& h = *types;
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);

  const NodeId outcome = h.id(spec.outcome_code);
  std::vector<NodeId> leaves;
  for (NodeId n = 0; n < h.size(); ++n) {
    if (h.is_leaf(n) && n != outcome && n != h.root()) leaves.push_back(n);
  }
  if (leaves.empty()) fail(ErrorCode::InvalidSpec, "synthetic spec yields no event leaves");
  std::vector<double> weights(leaves.size());
  {
    std::vector<std::size_t> rank(leaves.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);
    // Groups draw a popularity factor from their rank among siblings.
    std::vector<double> group(h.size(), 1.0);
    for (NodeId n = 0; n < h.size(); ++n) {
      auto kids = h.children(n);
      std::vector<std::size_t> order(kids.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k = 0; k < kids.size(); ++k) {
        group[kids[k]] = group[n] / std::pow(static_cast<double>(order[k] + 1), spec.group_skew);
      }
    }
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      weights[i] = group[*h.parent(leaves[i])] /
                   std::pow(static_cast<double>(rank[i] + 1), spec.zipf_exponent);
    }
  }
  std::discrete_distribution<std::size_t> pick_leaf(weights.begin(), weights.end());

  std::vector<std::pair<NodeId, double>> risk;
  for (const auto& r : spec.risk) {
    if (!r.code.empty()) {
      risk.emplace_back(h.id(r.code), r.odds);
      continue;
    }
    std::vector<NodeId> candidates;
    for (NodeId n = 1; n < h.size(); ++n) {
      if (h.depth(n) == r.depth && n != outcome) candidates.push_back(n);
    }
    if (candidates.empty()) fail(ErrorCode::InvalidSpec, "no node at risk depth");
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    risk.emplace_back(candidates[pick(rng)], r.odds);
  }

  if (spec.random_risk_depth > 0) {
    std::mt19937_64 risk_rng(spec.seed ^ 0x5bd1e995ULL);
    std::uniform_real_distribution<double> draw(0.0, 1.0);
    std::normal_distribution<double> log_odds(0.0, spec.random_risk_log_odds_sd);
    for (NodeId n = 1; n < h.size(); ++n) {
      if (h.depth(n) != spec.random_risk_depth || n == outcome) continue;
      if (draw(risk_rng) < spec.random_risk_fraction) risk.emplace_back(n, std::exp(log_odds(risk_rng)));
    }
  }

  std::poisson_distribution<int> extra_events(spec.mean_seq_length - 1);
  std::uniform_int_distribution<std::int32_t> start_day(0, kStartSpreadDays - 1);
  std::uniform_int_distribution<std::int32_t> offset(0, spec.record_span_days - 1);
  std::uniform_int_distribution<int> age(18, 90);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<EntityRecord> entities(spec.n_entities);
  std::vector<double> keys(spec.n_entities);
  for (std::uint32_t i = 0; i < spec.n_entities; ++i) {
    EntityRecord& e = entities[i];
    char buf[24];
    std::snprintf(buf, sizeof buf, "P%07u", i);
    e.id = buf;
    e.attributes = {static_cast<double>(age(rng)), std::string(unit(rng) < 0.5 ? "F" : "M")};
    const int n = 1 + (spec.mean_seq_length > 1 ? extra_events(rng) : 0);
    const Day start = kFirstRecordDay + start_day(rng);
    e.events.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k < n; ++k) {
      e.events.push_back({leaves[pick_leaf(rng)], start + offset(rng)});
    }
    double w = 1.0;
    for (const auto& [node, odds] : risk) {
      const bool present = std::any_of(e.events.begin(), e.events.end(),
                                       [&](const Event& ev) { return h.contains(node, ev.type); });
      if (present) w *= odds;
    }
    // Weighted sampling without replacement: the largest log(u) / w win.
    keys[i] = std::log(std::max(unit(rng), 1e-300)) / w;
  }

  const auto positives = static_cast<std::size_t>(
      std::llround(spec.outcome_prevalence * static_cast<double>(spec.n_entities)));
  std::vector<std::uint32_t> order(spec.n_entities);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return keys[a] != keys[b] ? keys[a] > keys[b] : a < b;
  });
  std::uniform_int_distribution<std::int32_t> delay(1, 180);
  for (std::size_t k = 0; k < positives && k < order.size(); ++k) {
    EntityRecord& e = entities[order[k]];
    const Day last = std::max_element(e.events.begin(), e.events.end(),
                                      [](const Event& a, const Event& b) { return a.day < b.day; })
                         ->day;
    e.events.push_back({outcome, last + delay(rng)});
  }

  std::vector<AttributeColumn> columns{{"age", AttributeKind::Numeric},
                                       {"sex", AttributeKind::Categorical}};
  return make_dataset(types, std::move(columns), std::move(entities),
                      hex_id("syn-", spec_hash(spec)));
}

SyntheticSpec aggregation_trend_spec() {
  SyntheticSpec s;
  s.n_entities = 4936;
  s.n_event_types = 13118;
  s.branching = 10;
  s.depth = 4;
  s.mean_seq_length = 151;
  s.outcome_prevalence = 0.1;
  s.zipf_exponent = 1.2;
  s.group_skew = 1.0;
  s.random_risk_depth = 2;
  s.random_risk_fraction = 1.0;
  s.random_risk_log_odds_sd = 1.0;
  s.seed = 3118;
  return s;
}

SyntheticSpec largest_query_spec() {
  SyntheticSpec s = aggregation_trend_spec();
  s.n_entities = 8360;
  s.total_nodes = 15376;
  s.mean_seq_length = 185;
  s.seed = 15376;
  return s;
}

}  // namespace hierflow
