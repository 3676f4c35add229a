#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "hierflow/layout.hpp"
#include "oracles.hpp"
#include "toy.hpp"

using namespace hierflow;
using toy::code_of;

namespace {

std::vector<double> xs(const std::vector<Mark>& m) {
  std::vector<double> v;
  for (const auto& k : m) v.push_back(k.x);
  return v;
}
std::vector<double> y0s(const std::vector<Mark>& m) {
  std::vector<double> v;
  for (const auto& k : m) v.push_back(k.y0);
  return v;
}

void check_feasible(const std::vector<Mark>& marks, const OptimizeResult& r,
                    const OptimizeOptions& o) {
  REQUIRE(r.y.size() == marks.size());
  for (double y : r.y) {
    CHECK(y >= o.y_min);
    CHECK(y <= o.y_max);
  }
  const auto order = mark_order(marks);
  CHECK(r.order == order);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto lo = order[k - 1], hi = order[k];
    CHECK(r.y[lo] <= r.y[hi]);
    // Distinct initial heights stay strictly ordered.
    if (marks[lo].y0 < marks[hi].y0) CHECK(r.y[lo] < r.y[hi]);
  }
}

std::vector<Mark> random_marks(std::mt19937_64& rng, std::size_t n, double x_span, double y_span) {
  std::uniform_real_distribution<double> ux(0, x_span), uy(0, y_span);
  std::vector<Mark> m;
  for (std::size_t i = 0; i < n; ++i) {
    m.push_back({"m" + std::to_string(i), std::round(ux(rng) * 4) / 4, std::round(uy(rng) * 2) / 2});
  }
  return m;
}

StatsTable focus_fixture(const TypeHierarchy& h, std::size_t n_children) {
  std::vector<EventTypeStats> rows(h.size());
  const std::size_t cohort = 10000;
  auto set = [&](NodeId n, double prevalence, double rho) {
    rows[n].node = n;
    rows[n].prevalence = prevalence;
    rows[n].seq_count = std::uint64_t(prevalence * cohort);
    rows[n].correlation = rho;
    rows[n].chi2 = rho * rho * cohort;
  };
  set(h.root(), 1.0, 0.0);
  set(h.id("F"), 0.6, 0.1);
  // All children share one low prevalence; children i, i + g and i + 2g share
  // a correlation, so each of the g groups stacks three marks at equal x.
  const std::size_t groups = std::max<std::size_t>(1, n_children / 3);
  for (std::size_t i = 0; i < n_children; ++i) {
    const double rho = 0.08 + 0.004 * double(i % groups);
    set(h.id("F." + std::to_string(100 + i)), 0.003, rho);
  }
  return StatsTable(h, cohort, rows);
}

TypeHierarchy focus_tree(std::size_t n_children) {
  std::vector<HierarchyEdge> e{{"ROOT", "", ""}, {"F", "ROOT", "Focus"}, {"G", "ROOT", "Other"}};
  for (std::size_t i = 0; i < n_children; ++i) e.push_back({"F." + std::to_string(100 + i), "F", ""});
  return build_hierarchy(e);
}

}  // namespace

TEST_CASE("overlap") {
  CHECK(overlap(0, 0, 0, 0, 10) == 10);
  CHECK(overlap(0, 0, 6, 8, 10) == 0);
  CHECK(overlap(0, 0, 0, 6, 10) == doctest::Approx(4));
  CHECK(overlap(1, 1, 4, 5, 10) == doctest::Approx(5));
  CHECK(overlap(0, 0, 30, 0, 10) == 0);
}

TEST_CASE("layout_cost matches the written-out objective") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_marks(rng, 1 + rng() % 10, 40, 60);
    std::vector<double> y = y0s(m);
    for (auto& v : y) v += double(rng() % 7) - 3;
    CHECK(layout_cost(m, y, 10, 0.8) == doctest::Approx(oracle::layout_cost(xs(m), y0s(m), y, 10, 0.8)));
  }
}

TEST_CASE("optimize_y: non-overlapping input is returned unchanged") {
  std::vector<Mark> m{{"a", 0, 5}, {"b", 0, 20}, {"c", 30, 5}, {"d", 15, 40}};
  OptimizeOptions o;
  o.y_max = 100;
  const auto r = optimize_y(m, o);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::fabs(r.y[i] - m[i].y0) <= 1e-9);
  CHECK(r.cost == doctest::Approx(r.initial_cost));
}

TEST_CASE("optimize_y: two coincident marks") {
  std::vector<Mark> m{{"b", 0, 50}, {"a", 0, 50}};
  OptimizeOptions o;
  o.y_max = 100;
  const auto r = optimize_y(m, o);
  check_feasible(m, r, o);
  CHECK(std::fabs(r.y[0] - r.y[1]) == doctest::Approx(10).epsilon(1e-6));
  // Tie order by code: "a" stays below "b".
  CHECK(r.y[1] < r.y[0]);
  const auto order = mark_order(m);
  const double grid = oracle::grid_optimum(xs(m), y0s(m), order, 10, 0.8, 0, 100, 0.5, 1e300);
  CHECK(r.cost <= grid + 1e-9);
  CHECK(r.cost == doctest::Approx(oracle::layout_cost(xs(m), y0s(m), r.y, 10, 0.8)));
}

TEST_CASE("optimize_y: three coincident marks") {
  std::vector<Mark> m{{"a", 0, 50}, {"b", 0, 50}, {"c", 0, 50}};
  OptimizeOptions o;
  o.y_max = 100;
  const auto r = optimize_y(m, o);
  check_feasible(m, r, o);
  CHECK(r.y[1] - r.y[0] == doctest::Approx(10).epsilon(1e-6));
  CHECK(r.y[2] - r.y[1] == doctest::Approx(10).epsilon(1e-6));
  CHECK(std::fabs(r.y[1] - 50) <= std::fabs(r.y[0] - 50));
  CHECK(std::fabs(r.y[1] - 50) <= std::fabs(r.y[2] - 50));
  const double grid = oracle::grid_optimum(xs(m), y0s(m), mark_order(m), 10, 0.8, 0, 100, 0.5, 1e300);
  CHECK(r.cost <= grid + 1e-9);
}

TEST_CASE("optimize_y: errors") {
  std::vector<Mark> m{{"a", 0, 5}};
  OptimizeOptions o;
  o.alpha = 0;
  CHECK(code_of([&] { optimize_y(m, o); }) == ErrorCode::InvalidAlpha);
  o.alpha = 1;
  CHECK(code_of([&] { optimize_y(m, o); }) == ErrorCode::InvalidAlpha);
  o.alpha = 0.8;
  o.y_max = 4;
  CHECK(code_of([&] { optimize_y(m, o); }) == ErrorCode::OutOfBoundsInitial);
  o.y_max = 10;
  o.diameter = 0;
  CHECK(code_of([&] { optimize_y(m, o); }) == ErrorCode::InvalidArgument);
  o.diameter = 10;
  CHECK(optimize_y(std::vector<Mark>{}, o).y.empty());
}

TEST_CASE("optimize_y: random instances keep constraints and never raise cost") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng() % 40;
    const double span = 20 + double(rng() % 200);
    auto m = random_marks(rng, n, 60, span);
    OptimizeOptions o;
    o.y_max = span;
    const auto r = optimize_y(m, o);
    check_feasible(m, r, o);
    CHECK(r.cost <= r.initial_cost + 1e-9);
    CHECK(r.initial_cost == doctest::Approx(oracle::layout_cost(xs(m), y0s(m), y0s(m), 10, 0.8)));
    CHECK(r.cost == doctest::Approx(oracle::layout_cost(xs(m), y0s(m), r.y, 10, 0.8)));
    CHECK(r.iterations <= o.max_iterations);
    const auto again = optimize_y(m, o);
    CHECK(again.y == r.y);
  }
}

TEST_CASE("optimize_y: within 2% of the grid optimum on small instances") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng() % 11;
    auto m = random_marks(rng, n, 25, 40);
    OptimizeOptions o;
    o.y_max = 40;
    const auto r = optimize_y(m, o);
    check_feasible(m, r, o);
    // Any grid layout cheaper than cost / 1.02 would fail the bound.
    const double bound = r.cost / 1.02;
    const double grid =
        oracle::grid_optimum(xs(m), y0s(m), mark_order(m), o.diameter, o.alpha, 0, 40, 0.5, bound);
    CHECK(grid >= bound);
  }
}

TEST_CASE("optimize_y: 200 marks solve quickly") {
  std::mt19937_64 rng(200);
  auto m = random_marks(rng, 200, 600, 400);
  for (std::size_t i = 0; i < 60; ++i) m[i].y0 = double(rng() % 20);
  OptimizeOptions o;
  o.y_max = 400;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = optimize_y(m, o);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  check_feasible(m, r, o);
  CHECK(r.cost < r.initial_cost);
  CHECK(ms < 200);
}

TEST_CASE("project_monotone") {
  const std::vector<double> v{3, 1, 2, 5, 4};
  const auto p = project_monotone(v, 0, 10);
  CHECK(std::is_sorted(p.begin(), p.end()));
  CHECK(p[0] == doctest::Approx(2));
  CHECK(p[3] == doctest::Approx(4.5));
  const auto clamped = project_monotone(v, 2, 4);
  for (double x : clamped) CHECK((x >= 2 && x <= 4));
}

TEST_CASE("focus_layout: clustered children separate at equal x") {
  const auto h = focus_tree(30);
  const auto stats = focus_fixture(h, 30);
  const auto scents = scent(stats);
  const auto f = focus_layout(stats, scents, "F");
  REQUIRE(f.children.size() == 30);
  CHECK(f.ancestors.size() == 1);
  CHECK(f.ancestors[0].code == "ROOT");
  CHECK(f.focus.code == "F");
  CHECK((f.x_min + f.x_max) / 2 == doctest::Approx(0.1));
  CHECK(f.zero_guide == 0.0);
  CHECK(f.focus_guide == doctest::Approx(0.1));
  CHECK(f.y_max == doctest::Approx(0.6));
  CHECK(f.cost <= f.initial_cost + 1e-9);
  for (const auto& c : f.children) {
    CHECK(c.prevalence <= f.focus.prevalence);
    CHECK(c.y >= 0);
    CHECK(c.y <= f.height);
  }
  for (std::size_t i = 0; i < f.children.size(); ++i) {
    for (std::size_t j = i + 1; j < f.children.size(); ++j) {
      const auto& a = f.children[i];
      const auto& b = f.children[j];
      if (a.x == b.x) CHECK(std::fabs(a.y - b.y) >= f.diameter - 1e-6);
      if (a.y0 < b.y0) CHECK(a.y < b.y);
      if (a.y0 > b.y0) CHECK(a.y > b.y);
    }
  }
}

TEST_CASE("focus_layout: leaf, root and unknown code") {
  const auto h = focus_tree(6);
  const auto stats = focus_fixture(h, 6);
  const auto scents = scent(stats);
  const auto leaf = focus_layout(stats, scents, "F.100");
  CHECK(leaf.children.empty());
  CHECK(leaf.focus.leaf);
  CHECK(leaf.ancestors.size() == 2);
  const auto root = focus_layout(stats, scents, "ROOT");
  CHECK(root.ancestors.empty());
  REQUIRE(root.children.size() == 2);
  CHECK(root.children[0].code == "F");
  CHECK(root.children[1].code == "G");
  CHECK(code_of([&] { focus_layout(stats, scents, "NOPE"); }) == ErrorCode::UnknownCode);
}

TEST_CASE("hexbin") {
  std::vector<std::pair<double, double>> one{{0.3, 0.4}};
  auto g = hexbin(one, 0.1);
  REQUIRE(g.bins.size() == 1);
  CHECK(g.bins[0].count == 1);

  std::vector<std::pair<double, double>> two{{0.3, 0.4}, {0.3, 0.4}};
  g = hexbin(two, 0.1);
  REQUIRE(g.bins.size() == 1);
  CHECK(g.bins[0].count == 2);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back({u(rng), u(rng)});
  g = hexbin(pts, 0.07);
  std::size_t total = 0;
  for (const auto& b : g.bins) total += b.count;
  CHECK(total == 1000);
  CHECK(g.total == 1000);
  CHECK(std::is_sorted(g.bins.begin(), g.bins.end(),
                       [](const HexBin& a, const HexBin& b) { return std::pair(a.q, a.r) < std::pair(b.q, b.r); }));
  // Each point's bin center is the nearest center among the bins around it.
  for (const auto& [x, y] : pts) {
    double best = 1e9;
    for (int q = -40; q <= 40; ++q) {
      for (int r = -40; r <= 40; ++r) {
        const auto [cx, cy] = hex_center(q, r, 0.07);
        best = std::min(best, std::hypot(x - cx, y - cy));
      }
    }
    const auto single = hexbin(std::vector<std::pair<double, double>>{{x, y}}, 0.07);
    CHECK(std::hypot(x - single.bins[0].cx, y - single.bins[0].cy) == doctest::Approx(best).epsilon(1e-9));
  }
  CHECK(code_of([&] { hexbin(one, 0); }) == ErrorCode::InvalidArgument);
}
