#pragma once

// Independent reference implementations used as test oracles. They work on
// plain parent arrays and raw counts and share no code with the engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace oracle {

// Yates chi-square as a sum over the four cells, in long double.
inline long double chi_square_cells(std::uint64_t n00, std::uint64_t n01, std::uint64_t n10,
                                    std::uint64_t n11) {
  const long double o[2][2] = {{(long double)n00, (long double)n01},
                               {(long double)n10, (long double)n11}};
  const long double row[2] = {o[0][0] + o[0][1], o[1][0] + o[1][1]};
  const long double col[2] = {o[0][0] + o[1][0], o[0][1] + o[1][1]};
  const long double n = row[0] + row[1];
  if (row[0] == 0 || row[1] == 0 || col[0] == 0 || col[1] == 0) return 0;
  long double sum = 0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const long double e = row[a] * col[b] / n;
      const long double dev = std::fabs(o[a][b] - e);
      const long double corrected = dev - std::min<long double>(0.5L, dev);
      sum += corrected * corrected / e;
    }
  }
  return sum;
}

// Random rooted tree as a parent array; node 0 is the root and parents
// precede children.
struct Tree {
  std::vector<int> parent;  // parent[0] = -1
  std::vector<std::vector<int>> children;
  std::vector<std::string> code;

  std::size_t size() const { return parent.size(); }
  bool leaf(int n) const { return children[n].empty(); }
};

inline Tree random_tree(std::mt19937_64& rng, int n, int max_children_hint) {
  Tree t;
  t.parent.assign(n, -1);
  t.children.assign(n, {});
  t.code.resize(n);
  t.code[0] = "ROOT";
  // Attach each node to a random earlier node, biased toward recent ones so
  // that depth varies.
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> near(std::max(0, i - max_children_hint * 4), i - 1);
    std::uniform_int_distribution<int> any(0, i - 1);
    const int p = (rng() % 3 == 0) ? any(rng) : near(rng);
    t.parent[i] = p;
    t.children[p].push_back(i);
    t.code[i] = "N" + std::to_string(1000000 + (rng() % 9000000)) + "_" + std::to_string(i);
  }
  return t;
}

// Informative cut by plain recursion: a node is taken when it is a leaf or
// the share of children with strictly larger value is at most r.
inline void cut_rec(const Tree& t, const std::vector<double>& chi2, double r, int n,
                    std::vector<int>& out) {
  if (t.leaf(n)) {
    out.push_back(n);
    return;
  }
  int greater = 0;
  for (int c : t.children[n]) greater += chi2[n] < chi2[c] ? 1 : 0;
  const double ratio = double(greater) / double(t.children[n].size());
  if (ratio <= r) {
    out.push_back(n);
    return;
  }
  for (int c : t.children[n]) cut_rec(t, chi2, r, c, out);
}

inline std::vector<int> informative_cut(const Tree& t, const std::vector<double>& chi2, double r) {
  std::vector<int> out;
  cut_rec(t, chi2, r, 0, out);
  return out;
}

// Maximum children spread of rho over every node in the subtree of j.
inline double scent(const Tree& t, const std::vector<double>& rho, int j) {
  double best = 0;
  std::vector<int> stack{j};
  while (!stack.empty()) {
    const int d = stack.back();
    stack.pop_back();
    if (t.children[d].size() >= 2) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int c : t.children[d]) {
        lo = std::min(lo, rho[c]);
        hi = std::max(hi, rho[c]);
      }
      best = std::max(best, hi - lo);
    }
    for (int c : t.children[d]) stack.push_back(c);
  }
  return best;
}

// Product-limit estimate evaluated directly at time t.
inline double kaplan_meier_at(const std::vector<std::pair<double, bool>>& obs, double t) {
  std::vector<double> times;
  for (const auto& [time, event] : obs)
    if (event && time <= t) times.push_back(time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  long double s = 1;
  for (double ti : times) {
    int at_risk = 0, events = 0;
    for (const auto& [time, event] : obs) {
      if (time >= ti) ++at_risk;
      if (event && time == ti) ++events;
    }
    s *= 1.0L - (long double)events / at_risk;
  }
  return double(s);
}

// Layout objective written out directly.
inline double layout_cost(const std::vector<double>& x, const std::vector<double>& y0,
                          const std::vector<double>& y, double d, double alpha) {
  double overlap = 0, distortion = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double dist = std::sqrt((x[i] - x[j]) * (x[i] - x[j]) + (y[i] - y[j]) * (y[i] - y[j]));
      overlap += std::max(0.0, d - dist);
    }
    distortion += std::fabs(y[i] - y0[i]);
  }
  return alpha * overlap + (1 - alpha) * distortion;
}

// Exhaustive search over grid positions lo + k*step that keep the marks in
// the given bottom-to-top order, pruned by branch and bound. The bound for the
// unplaced marks counts their displacement, their overlap with placed marks
// and the overlap between consecutive unplaced marks, minimized over monotone
// placements; the remaining terms are non-negative. Two partial assignments
// that agree on every placed mark still able to overlap a later one have the
// same completions, so only the cheaper one is expanded.
// Returns the best cost strictly below `bound`, or `bound` when none exists.
inline double grid_optimum(const std::vector<double>& x, const std::vector<double>& y0,
                           const std::vector<std::size_t>& order, double d, double alpha,
                           double lo, double hi, double step, double bound) {
  const std::size_t n = x.size();
  std::vector<double> grid;
  for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
  const std::size_t G = grid.size();
  const double inf = std::numeric_limits<double>::infinity();
  auto overlap_at = [&](double dx, std::size_t steps) {
    return 2 * alpha * std::max(0.0, d - std::sqrt(dx * dx + std::pow(double(steps) * step, 2)));
  };
  // pair[a][b][t]: overlap cost of order[a] and order[b] placed t grid steps
  // apart; empty when they never overlap.
  std::vector<std::vector<std::vector<double>>> pair(n, std::vector<std::vector<double>>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double dx = x[order[a]] - x[order[b]];
      if (a == b || std::fabs(dx) >= d) continue;
      for (std::size_t t = 0; t < G && overlap_at(dx, t) > 0; ++t) pair[a][b].push_back(overlap_at(dx, t));
    }
  }
  // later[k][m]: order[m] (m < k) can overlap some mark placed at or after k.
  std::vector<std::vector<bool>> later(n + 1, std::vector<bool>(n, false));
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t m = 0; m < k; ++m) {
      for (std::size_t u = k; u < n; ++u) later[k][m] = later[k][m] || !pair[m][u].empty();
    }
  }
  // cost[k][m][h]: displacement of order[m] at grid[h] plus its overlap with
  // the marks placed before depth k.
  std::vector<std::vector<std::vector<double>>> cost(
      n + 1, std::vector<std::vector<double>>(n, std::vector<double>(G, 0)));
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t h = 0; h < G; ++h) cost[0][m][h] = (1 - alpha) * std::fabs(grid[h] - y0[order[m]]);
  }
  std::vector<std::size_t> gi(n, 0);
  std::vector<double> prev(G), cur(G);
  double best = bound;
  std::unordered_map<std::string, double> seen;
  auto key = [&](std::size_t k, std::size_t g) {
    std::string s(1, char(k));
    s.push_back(char(g & 0xff));
    s.push_back(char(g >> 8));
    for (std::size_t m = 0; m < k; ++m) {
      if (later[k][m] && grid[gi[m]] > grid[g] - d) {
        s.push_back(char(m));
        s.push_back(char(gi[m] & 0xff));
        s.push_back(char(gi[m] >> 8));
      }
    }
    return s;
  };
  auto chain_bound = [&](std::size_t k, std::size_t g) {
    const auto& c = cost[k];
    for (std::size_t m = k; m < n; ++m) {
      double run = inf, far = inf;
      const auto& w = pair[m > 0 ? m - 1 : 0][m];
      for (std::size_t h = g; h < G; ++h) {
        double from;
        if (m == k) {
          from = 0;
        } else if (w.empty()) {
          run = std::min(run, prev[h]);
          from = run;
        } else {
          if (h >= g + w.size()) far = std::min(far, prev[h - w.size()]);
          from = far;
          for (std::size_t t = 0; t < w.size() && t + g <= h; ++t) from = std::min(from, prev[h - t] + w[t]);
        }
        cur[h] = c[m][h] + from;
      }
      std::swap(prev, cur);
    }
    return *std::min_element(prev.begin() + std::ptrdiff_t(g), prev.end());
  };
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t k, std::size_t gmin,
                                                                   double partial) {
    if (k == n) {
      best = std::min(best, partial);
      return;
    }
    if (k > 0) {
      auto [it, fresh] = seen.try_emplace(key(k, gmin), partial);
      if (!fresh) {
        if (it->second <= partial) return;
        it->second = partial;
      }
    }
    const std::size_t i = order[k];
    for (std::size_t g = gmin; g < G; ++g) {
      const double yi = grid[g];
      const double add = cost[k][k][g];
      double rest = 0;
      for (std::size_t m = k + 1; m < n; ++m) rest += (1 - alpha) * std::max(0.0, yi - y0[order[m]]);
      // Without the overlap term the bound grows with yi once the mark is
      // above its own target, so no higher grid point can do better.
      if (yi >= y0[i] && partial + (1 - alpha) * (yi - y0[i]) + rest >= best) break;
      if (partial + add + rest >= best) continue;
      gi[k] = g;
      for (std::size_t m = k + 1; m < n; ++m) {
        const auto& w = pair[k][m];
        auto& next = cost[k + 1][m];
        const auto& here = cost[k][m];
        for (std::size_t h = g; h < G; ++h) {
          const std::size_t t = h - g;
          next[h] = here[h] + (t < w.size() ? w[t] : 0.0);
        }
      }
      if (k + 1 < n && partial + add + chain_bound(k + 1, g) >= best) continue;
      rec(k + 1, g, partial + add);
    }
  };
  rec(0, 0, alpha * double(n) * d);
  return best;
}

}  // namespace oracle
