#include "hierflow/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hierflow/error.hpp"

namespace hierflow {

double overlap(double x1, double y1, double x2, double y2, double d) {
  return std::max(0.0, d - std::hypot(x1 - x2, y1 - y2));
}

double layout_cost(std::span<const Mark> marks, std::span<const double> y, double d,
                   double alpha) {
  double overlap_sum = 0, distortion = 0;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    for (std::size_t j = 0; j < marks.size(); ++j) {
      overlap_sum += overlap(marks[i].x, y[i], marks[j].x, y[j], d);
    }
    distortion += std::abs(y[i] - marks[i].y0);
  }
  return alpha * overlap_sum + (1 - alpha) * distortion;
}

std::vector<std::size_t> mark_order(std::span<const Mark> marks) {
  std::vector<std::size_t> order(marks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (marks[a].y0 != marks[b].y0) return marks[a].y0 < marks[b].y0;
    return marks[a].code < marks[b].code;
  });
  return order;
}

std::vector<double> project_monotone(std::span<const double> values, double lo, double hi) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / double(a.count) <= b.sum / double(b.count)) break;
      Block merged{a.sum + b.sum, a.count + b.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : blocks) {
    out.insert(out.end(), b.count, std::clamp(b.sum / double(b.count), lo, hi));
  }
  return out;
}

namespace {

struct Neighbor {
  std::size_t j;
  double dx2;
  double reach;  // vertical distance below which the pair overlaps
};

constexpr double kMinGap = 1e-6;  // in mark diameters

class YOptimizer {
 public:
  YOptimizer(std::span<const Mark> marks, const OptimizeOptions& o)
      : marks_(marks), o_(o), n_(marks.size()), order_(mark_order(marks)), in_block_(n_, 0) {
    const double d2 = o.diameter * o.diameter;
    neighbors_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (i == j) continue;
        const double dx = marks[i].x - marks[j].x;
        if (dx * dx < d2) neighbors_[i].push_back({j, dx * dx, std::sqrt(d2 - dx * dx)});
      }
    }
    std::vector<double> sorted_y0(n_);
    for (std::size_t k = 0; k < n_; ++k) sorted_y0[k] = marks[order_[k]].y0;
    // Marks with distinct initial heights keep a minimal gap so that their
    // order stays strict.
    gap_.assign(n_, 0.0);
    for (std::size_t k = 0; k + 1 < n_; ++k) {
      gap_[k] = std::min(kMinGap * o.diameter, sorted_y0[k + 1] - sorted_y0[k]);
    }
    y_.resize(n_);
    pos_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      y_[order_[k]] = sorted_y0[k];
      pos_[order_[k]] = k;
    }
  }

  OptimizeResult run() {
    OptimizeResult result;
    result.order = order_;
    result.initial_cost = layout_cost(marks_, y_, o_.diameter, o_.alpha);
    const bool all_blocks = n_ <= 16;
    int it = 0;
    while (it < o_.max_iterations) {
      ++it;
      double improvement = 0;
      for (std::size_t k = 0; k < n_; ++k) improvement += shift_block(k, k);
      if (all_blocks) {
        for (std::size_t len = 2; len <= n_; ++len) {
          for (std::size_t k = 0; k + len <= n_; ++k) improvement += shift_block(k, k + len - 1);
        }
      } else {
        improvement += shift_linked_runs();
      }
      improvement += shift_stacks();
      if (improvement < o_.tolerance) break;
    }
    result.iterations = it;
    result.y = y_;
    result.cost = layout_cost(marks_, y_, o_.diameter, o_.alpha);
    return result;
  }

 private:
  // Consecutive marks (in order) that touch or are pinned together by the
  // ordering constraint form runs; sub-runs of short runs and the prefixes and
  // suffixes of long ones are shifted jointly.
  double shift_linked_runs() {
    double improvement = 0;
    std::size_t k = 0;
    while (k < n_) {
      std::size_t end = k;
      while (end + 1 < n_ && linked(end)) ++end;
      const std::size_t len = end - k + 1;
      if (len >= 2) {
        if (len <= 12) {
          for (std::size_t a = k; a <= end; ++a) {
            for (std::size_t b = a + 1; b <= end; ++b) improvement += shift_block(a, b);
          }
        } else {
          for (std::size_t b = k + 1; b <= end; ++b) improvement += shift_block(k, b);
          for (std::size_t a = k + 1; a < end; ++a) improvement += shift_block(a, end);
        }
      }
      k = end + 1;
    }
    return improvement;
  }

  bool linked(std::size_t k) const {
    const std::size_t a = order_[k], b = order_[k + 1];
    const double gap = y_[b] - y_[a];
    if (gap <= gap_[k] + 1e-12) return true;
    return gap <= o_.diameter * (1 + 1e-9);
  }

  struct Pair {
    std::size_t m;
    std::size_t j;
    double dx2;
  };

  double block_cost(double delta) const {
    double f = 0;
    for (std::size_t k : set_) {
      const std::size_t m = order_[k];
      f += (1 - o_.alpha) * std::abs(y_[m] + delta - marks_[m].y0);
    }
    const double d = o_.diameter;
    for (const Pair& p : pairs_) {
      const double dy = y_[p.m] + delta - y_[p.j];
      const double dist = std::sqrt(p.dx2 + dy * dy);
      if (dist < d) f += 2 * o_.alpha * (d - dist);
    }
    return f;
  }

  // Each mark together with the marks it touches above (or below), followed
  // transitively, is shifted jointly.
  double shift_stacks() {
    double improvement = 0;
    for (int dir : {1, -1}) {
      for (std::size_t m = 0; m < n_; ++m) {
        set_.assign(1, pos_[m]);
        for (std::size_t q = 0; q < set_.size(); ++q) {
          const std::size_t i = order_[set_[q]];
          for (const Neighbor& nb : neighbors_[i]) {
            const double dy = (y_[nb.j] - y_[i]) * dir;
            if (dy < 0 || dy > nb.reach * (1 + 1e-9)) continue;
            if (std::find(set_.begin(), set_.end(), pos_[nb.j]) == set_.end()) set_.push_back(pos_[nb.j]);
          }
        }
        if (set_.size() < 2) continue;
        std::sort(set_.begin(), set_.end());
        improvement += shift_set();
      }
    }
    return improvement;
  }

  double shift_block(std::size_t lo, std::size_t hi) {
    set_.clear();
    for (std::size_t k = lo; k <= hi; ++k) set_.push_back(k);
    return shift_set();
  }

  // Exact line search over a joint shift of the marks at the sorted order
  // positions set_. Within each piece between breakpoints the cost is concave,
  // so the minimum sits on a breakpoint or an end of the feasible interval.
  double shift_set() {
    ++stamp_;
    for (std::size_t k : set_) in_block_[order_[k]] = stamp_;
    auto member = [&](std::size_t k) { return in_block_[order_[k]] == stamp_; };
    double d_lo = -std::numeric_limits<double>::infinity();
    double d_hi = std::numeric_limits<double>::infinity();
    for (std::size_t k : set_) {
      const double y = y_[order_[k]];
      if (k == 0) d_lo = std::max(d_lo, o_.y_min - y);
      else if (!member(k - 1)) d_lo = std::max(d_lo, y_[order_[k - 1]] + gap_[k - 1] - y);
      if (k + 1 == n_) d_hi = std::min(d_hi, o_.y_max - y);
      else if (!member(k + 1)) d_hi = std::min(d_hi, y_[order_[k + 1]] - gap_[k] - y);
    }
    d_lo = std::min(0.0, d_lo);
    d_hi = std::max(0.0, d_hi);
    if (d_lo == 0 && d_hi == 0) return 0;

    pairs_.clear();
    candidates_.assign({d_lo, d_hi});
    for (std::size_t k : set_) {
      const std::size_t m = order_[k];
      candidates_.push_back(marks_[m].y0 - y_[m]);
      for (const Neighbor& nb : neighbors_[m]) {
        if (in_block_[nb.j] == stamp_) continue;
        pairs_.push_back({m, nb.j, nb.dx2});
        candidates_.push_back(y_[nb.j] - nb.reach - y_[m]);
        candidates_.push_back(y_[nb.j] + nb.reach - y_[m]);
        if (nb.dx2 == 0) candidates_.push_back(y_[nb.j] - y_[m]);
      }
    }

    const double current = block_cost(0);
    double best = current, best_delta = 0;
    for (double c : candidates_) {
      if (c < d_lo || c > d_hi || c == 0) continue;
      const double f = block_cost(c);
      if (f < best || (f == best && std::abs(c) < std::abs(best_delta))) {
        best = f;
        best_delta = c;
      }
    }
    if (!(best < current - 1e-12)) return 0;

    for (std::size_t k : set_) y_[order_[k]] += best_delta;
    // Shifting can overshoot a neighbor by an ulp; clamp back into order.
    for (std::size_t k : set_) {
      const std::size_t m = order_[k];
      y_[m] = std::max(y_[m], k > 0 ? y_[order_[k - 1]] + gap_[k - 1] : o_.y_min);
    }
    for (auto it = set_.rbegin(); it != set_.rend(); ++it) {
      const std::size_t k = *it, m = order_[k];
      y_[m] = std::min(y_[m], k + 1 < n_ ? y_[order_[k + 1]] - gap_[k] : o_.y_max);
    }
    return current - best;
  }

  std::span<const Mark> marks_;
  OptimizeOptions o_;
  std::size_t n_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<Neighbor>> neighbors_;
  std::vector<double> y_;
  std::vector<double> gap_;  // minimal y gap above each order position
  std::vector<std::uint64_t> in_block_;
  std::uint64_t stamp_ = 0;
  std::vector<std::size_t> pos_;  // order position of each mark
  std::vector<std::size_t> set_;
  std::vector<Pair> pairs_;
  std::vector<double> candidates_;
};

}  // namespace

OptimizeResult optimize_y(std::span<const Mark> marks, const OptimizeOptions& options) {
  if (!(options.alpha > 0 && options.alpha < 1)) {
    fail(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1)");
  }
  if (!(options.diameter > 0)) fail(ErrorCode::InvalidArgument, "mark diameter must be > 0");
  if (!(options.y_min <= options.y_max)) fail(ErrorCode::InvalidArgument, "y_min exceeds y_max");
  for (const Mark& m : marks) {
    if (!(m.y0 >= options.y_min && m.y0 <= options.y_max)) {
      fail(ErrorCode::OutOfBoundsInitial, "initial y of '" + m.code + "' is outside the bounds");
    }
  }
  if (marks.empty()) return {};
  YOptimizer opt(marks, options);
  OptimizeResult result = opt.run();
  return result;
}

FocusLayout focus_layout(const StatsTable& stats, const ScentMap& scents, std::string_view code,
                         const FocusOptions& options) {
  const TypeHierarchy& types = stats.types();
  const NodeId focus = types.id(code);

  auto make_mark = [&](NodeId n) {
    const EventTypeStats& s = stats[n];
    FocusMark m;
    m.node = n;
    m.code = types.code(n);
    m.label = types.label(n);
    m.depth = types.depth(n);
    m.correlation = s.correlation;
    m.prevalence = s.prevalence;
    m.seq_count = s.seq_count;
    m.scent = scents[n];
    m.leaf = types.is_leaf(n);
    return m;
  };

  FocusLayout layout;
  layout.diameter = options.diameter;
  layout.width = options.width;
  layout.height = options.height;
  layout.focus = make_mark(focus);
  for (NodeId a : types.ancestor_ids(focus)) layout.ancestors.push_back(make_mark(a));
  for (NodeId c : types.children(focus)) layout.children.push_back(make_mark(c));

  const double center = layout.focus.correlation;
  double half = 0;
  for (const auto& m : layout.ancestors) half = std::max(half, std::abs(m.correlation - center));
  for (const auto& m : layout.children) half = std::max(half, std::abs(m.correlation - center));
  half = std::max(half * (1 + options.x_padding), options.min_half_width);
  layout.x_min = center - half;
  layout.x_max = center + half;
  layout.zero_guide = 0;
  layout.focus_guide = center;
  layout.y_max = layout.focus.prevalence;

  auto to_x = [&](double rho) { return (rho - layout.x_min) / (2 * half) * options.width; };
  auto place_path = [&](FocusMark& m) {
    m.x = to_x(m.correlation);
    m.y0 = m.y = static_cast<double>(m.depth);
    m.optimized_prevalence = m.prevalence;
  };
  for (auto& m : layout.ancestors) place_path(m);
  place_path(layout.focus);

  std::vector<Mark> marks;
  for (auto& m : layout.children) {
    m.x = to_x(m.correlation);
    m.y0 = layout.y_max > 0 ? std::clamp(m.prevalence / layout.y_max, 0.0, 1.0) * options.height
                            : 0.0;
    marks.push_back({m.code, m.x, m.y0});
  }
  if (!marks.empty()) {
    OptimizeOptions o;
    o.diameter = options.diameter;
    o.alpha = options.alpha;
    o.y_min = 0;
    o.y_max = options.height;
    OptimizeResult r = optimize_y(marks, o);
    for (std::size_t i = 0; i < marks.size(); ++i) {
      layout.children[i].y = r.y[i];
      layout.children[i].optimized_prevalence =
          options.height > 0 ? r.y[i] / options.height * layout.y_max : 0.0;
    }
    layout.initial_cost = r.initial_cost;
    layout.cost = r.cost;
    layout.iterations = r.iterations;
  }
  return layout;
}

std::pair<double, double> hex_center(int q, int r, double radius) {
  return {radius * std::sqrt(3.0) * (q + r / 2.0), radius * 1.5 * r};
}

HexBinGrid hexbin(std::span<const std::pair<double, double>> points, double radius) {
  if (!(radius > 0)) fail(ErrorCode::InvalidArgument, "hex radius must be > 0");
  std::vector<std::pair<std::pair<int, int>, std::size_t>> assigned;
  assigned.reserve(points.size());
  for (const auto& [x, y] : points) {
    const double qf = (std::sqrt(3.0) / 3.0 * x - y / 3.0) / radius;
    const double rf = (2.0 / 3.0 * y) / radius;
    const double sf = -qf - rf;
    double q = std::round(qf), r = std::round(rf), s = std::round(sf);
    const double dq = std::abs(q - qf), dr = std::abs(r - rf), ds = std::abs(s - sf);
    if (dq > dr && dq > ds) {
      q = -r - s;
    } else if (dr > ds) {
      r = -q - s;
    }
    // Settle exact ties between the rounded hex and its neighbors.
    static constexpr int kOffsets[7][2] = {{0, 0}, {1, 0}, {-1, 0}, {0, 1},
                                           {0, -1}, {1, -1}, {-1, 1}};
    int best_q = 0, best_r = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& off : kOffsets) {
      const int cq = static_cast<int>(q) + off[0], cr = static_cast<int>(r) + off[1];
      auto [cx, cy] = hex_center(cq, cr, radius);
      const double dist = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (dist < best_d || (dist == best_d && std::pair(cq, cr) < std::pair(best_q, best_r))) {
        best_d = dist;
        best_q = cq;
        best_r = cr;
      }
    }
    assigned.push_back({{best_q, best_r}, 1});
  }
  std::sort(assigned.begin(), assigned.end());
  HexBinGrid grid;
  grid.radius = radius;
  grid.total = points.size();
  for (const auto& [key, one] : assigned) {
    if (!grid.bins.empty() && grid.bins.back().q == key.first && grid.bins.back().r == key.second) {
      grid.bins.back().count += one;
    } else {
      auto [cx, cy] = hex_center(key.first, key.second, radius);
      grid.bins.push_back({key.first, key.second, one, cx, cy});
    }
  }
  return grid;
}

}  // namespace hierflow
