#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hierflow/cut.hpp"
#include "hierflow/stats.hpp"

namespace hierflow {

// Overlap of two marks of diameter d: max(0, d - distance).
double overlap(double x1, double y1, double x2, double y2, double d);

struct Mark {
  std::string code;
  double x = 0;   // fixed
  double y0 = 0;  // initial position
};

struct OptimizeOptions {
  double diameter = 10;
  double alpha = 0.8;
  double y_min = 0;
  double y_max = 1;
  double tolerance = 1e-6;
  int max_iterations = 10000;
};

struct OptimizeResult {
  std::vector<double> y;       // aligned with the input marks
  std::vector<std::size_t> order;  // bottom-to-top order enforced on y
  double initial_cost = 0;
  double cost = 0;
  int iterations = 0;
};

// Layout objective: alpha times the overlap summed over all ordered pairs
// (self pairs included, each contributing d) plus (1 - alpha) times the total
// vertical displacement.
double layout_cost(std::span<const Mark> marks, std::span<const double> y, double diameter,
                   double alpha);

// Bottom-to-top order: by initial y, ties broken by code, then input index.
std::vector<std::size_t> mark_order(std::span<const Mark> marks);

// Moves marks vertically to trade overlap against displacement, keeping every
// y within [y_min, y_max] and the initial vertical order, strict between marks
// with distinct initial heights. Cyclic descent over single marks, contiguous
// runs of marks and stacks of touching marks, each step an exact line search
// over the piecewise-concave one-dimensional cost. Errors: InvalidAlpha,
// OutOfBoundsInitial, InvalidArgument.
OptimizeResult optimize_y(std::span<const Mark> marks, const OptimizeOptions& options);

// Least-squares projection of values onto non-decreasing sequences (pool
// adjacent violators), then clamped to [lo, hi].
std::vector<double> project_monotone(std::span<const double> values, double lo, double hi);

struct FocusOptions {
  double width = 600;    // child plot extent in screen units
  double height = 400;
  double diameter = 10;  // mark diameter in the same units
  double alpha = 0.8;
  double x_padding = 0.1;       // fraction added around the widest offset
  double min_half_width = 0.05; // correlation units
};

struct FocusMark {
  NodeId node = 0;
  std::string code;
  std::string label;
  std::uint32_t depth = 0;
  double correlation = 0;
  double prevalence = 0;
  std::uint64_t seq_count = 0;
  double scent = 0;
  bool leaf = false;
  double x = 0;   // screen units
  double y0 = 0;  // screen units, from prevalence (children) or depth rank (path)
  double y = 0;   // optimized screen y (children); equals y0 for path marks
  double optimized_prevalence = 0;  // y mapped back to prevalence units
};

struct FocusLayout {
  FocusMark focus;
  std::vector<FocusMark> ancestors;  // root first
  std::vector<FocusMark> children;   // input order (code order)
  double x_min = 0, x_max = 0;       // correlation domain, centered on focus
  double y_max = 0;                  // child axis maximum = focus prevalence
  double zero_guide = 0;             // guide positions in correlation units
  double focus_guide = 0;
  double diameter = 0;
  double width = 0, height = 0;
  double initial_cost = 0;
  double cost = 0;
  int iterations = 0;
};

// Focus view: the path from the root to `focus` laid out by depth, plus the
// focus's children on a prevalence axis capped at the focus prevalence with
// optimized y. Throws UnknownCode.
FocusLayout focus_layout(const StatsTable& stats, const ScentMap& scents, std::string_view focus,
                         const FocusOptions& options = {});

struct HexBin {
  int q = 0;
  int r = 0;
  std::size_t count = 0;
  double cx = 0;
  double cy = 0;
};

struct HexBinGrid {
  double radius = 0;
  std::vector<HexBin> bins;  // sorted by (q, r)
  std::size_t total = 0;
};

// Pointy-top axial hex binning; each point goes to the nearest center, ties to
// the smallest (q, r). Throws InvalidArgument when radius <= 0.
HexBinGrid hexbin(std::span<const std::pair<double, double>> points, double radius);
std::pair<double, double> hex_center(int q, int r, double radius);

}  // namespace hierflow
