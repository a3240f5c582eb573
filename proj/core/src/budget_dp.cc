#include "lpcert/budget_dp.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lpcert/errors.h"
#include "lpcert/geometry.h"

namespace lpcert {

long long CostBucket(double cost, double precision) {
  const double q = std::floor(cost / precision);
  if (!(q < 9e15)) return std::numeric_limits<long long>::max();
  long long k = static_cast<long long>(q);
  // The quotient may round up onto an integer; fma gives the exact sign of
  // k * precision - cost.
  while (k > 0 && std::fma(static_cast<double>(k), precision, -cost) > 0.0) {
    --k;
  }
  while (std::fma(static_cast<double>(k + 1), precision, -cost) <= 0.0) ++k;
  return k;
}

BudgetGrid MakeBudgetGrid(double budget, double precision,
                          long long max_cells) {
  if (!(precision > 0.0) || !std::isfinite(precision)) {
    throw InputError("DP precision must be positive");
  }
  const long long cells = CostBucket(budget, precision) + 1;
  if (cells > max_cells) {
    throw ResourceError("DP grid needs " + std::to_string(cells) +
                        " cells (cap " + std::to_string(max_cells) + ")");
  }
  return BudgetGrid{precision, static_cast<int>(cells)};
}

BudgetStep::BudgetStep(std::span<const std::pair<double, double>> options,
                       const BudgetGrid& grid) {
  std::vector<Point> raw;
  raw.reserve(options.size());
  for (const auto& [cost, value] : options) {
    const long long bucket = CostBucket(cost, grid.precision);
    if (bucket < grid.cells) raw.push_back({static_cast<int>(bucket), value});
  }
  std::sort(raw.begin(), raw.end(), [](const Point& a, const Point& b) {
    return a.bucket != b.bucket ? a.bucket < b.bucket : a.value < b.value;
  });
  for (const Point& p : raw) {
    if (points_.empty() || p.value < points_.back().value) {
      if (!points_.empty() && points_.back().bucket == p.bucket) continue;
      points_.push_back(p);
    }
  }
}

DpRow InitialDpRow(const BudgetGrid& grid) {
  return DpRow(static_cast<std::size_t>(grid.cells), 0.0);
}

DpRow AccumulateFeature(const DpRow& row, const BudgetStep& step) {
  const int cells = static_cast<int>(row.size());
  DpRow out(row.size(), kInf);
  for (const BudgetStep::Point& p : step.points()) {
    // Column a (1-based) reads row[a - bucket]; valid while bucket < a.
    for (int a = p.bucket + 1; a <= cells; ++a) {
      const double v = row[a - p.bucket - 1] + p.value;
      if (v < out[a - 1]) out[a - 1] = v;
    }
  }
  return out;
}

double FinalWithFeature(const DpRow& row, const BudgetStep& step) {
  const int cells = static_cast<int>(row.size());
  double best = kInf;
  for (const BudgetStep::Point& p : step.points()) {
    if (p.bucket >= cells) break;
    best = std::min(best, row[cells - p.bucket - 1] + p.value);
  }
  return best;
}

}  // namespace lpcert
