#ifndef LPCERT_BUDGET_DP_H_
#define LPCERT_BUDGET_DP_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

// Budget-discretized dynamic program shared by the lp stump verifier and the
// robust stump trainer.
//
// Budgets live on a grid nu, 2nu, ..., P*nu, where P is the smallest integer
// with P*nu > budget. A feature option costing c falls into bucket
// floor(c / nu); using it with a column of a*nu leaves (a - bucket)*nu for the
// remaining features. Charging only floor(c / nu) * nu per feature lets the
// table under-charge each feature by less than nu, so every table entry is a
// lower bound on the true minimum and the bound is exact when all costs are
// multiples of nu.

namespace lpcert {

struct BudgetGrid {
  double precision = 0.0;  // nu
  int cells = 0;           // P
};

// Throws InputError for precision <= 0 and ResourceError when P would exceed
// max_cells.
BudgetGrid MakeBudgetGrid(double budget, double precision,
                          long long max_cells = 50'000'000);

// floor(cost / precision), exact for the stored doubles.
long long CostBucket(double cost, double precision);

// Non-increasing step function C(b) over buckets: C(b) is the smallest value
// among options whose bucket is <= b. Stored as breakpoints with strictly
// increasing bucket and strictly decreasing value. Buckets beyond the grid
// are dropped.
class BudgetStep {
 public:
  struct Point {
    int bucket;
    double value;
  };

  BudgetStep() = default;
  // options: (cost, value) pairs.
  BudgetStep(std::span<const std::pair<double, double>> options,
             const BudgetGrid& grid);

  const std::vector<Point>& points() const { return points_; }
  bool empty() const { return points_.empty(); }

 private:
  std::vector<Point> points_;
};

// One DP column per budget a = 1..P (index a-1). A fresh row is all zeros:
// no features processed.
using DpRow = std::vector<double>;

DpRow InitialDpRow(const BudgetGrid& grid);

// D'(a) = min over breakpoints s with bucket_s < a of D(a - bucket_s) +
// value_s.
DpRow AccumulateFeature(const DpRow& row, const BudgetStep& step);

// D'(P) alone, in O(#breakpoints).
double FinalWithFeature(const DpRow& row, const BudgetStep& step);

}  // namespace lpcert

#endif  // LPCERT_BUDGET_DP_H_
