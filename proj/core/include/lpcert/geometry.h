#ifndef LPCERT_GEOMETRY_H_
#define LPCERT_GEOMETRY_H_

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lpcert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative slack applied to every perturbation budget. It widens the
// adversary's reach by a hair so that boundary cases such as
// sum_i (w_i^(1/p))^p == C survive floating-point rounding; a wider reach
// keeps every "robust" verdict valid.
inline constexpr double kBudgetSlack = 1e-9;

class Norm {
 public:
  enum class Kind { kZero, kP, kInf };

  static Norm Zero() { return Norm(Kind::kZero, 0.0); }
  static Norm P(double p);
  static Norm Infinity() { return Norm(Kind::kInf, kInf); }
  // Accepts "l0", "linf", "inf", or "l<p>" such as "l1", "l2", "l1.5".
  static Norm Parse(std::string_view text);

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  std::string ToString() const;

  friend bool operator==(const Norm&, const Norm&) = default;

 private:
  Norm(Kind kind, double p) : kind_(kind), p_(p) {}

  Kind kind_;
  double p_;
};

// Norm plus radius. For l0 the radius is a whole number of features.
struct PerturbationSpec {
  Norm norm = Norm::Infinity();
  double epsilon = 0.0;

  void Validate() const;
};

// Budget in "cost units": eps^p for lp, eps for l0 and linf. Includes
// kBudgetSlack.
double ReachBudget(const PerturbationSpec& spec);

// One side-open coordinate interval [lower, upper). A point sitting on a
// threshold is routed right, so it belongs to the interval whose lower end
// is that threshold.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  bool Contains(double v) const { return lower <= v && v < upper; }
  // Distance from v to the closure [lower, upper].
  double Gap(double v) const {
    if (v < lower) return lower - v;
    if (v > upper) return v - upper;
    return 0.0;
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Axis-aligned box, one interval per dimension. Never empty: operations that
// can produce an empty box return std::nullopt.
class AxisBox {
 public:
  AxisBox() = default;
  // Unbounded box in `dimension` dimensions.
  explicit AxisBox(std::size_t dimension) : intervals_(dimension) {}
  // Throws InputError if some interval has lower >= upper.
  explicit AxisBox(std::vector<Interval> intervals);

  std::size_t dimension() const { return intervals_.size(); }
  const Interval& operator[](std::size_t i) const { return intervals_[i]; }
  const std::vector<Interval>& intervals() const { return intervals_; }

  bool Contains(std::span<const double> x) const;

  // Tightens one coordinate; returns false (and leaves the box unchanged) if
  // that would make it empty.
  bool RestrictUpper(std::size_t dim, double upper);
  bool RestrictLower(std::size_t dim, double lower);

  friend bool operator==(const AxisBox&, const AxisBox&) = default;

 private:
  std::vector<Interval> intervals_;
};

std::optional<AxisBox> BoxIntersect(const AxisBox& a, const AxisBox& b);

// Minimum distance from x to the closure of box; +inf for an empty box. For
// l0 this is the number of coordinates outside the closed interval.
double PointBoxDistance(std::span<const double> x,
                        const std::optional<AxisBox>& box, Norm norm);

// Cost (in ReachBudget units) for an adversary starting at x to land inside
// box: 0 if x is already inside, otherwise the closure cost with a floor of
// the smallest positive double so that it is never reachable with a zero
// budget. For l0 the cost counts coordinates outside the half-open interval.
double ReachCost(std::span<const double> x, const AxisBox& box, Norm norm);

// Same for a single coordinate.
double ReachCost(double x, const Interval& interval, Norm norm);

// True iff the perturbation ball around x meets the box.
bool BallIntersectsBox(std::span<const double> x, const PerturbationSpec& spec,
                       const std::optional<AxisBox>& box);

}  // namespace lpcert

#endif  // LPCERT_GEOMETRY_H_
