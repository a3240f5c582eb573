#include "lpcert/geometry.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "lpcert/errors.h"

namespace lpcert {
namespace {

constexpr double kTinyCost = std::numeric_limits<double>::denorm_min();

}  // namespace

Norm Norm::P(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw InputError("lp norm needs p in (0, inf)");
  }
  return Norm(Kind::kP, p);
}

Norm Norm::Parse(std::string_view text) {
  if (text == "l0") return Zero();
  if (text == "linf" || text == "inf" || text == "Linf") return Infinity();
  if (text.size() >= 2 && (text[0] == 'l' || text[0] == 'L')) {
    double p = 0.0;
    const char* first = text.data() + 1;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, p);
    if (ec == std::errc() && ptr == last) return P(p);
  }
  throw InputError("unknown norm '" + std::string(text) +
                   "' (expected l0, l<p>, or linf)");
}

std::string Norm::ToString() const {
  switch (kind_) {
    case Kind::kZero:
      return "l0";
    case Kind::kInf:
      return "linf";
    case Kind::kP: {
      std::ostringstream os;
      os << 'l' << p_;
      return os.str();
    }
  }
  return "?";
}

void PerturbationSpec::Validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InputError("epsilon must be finite and >= 0");
  }
  if (norm.kind() == Norm::Kind::kZero && epsilon != std::floor(epsilon)) {
    throw InputError("l0 epsilon must be a whole number of features");
  }
}

double ReachBudget(const PerturbationSpec& spec) {
  const double raw = spec.norm.kind() == Norm::Kind::kP
                         ? std::pow(spec.epsilon, spec.norm.p())
                         : spec.epsilon;
  return raw * (1.0 + kBudgetSlack);
}

AxisBox::AxisBox(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  for (const Interval& iv : intervals_) {
    if (!(iv.lower < iv.upper)) throw InputError("box interval is empty");
  }
}

bool AxisBox::Contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (!intervals_[i].Contains(x[i])) return false;
  }
  return true;
}

bool AxisBox::RestrictUpper(std::size_t dim, double upper) {
  Interval& iv = intervals_[dim];
  if (upper >= iv.upper) return true;
  if (upper <= iv.lower) return false;
  iv.upper = upper;
  return true;
}

bool AxisBox::RestrictLower(std::size_t dim, double lower) {
  Interval& iv = intervals_[dim];
  if (lower <= iv.lower) return true;
  if (lower >= iv.upper) return false;
  iv.lower = lower;
  return true;
}

std::optional<AxisBox> BoxIntersect(const AxisBox& a, const AxisBox& b) {
  if (a.dimension() != b.dimension()) {
    throw InputError("box dimensions differ");
  }
  AxisBox out = a;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    if (!out.RestrictLower(i, b[i].lower) || !out.RestrictUpper(i, b[i].upper)) {
      return std::nullopt;
    }
  }
  return out;
}

double PointBoxDistance(std::span<const double> x,
                        const std::optional<AxisBox>& box, Norm norm) {
  if (!box) return kInf;
  if (x.size() != box->dimension()) throw InputError("dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gap = (*box)[i].Gap(x[i]);
    switch (norm.kind()) {
      case Norm::Kind::kZero:
        acc += gap > 0.0 ? 1.0 : 0.0;
        break;
      case Norm::Kind::kInf:
        acc = std::max(acc, gap);
        break;
      case Norm::Kind::kP:
        if (gap > 0.0) acc += std::pow(gap, norm.p());
        break;
    }
  }
  if (norm.kind() == Norm::Kind::kP) return std::pow(acc, 1.0 / norm.p());
  return acc;
}

double ReachCost(double x, const Interval& interval, Norm norm) {
  if (interval.Contains(x)) return 0.0;
  switch (norm.kind()) {
    case Norm::Kind::kZero:
      return 1.0;
    case Norm::Kind::kInf:
      return std::max(interval.Gap(x), kTinyCost);
    case Norm::Kind::kP:
      return std::max(std::pow(interval.Gap(x), norm.p()), kTinyCost);
  }
  return kInf;
}

double ReachCost(std::span<const double> x, const AxisBox& box, Norm norm) {
  if (x.size() != box.dimension()) throw InputError("dimension mismatch");
  double acc = 0.0;
  bool inside = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Interval& iv = box[i];
    if (iv.Contains(x[i])) continue;
    inside = false;
    const double gap = iv.Gap(x[i]);
    switch (norm.kind()) {
      case Norm::Kind::kZero:
        acc += 1.0;
        break;
      case Norm::Kind::kInf:
        acc = std::max(acc, gap);
        break;
      case Norm::Kind::kP:
        if (gap > 0.0) acc += std::pow(gap, norm.p());
        break;
    }
  }
  return inside ? 0.0 : std::max(acc, kTinyCost);
}

bool BallIntersectsBox(std::span<const double> x, const PerturbationSpec& spec,
                       const std::optional<AxisBox>& box) {
  if (!box) return false;
  return ReachCost(x, *box, spec.norm) <= ReachBudget(spec);
}

}  // namespace lpcert
