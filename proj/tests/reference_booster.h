// Plain greedy exponential-loss boosting on clean margins, used as the
// reference for the robust trainer at radius zero.

#ifndef LPCERT_TESTS_REFERENCE_BOOSTER_H_
#define LPCERT_TESTS_REFERENCE_BOOSTER_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "lpcert/trainer.h"

namespace lpcert::testing {

// Standard boosting reference: with the clean margin, each sample sits on
// one side and the loss separates into one term per leaf value. The weights
// are bounded as |left| <= W and |right - left| <= W.
struct ReferenceStump {
  int feature = -1;
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;
  double loss = std::numeric_limits<double>::infinity();
};

inline std::pair<double, double> BestSide(double pos, double neg,
                                          double bound) {
  double v = 0.0;
  if (pos > 0.0 && neg > 0.0) {
    v = std::clamp(0.5 * std::log(pos / neg), -bound, bound);
  } else if (pos > 0.0) {
    v = bound;
  } else if (neg > 0.0) {
    v = -bound;
  }
  return {v, pos * std::exp(-v) + neg * std::exp(v)};
}

// Minimizes pos_l e^-l + neg_l e^l + pos_r e^-r + neg_r e^r over the bounded
// set by golden-section search on l, with r solved in closed form.
inline ReferenceStump BestPair(double pos_l, double neg_l, double pos_r,
                               double neg_r, double bound) {
  const auto side = [](double pos, double neg, double v) {
    return pos * std::exp(-v) + neg * std::exp(v);
  };
  const double free_r = BestSide(pos_r, neg_r, 2.0 * bound).first;
  const auto right_for = [&](double l) {
    return std::clamp(free_r, l - bound, l + bound);
  };
  const auto total = [&](double l) {
    return side(pos_l, neg_l, l) + side(pos_r, neg_r, right_for(l));
  };
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -bound, hi = bound;
  for (int it = 0; it < 200; ++it) {
    const double a = hi - ratio * (hi - lo);
    const double b = lo + ratio * (hi - lo);
    if (total(a) <= total(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  double l = 0.5 * (lo + hi);
  for (double edge : {-bound, bound}) {
    if (total(edge) < total(l)) l = edge;
  }
  ReferenceStump out;
  out.left = l;
  out.right = right_for(l);
  out.loss = total(l);
  return out;
}

inline ReferenceStump ReferenceCleanStump(const Dataset& data,
                                          const std::vector<double>& margins,
                                          const std::vector<int>& rows,
                                          const std::vector<int>& allowed,
                                          int cap, double bound) {
  ReferenceStump best;
  for (int j : allowed) {
    for (double b : CandidateSplits(data, j, cap)) {
      double lp = 0, ln = 0, rp = 0, rn = 0;
      for (int i : rows) {
        const Sample& s = data.samples[i];
        const double w = std::exp(-margins[i]);
        const bool right = s.features[j] >= b;
        (right ? (s.label > 0 ? rp : rn) : (s.label > 0 ? lp : ln)) += w;
      }
      ReferenceStump pair = BestPair(lp, ln, rp, rn, bound);
      if (pair.loss < best.loss) {
        pair.feature = j;
        pair.threshold = b;
        best = pair;
      }
    }
  }
  return best;
}

}  // namespace lpcert::testing

#endif  // LPCERT_TESTS_REFERENCE_BOOSTER_H_
