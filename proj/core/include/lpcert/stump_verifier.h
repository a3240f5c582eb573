#ifndef LPCERT_STUMP_VERIFIER_H_
#define LPCERT_STUMP_VERIFIER_H_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "lpcert/budget_dp.h"
#include "lpcert/geometry.h"
#include "lpcert/model.h"

namespace lpcert {

// Outcome of verifying one sample. margin_lower_bound bounds
// min over the ball of y * F(x + delta) from below; it is exact when
// `complete` is set.
struct VerificationResult {
  double margin_lower_bound = 0.0;
  bool robust = false;
  bool complete = false;

  static VerificationResult Make(double margin, bool complete) {
    return {margin, margin > 0.0, complete};
  }
};

// Options for one feature as seen from a sample: every interval of the
// feature's aggregate with its reach cost and label-signed value y * v.
struct FeatureOptions {
  int feature = 0;
  double clean_value = 0.0;  // y * g(x_j)
  std::vector<std::pair<double, double>> options;  // (cost, y * value)
};

std::vector<FeatureOptions> CollectFeatureOptions(
    const std::map<int, FeatureAggregate>& aggregates, const Sample& sample,
    Norm norm);

// Exact l0 verification: the adversary may change up to k features.
VerificationResult VerifyL0(const StumpEnsemble& ensemble,
                            const Sample& sample, int k);

// Exact linf verification; features decouple.
VerificationResult VerifyLinf(const StumpEnsemble& ensemble,
                              const Sample& sample, double epsilon);

// DP table of the sound lp verifier. rows[j] holds D(a*nu, j+1) for a =
// 1..cells after processing the first j+1 active features (in increasing
// feature order).
struct DpGrid {
  double precision = 0.0;
  int cells = 0;
  std::vector<int> features;
  std::vector<DpRow> rows;

  double Final() const { return rows.empty() ? 0.0 : rows.back().back(); }
};

DpGrid BuildDpGrid(const StumpEnsemble& ensemble, const Sample& sample,
                   double p, double epsilon, double precision);

// Sound, incomplete lp verification for p in (0, inf).
VerificationResult VerifyLpDp(const StumpEnsemble& ensemble,
                              const Sample& sample, double p, double epsilon,
                              double precision);

// Exact lp verification by branch and bound over one interval per feature.
// Throws ResourceError if the product of per-feature reachable interval
// counts exceeds max_combinations.
VerificationResult VerifyLpExact(const StumpEnsemble& ensemble,
                                 const Sample& sample, double p,
                                 double epsilon,
                                 double max_combinations = 1e7);

// Any norm: dispatches l0 / linf / lp-exact. Convenience for callers that
// hold a PerturbationSpec.
VerificationResult VerifyStumpsExact(const StumpEnsemble& ensemble,
                                     const Sample& sample,
                                     const PerturbationSpec& spec);

// Verification instance encoding a 0-1 knapsack decision problem: the
// sample is non-robust iff some subset has weight <= capacity and value >=
// target.
struct KnapsackInstance {
  StumpEnsemble ensemble;
  Sample sample;
  double epsilon = 0.0;
};

KnapsackInstance BuildKnapsackInstance(std::span<const double> weights,
                                       std::span<const double> values,
                                       double capacity, double target,
                                       double p);

}  // namespace lpcert

#endif  // LPCERT_STUMP_VERIFIER_H_
