#ifndef LPCERT_TRAINER_H_
#define LPCERT_TRAINER_H_

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "lpcert/budget_dp.h"
#include "lpcert/dataset.h"
#include "lpcert/geometry.h"
#include "lpcert/model.h"

namespace lpcert {

// Certified robust boosting with the exponential loss. Each new stump (or
// tree node) minimizes sum_i exp(-m_i) where m_i is a certified lower bound
// on the worst-case margin of sample i:
//   lp, p in (0, inf): the budget DP over the prior ensemble, with the new
//                      split's feature placed last;
//   linf:              the exact per-feature decomposition;
//   epsilon = 0:       the clean margin (standard boosting).
struct TrainConfig {
  PerturbationSpec perturbation;
  int rounds = 10;
  double precision = 0.01;       // DP grid step nu, in budget units
  int schedule_length = 1;       // S
  double shrinkage = 1.0;        // learning rate applied to fitted weights
  int max_depth = 5;
  int candidate_cap = 256;       // thresholds per feature
  int coord_descent_iters = 10;
  double bisection_tolerance = 1e-6;
  double weight_bound = 10.0;    // W: weights live in [-W, W]

  void Validate() const;
};

// target * min(1, t / S) with t counted from 1.
double EpsilonSchedule(double target_epsilon, int t, int schedule_length);

// Midpoints between consecutive distinct values of one feature; reduced to
// `cap` quantile-spaced midpoints when there are more.
std::vector<double> CandidateSplits(const Dataset& dataset, int feature,
                                    int cap);

// exp(-clamp(m, -50, 50)).
double ExponentialLoss(double margin);

// Per-sample constants of the fixed-split weight problem. With the split
// (j', b') fixed, the certified margin of sample i as a function of the new
// leaf weights is
//   min(left[i] + y_i * w_l, right[i] + y_i * (w_l + w_r)),
// where left/right bound the prior ensemble's margin when the adversary
// sends x to the left/right side of the split (+inf if it cannot).
struct WeightFitState {
  std::vector<double> left;
  std::vector<double> right;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  double Loss(double w_l, double w_r) const;
  // gamma_i = L(D_i - y_i * w_l), independent of w_l.
  std::vector<double> Gammas(double w_r) const;
};

double RobustMarginLowerBound(double left, double right, int label, double w_l,
                              double w_r);

struct LeafWeights {
  double w_l = 0.0;
  double w_r = 0.0;
  double loss = 0.0;
};

// Closed-form w_l for fixed w_r, clamped to [-W, W].
double OptimalLeftWeight(const WeightFitState& state, double w_r,
                         double weight_bound);

// Coordinate descent from (0, 0): closed form in w_l, derivative-sign
// bisection in w_r. A step is kept only if it does not raise the loss.
LeafWeights SolveLeafWeights(const WeightFitState& state,
                             const TrainConfig& config);

// Per-round view of the prior stump ensemble F_{T-1} over a dataset. Builds
// the bounds that feed WeightFitState for any candidate split.
class StumpRoundContext {
 public:
  StumpRoundContext(const Dataset& dataset, const StumpEnsemble& prior,
                    const PerturbationSpec& spec, double precision);

  // Precomputes the prior's bound with `feature` excluded; must precede
  // BoundsForSplit on that feature.
  void PrepareFeature(int feature);
  WeightFitState BoundsForSplit(int feature, double threshold) const;

  // Sound bound on the worst-case margin of the prior plus the stump
  // (feature, threshold, w_l, w_r) in additive form.
  double RobustMarginLowerBound(std::size_t sample, int feature,
                                double threshold, double w_l,
                                double w_r) const;

  // Current robust loss, i.e. the loss of the zero stump.
  double PriorLoss() const;

 private:
  enum class Mode { kClean, kSeparable, kDp };

  struct SampleState {
    std::vector<std::pair<int, std::vector<std::pair<double, double>>>>
        features;                    // active feature -> (cost, y*value)
    std::vector<BudgetStep> steps;   // kDp: one per active feature
    std::vector<double> reach_min;   // kSeparable/kClean: per active feature
    DpRow excluded_row;              // kDp: D with prepared feature excluded
    double excluded_sum = 0.0;       // kSeparable/kClean
    double full_bound = 0.0;
  };

  // (cost, y*value) of the prior's g^feature intervals clipped to one side
  // of the split.
  std::vector<std::pair<double, double>> SplitSideOptions(
      std::size_t sample, int feature, double threshold, bool right) const;

  const Dataset& dataset_;
  PerturbationSpec spec_;
  Mode mode_;
  double budget_ = 0.0;
  BudgetGrid grid_;
  std::map<int, FeatureAggregate> aggregates_;
  int prepared_feature_ = -1;
  std::vector<SampleState> samples_;
};

struct StumpRoundResult {
  Stump stump;
  double epsilon = 0.0;
  double prior_loss = 0.0;   // robust loss before the round
  double robust_loss = 0.0;  // after adding the (shrunk) stump
};

// One boosting round at the scheduled radius for round_index (from 1).
// Throws TrainingError if no feature has a candidate split.
StumpRoundResult FitStumpRound(const Dataset& dataset,
                               const StumpEnsemble& ensemble_so_far,
                               const TrainConfig& config, int round_index);

using RoundCallback = std::function<void(int round, double epsilon,
                                         double robust_loss, double seconds)>;

StumpEnsemble FitStumpEnsemble(const Dataset& dataset,
                               const TrainConfig& config,
                               const RoundCallback& on_round = {});

// Sum of ExponentialLoss over the certified margins used by the trainer
// (DP for lp, exact for linf, clean at epsilon = 0).
double StumpRobustLoss(const StumpEnsemble& ensemble, const Dataset& dataset,
                       const PerturbationSpec& spec, double precision);

// One split on a root-to-node path, with the side the node's region lies on.
struct PathStep {
  int feature = 0;
  double threshold = 0.0;
  bool right = false;
};

struct PathBudget {
  double epsilon = 0.0;          // residual radius, clamped at 0
  std::vector<int> crossings;    // indices into the path (the set E)
  bool reachable = true;         // false if crossing costs exceed the budget
};

// Residual budget (eps^p - sum_{t in E} |x_{j_t} - b_t|^p)^(1/p) for p in
// (0, inf).
PathBudget SampleBudget(const Sample& sample, std::span<const PathStep> path,
                        double p, double epsilon);

// Fits one tree on top of prior per-sample worst-case margins. Splits use
// each feature at most once per path.
Tree FitTree(const Dataset& dataset, std::span<const double> prior_margins,
             const TrainConfig& config);

using TreeCallback = std::function<void(int round, const Tree& tree,
                                        double robust_loss, double seconds)>;

// Boosting loop; prior margins accumulate exact single-tree worst cases at
// the target radius.
TreeEnsemble FitTreeEnsemble(const Dataset& dataset, const TrainConfig& config,
                             const TreeCallback& on_round = {},
                             std::vector<double>* final_prior_margins = nullptr);

}  // namespace lpcert

#endif  // LPCERT_TRAINER_H_
