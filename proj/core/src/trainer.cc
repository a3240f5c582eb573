#include "lpcert/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "lpcert/errors.h"
#include "lpcert/stump_verifier.h"
#include "lpcert/tree_verifier.h"

namespace lpcert {
namespace {

constexpr double kLossClamp = 50.0;
constexpr double kMinImprovement = 1e-9;
constexpr int kMaxBisectionSteps = 60;

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

double ClampWeight(double w, double bound) {
  return std::clamp(w, -bound, bound);
}

// Right derivative of the loss in w_r at fixed w_l. A sample contributes
// only while its right-leaf branch attains the min and the loss argument
// sits inside the clamp window.
double RightDerivative(const WeightFitState& state, double w_l, double w_r) {
  double d = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double y = state.labels[i];
    const double m_left = state.left[i] + y * w_l;
    const double m_right = state.right[i] + y * (w_l + w_r);
    const bool right_active = m_right < m_left || (m_right == m_left && y < 0);
    if (!right_active || std::abs(m_right) >= kLossClamp) continue;
    d -= y * std::exp(-m_right);
  }
  return d;
}

// Bisects on the right-derivative sign of the profile
// w_r -> min_{w_l} Loss(w_l, w_r), re-solving w_l in closed form at each probe.
double BisectRightWeight(const WeightFitState& state,
                         const TrainConfig& config) {
  const double bound = config.weight_bound;
  const auto slope = [&](double w_r) {
    return RightDerivative(state, OptimalLeftWeight(state, w_r, bound), w_r);
  };
  double lo = -bound;
  double hi = bound;
  if (slope(lo) >= 0.0) return lo;
  if (slope(hi) < 0.0) return hi;
  for (int step = 0; step < kMaxBisectionSteps &&
                     hi - lo > config.bisection_tolerance;
       ++step) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ClosedFormLeaf(std::span<const int> labels,
                      std::span<const double> prior, double weight_bound) {
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] > 0 ? pos : neg) += ExponentialLoss(prior[i]);
  }
  if (pos == 0.0 && neg == 0.0) return 0.0;
  if (neg == 0.0) return weight_bound;
  if (pos == 0.0) return -weight_bound;
  return ClampWeight(0.5 * std::log(pos / neg), weight_bound);
}

std::vector<std::vector<double>> AllCandidates(const Dataset& dataset,
                                               int cap) {
  std::vector<std::vector<double>> out(dataset.dimension);
  for (std::size_t j = 0; j < dataset.dimension; ++j) {
    out[j] = CandidateSplits(dataset, static_cast<int>(j), cap);
  }
  return out;
}

StumpRoundResult FitStumpRoundWith(
    const Dataset& dataset, const StumpEnsemble& ensemble_so_far,
    const TrainConfig& config, int round_index,
    const std::vector<std::vector<double>>& candidates) {
  const double epsilon = EpsilonSchedule(config.perturbation.epsilon,
                                         round_index, config.schedule_length);
  const PerturbationSpec spec{config.perturbation.norm, epsilon};
  StumpRoundContext context(dataset, ensemble_so_far, spec, config.precision);

  bool found = false;
  int best_feature = 0;
  double best_threshold = 0.0;
  LeafWeights best;
  WeightFitState best_state;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (candidates[j].empty()) continue;
    const int feature = static_cast<int>(j);
    context.PrepareFeature(feature);
    for (double threshold : candidates[j]) {
      WeightFitState state = context.BoundsForSplit(feature, threshold);
      const LeafWeights w = SolveLeafWeights(state, config);
      if (!found || w.loss < best.loss) {
        found = true;
        best_feature = feature;
        best_threshold = threshold;
        best = w;
        best_state = std::move(state);
      }
    }
  }
  if (!found) throw TrainingError("no feature has a candidate split");

  const double lr = config.shrinkage;
  StumpRoundResult result;
  result.stump = Stump{best_feature, best_threshold, lr * best.w_l,
                       lr * (best.w_l + best.w_r)};
  result.epsilon = epsilon;
  result.prior_loss = context.PriorLoss();
  result.robust_loss = best_state.Loss(lr * best.w_l, lr * best.w_r);
  return result;
}

}  // namespace

void TrainConfig::Validate() const {
  perturbation.Validate();
  if (perturbation.norm.kind() == Norm::Kind::kZero &&
      perturbation.epsilon > 0.0) {
    throw InputError("robust training supports lp (p > 0) and linf norms");
  }
  if (rounds < 0) throw InputError("rounds must be >= 0");
  if (!(precision > 0.0)) throw InputError("precision must be > 0");
  if (schedule_length < 1) throw InputError("schedule length must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) {
    throw InputError("shrinkage must lie in (0, 1]");
  }
  if (max_depth < 1) throw InputError("max depth must be >= 1");
  if (candidate_cap < 1) throw InputError("candidate cap must be >= 1");
  if (coord_descent_iters < 1) {
    throw InputError("coordinate descent needs >= 1 iteration");
  }
  if (!(bisection_tolerance > 0.0)) {
    throw InputError("bisection tolerance must be > 0");
  }
  if (!(weight_bound > 0.0)) throw InputError("weight bound must be > 0");
}

double EpsilonSchedule(double target_epsilon, int t, int schedule_length) {
  if (schedule_length < 1) throw InputError("schedule length must be >= 1");
  return target_epsilon *
         std::min(1.0, static_cast<double>(t) / schedule_length);
}

std::vector<double> CandidateSplits(const Dataset& dataset, int feature,
                                    int cap) {
  if (dataset.empty()) throw InputError("dataset is empty");
  if (cap < 1) throw InputError("candidate cap must be >= 1");
  std::vector<double> values;
  values.reserve(dataset.size());
  for (const Sample& s : dataset.samples) values.push_back(s.features[feature]);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> mids;
  mids.reserve(values.empty() ? 0 : values.size() - 1);
  for (std::size_t i = 1; i < values.size(); ++i) {
    mids.push_back(values[i - 1] + 0.5 * (values[i] - values[i - 1]));
  }
  const auto n = mids.size();
  const auto c = static_cast<std::size_t>(cap);
  if (n <= c) return mids;
  std::vector<double> picked;
  picked.reserve(c);
  for (std::size_t k = 0; k < c; ++k) {
    picked.push_back(mids[(2 * k + 1) * n / (2 * c)]);
  }
  return picked;
}

double ExponentialLoss(double margin) {
  return std::exp(-std::clamp(margin, -kLossClamp, kLossClamp));
}

double RobustMarginLowerBound(double left, double right, int label, double w_l,
                              double w_r) {
  const double y = label;
  return std::min(left + y * w_l, right + y * (w_l + w_r));
}

double WeightFitState::Loss(double w_l, double w_r) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    sum += ExponentialLoss(
        RobustMarginLowerBound(left[i], right[i], labels[i], w_l, w_r));
  }
  return sum;
}

std::vector<double> WeightFitState::Gammas(double w_r) const {
  std::vector<double> gammas(size());
  for (std::size_t i = 0; i < size(); ++i) {
    gammas[i] = ExponentialLoss(
        RobustMarginLowerBound(left[i], right[i], labels[i], 0.0, w_r));
  }
  return gammas;
}

double OptimalLeftWeight(const WeightFitState& state, double w_r,
                         double weight_bound) {
  const std::vector<double> gammas = state.Gammas(w_r);
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    (state.labels[i] > 0 ? pos : neg) += gammas[i];
  }
  if (pos == 0.0 && neg == 0.0) return 0.0;
  if (neg == 0.0) return weight_bound;
  if (pos == 0.0) return -weight_bound;
  return ClampWeight(0.5 * std::log(pos / neg), weight_bound);
}

LeafWeights SolveLeafWeights(const WeightFitState& state,
                             const TrainConfig& config) {
  LeafWeights w{0.0, 0.0, state.Loss(0.0, 0.0)};
  for (int iter = 0; iter < config.coord_descent_iters; ++iter) {
    const double before = w.loss;

    const double w_l = OptimalLeftWeight(state, w.w_r, config.weight_bound);
    const double loss_l = state.Loss(w_l, w.w_r);
    if (loss_l < w.loss) {
      w.w_l = w_l;
      w.loss = loss_l;
    }

    const double w_r = BisectRightWeight(state, config);
    const double w_l_at_r = OptimalLeftWeight(state, w_r, config.weight_bound);
    const double loss_r = state.Loss(w_l_at_r, w_r);
    if (loss_r < w.loss) {
      w.w_l = w_l_at_r;
      w.w_r = w_r;
      w.loss = loss_r;
    }

    if (before - w.loss < kMinImprovement) break;
  }
  return w;
}

StumpRoundContext::StumpRoundContext(const Dataset& dataset,
                                     const StumpEnsemble& prior,
                                     const PerturbationSpec& spec,
                                     double precision)
    : dataset_(dataset), spec_(spec) {
  spec_.Validate();
  if (prior.dimension != dataset.dimension) {
    throw InputError("model and dataset dimensions differ");
  }
  if (spec.epsilon == 0.0) {
    mode_ = Mode::kClean;
  } else if (spec.norm.kind() == Norm::Kind::kInf) {
    mode_ = Mode::kSeparable;
  } else if (spec.norm.kind() == Norm::Kind::kP) {
    mode_ = Mode::kDp;
  } else {
    throw InputError("robust training supports lp (p > 0) and linf norms");
  }
  budget_ = mode_ == Mode::kClean ? 0.0 : ReachBudget(spec);
  if (mode_ == Mode::kDp) grid_ = MakeBudgetGrid(budget_, precision);

  aggregates_ = AggregateFeatures(prior);
  samples_.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    SampleState& s = samples_[i];
    for (FeatureOptions& f :
         CollectFeatureOptions(aggregates_, dataset.samples[i], spec.norm)) {
      s.features.emplace_back(f.feature, std::move(f.options));
    }
    if (mode_ == Mode::kDp) {
      DpRow row = InitialDpRow(grid_);
      for (const auto& [feature, options] : s.features) {
        s.steps.emplace_back(options, grid_);
        row = AccumulateFeature(row, s.steps.back());
      }
      s.full_bound = row.back();
    } else {
      for (const auto& [feature, options] : s.features) {
        double lowest = kInf;
        for (const auto& [cost, value] : options) {
          if (cost <= budget_) lowest = std::min(lowest, value);
        }
        s.reach_min.push_back(lowest);
        s.full_bound += lowest;
      }
    }
  }
}

void StumpRoundContext::PrepareFeature(int feature) {
  for (SampleState& s : samples_) {
    if (mode_ == Mode::kDp) {
      DpRow row = InitialDpRow(grid_);
      for (std::size_t k = 0; k < s.features.size(); ++k) {
        if (s.features[k].first != feature) {
          row = AccumulateFeature(row, s.steps[k]);
        }
      }
      s.excluded_row = std::move(row);
    } else {
      double sum = 0.0;
      for (std::size_t k = 0; k < s.features.size(); ++k) {
        if (s.features[k].first != feature) sum += s.reach_min[k];
      }
      s.excluded_sum = sum;
    }
  }
  prepared_feature_ = feature;
}

std::vector<std::pair<double, double>> StumpRoundContext::SplitSideOptions(
    std::size_t sample, int feature, double threshold, bool right) const {
  const Sample& x = dataset_.samples[sample];
  const double xj = x.features[feature];
  const double y = x.label;
  std::vector<std::pair<double, double>> out;
  const auto add = [&](Interval piece, double value) {
    if (right) {
      piece.lower = std::max(piece.lower, threshold);
    } else {
      piece.upper = std::min(piece.upper, threshold);
    }
    if (!(piece.lower < piece.upper)) return;
    out.emplace_back(ReachCost(xj, piece, spec_.norm), y * value);
  };
  const auto it = aggregates_.find(feature);
  if (it == aggregates_.end()) {
    add(Interval{}, 0.0);
  } else {
    const FeatureAggregate& agg = it->second;
    for (std::size_t t = 0; t < agg.interval_values.size(); ++t) {
      add(Interval{agg.Lower(t), agg.Upper(t)}, agg.interval_values[t]);
    }
  }
  return out;
}

WeightFitState StumpRoundContext::BoundsForSplit(int feature,
                                                 double threshold) const {
  if (feature != prepared_feature_) {
    throw InputError("BoundsForSplit on a feature that was not prepared");
  }
  WeightFitState state;
  state.left.resize(samples_.size());
  state.right.resize(samples_.size());
  state.labels.resize(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const SampleState& s = samples_[i];
    state.labels[i] = dataset_.samples[i].label;
    for (bool right : {false, true}) {
      const auto options = SplitSideOptions(i, feature, threshold, right);
      double bound = kInf;
      if (mode_ == Mode::kDp) {
        bound = FinalWithFeature(s.excluded_row, BudgetStep(options, grid_));
      } else {
        double lowest = kInf;
        for (const auto& [cost, value] : options) {
          if (cost <= budget_) lowest = std::min(lowest, value);
        }
        bound = s.excluded_sum + lowest;
      }
      (right ? state.right : state.left)[i] = bound;
    }
  }
  return state;
}

double StumpRoundContext::RobustMarginLowerBound(std::size_t sample,
                                                 int feature, double threshold,
                                                 double w_l,
                                                 double w_r) const {
  if (feature != prepared_feature_) {
    throw InputError("RobustMarginLowerBound on an unprepared feature");
  }
  const SampleState& s = samples_[sample];
  double sides[2];
  for (bool right : {false, true}) {
    const auto options = SplitSideOptions(sample, feature, threshold, right);
    if (mode_ == Mode::kDp) {
      sides[right] = FinalWithFeature(s.excluded_row, BudgetStep(options, grid_));
    } else {
      double lowest = kInf;
      for (const auto& [cost, value] : options) {
        if (cost <= budget_) lowest = std::min(lowest, value);
      }
      sides[right] = s.excluded_sum + lowest;
    }
  }
  return lpcert::RobustMarginLowerBound(sides[0], sides[1],
                                        dataset_.samples[sample].label, w_l,
                                        w_r);
}

double StumpRoundContext::PriorLoss() const {
  double sum = 0.0;
  for (const SampleState& s : samples_) sum += ExponentialLoss(s.full_bound);
  return sum;
}

StumpRoundResult FitStumpRound(const Dataset& dataset,
                               const StumpEnsemble& ensemble_so_far,
                               const TrainConfig& config, int round_index) {
  config.Validate();
  if (dataset.empty()) throw TrainingError("training set is empty");
  return FitStumpRoundWith(dataset, ensemble_so_far, config, round_index,
                           AllCandidates(dataset, config.candidate_cap));
}

StumpEnsemble FitStumpEnsemble(const Dataset& dataset,
                               const TrainConfig& config,
                               const RoundCallback& on_round) {
  config.Validate();
  if (dataset.empty()) throw TrainingError("training set is empty");
  const auto candidates = AllCandidates(dataset, config.candidate_cap);
  StumpEnsemble ensemble;
  ensemble.dimension = dataset.dimension;
  for (int round = 1; round <= config.rounds; ++round) {
    const auto start = std::chrono::steady_clock::now();
    StumpRoundResult r =
        FitStumpRoundWith(dataset, ensemble, config, round, candidates);
    ensemble.stumps.push_back(r.stump);
    if (on_round) on_round(round, r.epsilon, r.robust_loss, Seconds(start));
  }
  return ensemble;
}

double StumpRobustLoss(const StumpEnsemble& ensemble, const Dataset& dataset,
                       const PerturbationSpec& spec, double precision) {
  spec.Validate();
  double sum = 0.0;
  for (const Sample& s : dataset.samples) {
    double margin = 0.0;
    if (spec.epsilon == 0.0) {
      margin = s.label * EvaluateStumpEnsemble(ensemble, s.features);
    } else if (spec.norm.kind() == Norm::Kind::kP) {
      margin = VerifyLpDp(ensemble, s, spec.norm.p(), spec.epsilon, precision)
                   .margin_lower_bound;
    } else {
      margin = VerifyStumpsExact(ensemble, s, spec).margin_lower_bound;
    }
    sum += ExponentialLoss(margin);
  }
  return sum;
}

PathBudget SampleBudget(const Sample& sample, std::span<const PathStep> path,
                        double p, double epsilon) {
  if (!(p > 0.0) || !std::isfinite(p)) throw InputError("p must be in (0, inf)");
  PathBudget out;
  double used = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const PathStep& step = path[t];
    const double xj = sample.features[step.feature];
    if ((xj >= step.threshold) != step.right) {
      out.crossings.push_back(static_cast<int>(t));
      used += std::pow(std::abs(xj - step.threshold), p);
    }
  }
  const double total = std::pow(epsilon, p);
  out.reachable = used <= total * (1.0 + kBudgetSlack);
  out.epsilon = used >= total ? 0.0 : std::pow(total - used, 1.0 / p);
  return out;
}

namespace {

class TreeFitter {
 public:
  TreeFitter(const Dataset& dataset, std::span<const double> prior,
             const TrainConfig& config)
      : dataset_(dataset),
        prior_(prior),
        config_(config),
        candidates_(AllCandidates(dataset, config.candidate_cap)) {}

  Tree Fit() {
    std::vector<int> used;
    return Build(AxisBox(dataset_.dimension), used, 1, 0.0, true);
  }

 private:
  struct Reach {
    std::size_t index;
    double residual;  // budget left for the next split, in cost units
  };

  // Cost of moving x_j across to one side of the split, or 0 if already
  // there.
  double CrossCost(double xj, double threshold, bool right) const {
    const Interval side = right ? Interval{threshold, kInf}
                                : Interval{-kInf, threshold};
    return ReachCost(xj, side, config_.perturbation.norm);
  }

  Tree Build(AxisBox box, std::vector<int>& used, int depth, double fallback,
             bool is_root) {
    const double epsilon = EpsilonSchedule(config_.perturbation.epsilon, depth,
                                           config_.schedule_length);
    const PerturbationSpec spec{config_.perturbation.norm, epsilon};
    const double budget = epsilon == 0.0 ? 0.0 : ReachBudget(spec);
    const bool additive = spec.norm.kind() == Norm::Kind::kP;

    std::vector<Reach> reach;
    std::vector<int> labels;
    std::vector<double> prior;
    for (std::size_t i = 0; i < dataset_.size(); ++i) {
      const double cost = ReachCost(dataset_.samples[i].features, box, spec.norm);
      if (cost > budget) continue;
      reach.push_back({i, additive ? budget - cost : budget});
      labels.push_back(dataset_.samples[i].label);
      prior.push_back(prior_[i]);
    }
    if (reach.empty()) {
      if (is_root) throw TrainingError("no training sample reaches the root");
      return Tree::Leaf(fallback);
    }
    const double lr = config_.shrinkage;
    const bool single_class =
        std::all_of(labels.begin(), labels.end(),
                    [&](int y) { return y == labels.front(); });
    if (single_class) {
      return Tree::Leaf(lr * ClosedFormLeaf(labels, prior, config_.weight_bound));
    }

    bool found = false;
    int best_feature = 0;
    double best_threshold = 0.0;
    LeafWeights best;
    WeightFitState state;
    state.labels = labels;
    state.left.resize(reach.size());
    state.right.resize(reach.size());
    for (std::size_t j = 0; j < dataset_.dimension; ++j) {
      if (std::find(used.begin(), used.end(), static_cast<int>(j)) != used.end()) {
        continue;
      }
      for (double threshold : candidates_[j]) {
        for (std::size_t k = 0; k < reach.size(); ++k) {
          const double xj = dataset_.samples[reach[k].index].features[j];
          state.left[k] = CrossCost(xj, threshold, false) <= reach[k].residual
                              ? prior[k]
                              : kInf;
          state.right[k] = CrossCost(xj, threshold, true) <= reach[k].residual
                               ? prior[k]
                               : kInf;
        }
        const LeafWeights w = SolveLeafWeights(state, config_);
        if (!found || w.loss < best.loss) {
          found = true;
          best_feature = static_cast<int>(j);
          best_threshold = threshold;
          best = w;
        }
      }
    }
    if (!found) {
      return Tree::Leaf(lr * ClosedFormLeaf(labels, prior, config_.weight_bound));
    }

    const double left_value = lr * best.w_l;
    const double right_value = lr * (best.w_l + best.w_r);
    if (depth >= config_.max_depth) {
      return Tree::Split(best_feature, best_threshold, Tree::Leaf(left_value),
                         Tree::Leaf(right_value));
    }
    used.push_back(best_feature);
    AxisBox left_box = box;
    AxisBox right_box = std::move(box);
    Tree left = left_box.RestrictUpper(best_feature, best_threshold)
                    ? Build(std::move(left_box), used, depth + 1, left_value, false)
                    : Tree::Leaf(left_value);
    Tree right = right_box.RestrictLower(best_feature, best_threshold)
                     ? Build(std::move(right_box), used, depth + 1, right_value,
                             false)
                     : Tree::Leaf(right_value);
    used.pop_back();
    return Tree::Split(best_feature, best_threshold, std::move(left),
                       std::move(right));
  }

  const Dataset& dataset_;
  std::span<const double> prior_;
  const TrainConfig& config_;
  std::vector<std::vector<double>> candidates_;
};

}  // namespace

Tree FitTree(const Dataset& dataset, std::span<const double> prior_margins,
             const TrainConfig& config) {
  config.Validate();
  if (dataset.empty()) throw TrainingError("training set is empty");
  if (prior_margins.size() != dataset.size()) {
    throw InputError("prior margins must match the dataset size");
  }
  return TreeFitter(dataset, prior_margins, config).Fit();
}

TreeEnsemble FitTreeEnsemble(const Dataset& dataset, const TrainConfig& config,
                             const TreeCallback& on_round,
                             std::vector<double>* final_prior_margins) {
  config.Validate();
  if (dataset.empty()) throw TrainingError("training set is empty");
  TreeEnsemble ensemble;
  ensemble.dimension = dataset.dimension;
  std::vector<double> prior(dataset.size(), 0.0);
  for (int round = 1; round <= config.rounds; ++round) {
    const auto start = std::chrono::steady_clock::now();
    Tree tree = FitTree(dataset, prior, config);
    double loss = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      prior[i] += VerifySingleTree(tree, dataset.dimension, dataset.samples[i],
                                   config.perturbation)
                      .margin_lower_bound;
      loss += ExponentialLoss(prior[i]);
    }
    ensemble.trees.push_back(std::move(tree));
    if (on_round) on_round(round, ensemble.trees.back(), loss, Seconds(start));
  }
  if (final_prior_margins) *final_prior_margins = std::move(prior);
  return ensemble;
}

}  // namespace lpcert
