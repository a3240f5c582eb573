#include "lpcert/stump_verifier.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "lpcert/errors.h"

namespace lpcert {
namespace {

void CheckSample(const StumpEnsemble& ensemble, const Sample& sample) {
  if (sample.features.size() != ensemble.dimension) {
    throw InputError("sample has " + std::to_string(sample.features.size()) +
                     " features, model expects " +
                     std::to_string(ensemble.dimension));
  }
}

double CleanMargin(const StumpEnsemble& ensemble, const Sample& sample) {
  return sample.label * EvaluateStumpEnsemble(ensemble, sample.features);
}

void CheckLp(double p, double epsilon) {
  if (!(p > 0.0) || !std::isfinite(p)) throw InputError("p must be in (0, inf)");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InputError("epsilon must be finite and >= 0");
  }
}

}  // namespace

std::vector<FeatureOptions> CollectFeatureOptions(
    const std::map<int, FeatureAggregate>& aggregates, const Sample& sample,
    Norm norm) {
  std::vector<FeatureOptions> out;
  out.reserve(aggregates.size());
  const double y = sample.label;
  for (const auto& [feature, agg] : aggregates) {
    FeatureOptions f;
    f.feature = feature;
    const double xj = sample.features[feature];
    f.clean_value = y * agg.Evaluate(xj);
    f.options.reserve(agg.interval_values.size());
    for (std::size_t t = 0; t < agg.interval_values.size(); ++t) {
      const Interval iv{agg.Lower(t), agg.Upper(t)};
      f.options.emplace_back(ReachCost(xj, iv, norm),
                             y * agg.interval_values[t]);
    }
    out.push_back(std::move(f));
  }
  return out;
}

VerificationResult VerifyL0(const StumpEnsemble& ensemble,
                            const Sample& sample, int k) {
  CheckSample(ensemble, sample);
  if (k < 0 || static_cast<std::size_t>(k) > ensemble.dimension) {
    throw InputError("l0 budget must lie in [0, d]");
  }
  const double clean = CleanMargin(ensemble, sample);
  if (k == 0) return VerificationResult::Make(clean, true);

  const auto aggregates = AggregateFeatures(ensemble);
  const auto features = CollectFeatureOptions(aggregates, sample, Norm::Zero());
  // (c_j, feature, interval): the largest drop from changing feature j alone.
  struct Drop {
    double drop;
    int feature;
    std::size_t interval;
    bool operator<(const Drop& o) const {
      return drop != o.drop ? drop < o.drop : feature < o.feature;
    }
  };
  std::vector<Drop> drops;
  drops.reserve(features.size());
  for (const FeatureOptions& f : features) {
    Drop d{0.0, f.feature, 0};
    for (std::size_t t = 0; t < f.options.size(); ++t) {
      const double drop = f.options[t].second - f.clean_value;
      if (drop < d.drop) {
        d.drop = drop;
        d.interval = t;
      }
    }
    drops.push_back(d);
  }
  const std::size_t take = std::min<std::size_t>(k, drops.size());
  std::partial_sort(drops.begin(), drops.begin() + take, drops.end());

  // Evaluate at a concrete worst-case point.
  std::vector<double> worst = sample.features;
  for (std::size_t i = 0; i < take && drops[i].drop < 0.0; ++i) {
    const FeatureAggregate& agg = aggregates.at(drops[i].feature);
    const double lower = agg.Lower(drops[i].interval);
    worst[drops[i].feature] =
        std::isfinite(lower) ? lower
                             : std::nextafter(agg.Upper(drops[i].interval), -kInf);
  }
  const double margin =
      sample.label * EvaluateStumpEnsemble(ensemble, worst);
  return VerificationResult::Make(std::min(margin, clean), true);
}

VerificationResult VerifyLinf(const StumpEnsemble& ensemble,
                              const Sample& sample, double epsilon) {
  CheckSample(ensemble, sample);
  const PerturbationSpec spec{Norm::Infinity(), epsilon};
  spec.Validate();
  const double clean = CleanMargin(ensemble, sample);
  if (epsilon == 0.0) return VerificationResult::Make(clean, true);

  const double budget = ReachBudget(spec);
  double margin = 0.0;
  for (const FeatureOptions& f : CollectFeatureOptions(
           AggregateFeatures(ensemble), sample, Norm::Infinity())) {
    double lowest = kInf;
    for (const auto& [cost, value] : f.options) {
      if (cost <= budget) lowest = std::min(lowest, value);
    }
    margin += lowest;
  }
  // The clean point is always reachable; this also pins rounding to it.
  return VerificationResult::Make(std::min(margin, clean), true);
}

DpGrid BuildDpGrid(const StumpEnsemble& ensemble, const Sample& sample,
                   double p, double epsilon, double precision) {
  CheckSample(ensemble, sample);
  CheckLp(p, epsilon);
  const Norm norm = Norm::P(p);
  const BudgetGrid grid =
      MakeBudgetGrid(ReachBudget({norm, epsilon}), precision);
  DpGrid out;
  out.precision = grid.precision;
  out.cells = grid.cells;
  DpRow row = InitialDpRow(grid);
  for (const FeatureOptions& f :
       CollectFeatureOptions(AggregateFeatures(ensemble), sample, norm)) {
    row = AccumulateFeature(row, BudgetStep(f.options, grid));
    out.features.push_back(f.feature);
    out.rows.push_back(row);
  }
  return out;
}

VerificationResult VerifyLpDp(const StumpEnsemble& ensemble,
                              const Sample& sample, double p, double epsilon,
                              double precision) {
  CheckSample(ensemble, sample);
  CheckLp(p, epsilon);
  if (!(precision > 0.0)) throw InputError("DP precision must be positive");
  const double clean = CleanMargin(ensemble, sample);
  if (epsilon == 0.0) return VerificationResult::Make(clean, true);
  const Norm norm = Norm::P(p);
  const BudgetGrid grid =
      MakeBudgetGrid(ReachBudget({norm, epsilon}), precision);
  DpRow row = InitialDpRow(grid);
  const auto features =
      CollectFeatureOptions(AggregateFeatures(ensemble), sample, norm);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const BudgetStep step(features[i].options, grid);
    if (i + 1 == features.size()) {
      return VerificationResult::Make(
          std::min(FinalWithFeature(row, step), clean), false);
    }
    row = AccumulateFeature(row, step);
  }
  // No active features: F is identically zero.
  return VerificationResult::Make(0.0, true);
}

VerificationResult VerifyLpExact(const StumpEnsemble& ensemble,
                                 const Sample& sample, double p,
                                 double epsilon, double max_combinations) {
  CheckSample(ensemble, sample);
  CheckLp(p, epsilon);
  const double clean = CleanMargin(ensemble, sample);
  if (epsilon == 0.0) return VerificationResult::Make(clean, true);

  const Norm norm = Norm::P(p);
  const double budget = ReachBudget({norm, epsilon});
  auto features =
      CollectFeatureOptions(AggregateFeatures(ensemble), sample, norm);

  double combinations = 1.0;
  for (FeatureOptions& f : features) {
    std::erase_if(f.options, [budget](const auto& o) { return o.first > budget; });
    std::sort(f.options.begin(), f.options.end(),
              [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second < b.second
                                            : a.first < b.first;
              });
    combinations *= static_cast<double>(f.options.size());
  }
  if (combinations > max_combinations) {
    throw ResourceError("exact lp verification needs " +
                        std::to_string(combinations) +
                        " interval combinations (cap " +
                        std::to_string(max_combinations) + ")");
  }

  // Optimistic completion: each remaining feature at its cheapest-valued
  // reachable interval, ignoring the shared budget.
  std::vector<double> optimistic(features.size() + 1, 0.0);
  for (std::size_t i = features.size(); i-- > 0;) {
    optimistic[i] = optimistic[i + 1] + features[i].options.front().second;
  }
  double best = clean;
  std::function<void(std::size_t, double, double)> search =
      [&](std::size_t i, double spent, double value) {
        if (value + optimistic[i] >= best) return;
        if (i == features.size()) {
          best = value;
          return;
        }
        for (const auto& [cost, v] : features[i].options) {
          if (value + v + optimistic[i + 1] >= best) break;
          if (spent + cost <= budget) search(i + 1, spent + cost, value + v);
        }
      };
  search(0, 0.0, 0.0);
  return VerificationResult::Make(best, true);
}

VerificationResult VerifyStumpsExact(const StumpEnsemble& ensemble,
                                     const Sample& sample,
                                     const PerturbationSpec& spec) {
  spec.Validate();
  switch (spec.norm.kind()) {
    case Norm::Kind::kZero:
      return VerifyL0(ensemble, sample, static_cast<int>(spec.epsilon));
    case Norm::Kind::kInf:
      return VerifyLinf(ensemble, sample, spec.epsilon);
    case Norm::Kind::kP:
      return VerifyLpExact(ensemble, sample, spec.norm.p(), spec.epsilon);
  }
  return {};
}

KnapsackInstance BuildKnapsackInstance(std::span<const double> weights,
                                       std::span<const double> values,
                                       double capacity, double target,
                                       double p) {
  if (weights.size() != values.size() || weights.empty()) {
    throw InputError("knapsack needs matching, non-empty weights and values");
  }
  if (!(p > 0.0) || !std::isfinite(p)) throw InputError("p must be in (0, inf)");
  if (!(capacity >= 0.0)) throw InputError("capacity must be >= 0");
  const std::size_t n = weights.size();
  KnapsackInstance out;
  out.ensemble.dimension = n;
  out.sample.features.assign(n, 0.0);
  out.sample.label = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0) || !(values[i] > 0.0)) {
      throw InputError("knapsack weights and values must be positive");
    }
    // Taking item i means moving feature i from 0 up to w_i^(1/p), which
    // costs w_i budget units and drops the prediction by v_i. The target sits
    // on the first stump so integer instances sum without rounding.
    const double offset = i == 0 ? target : 0.0;
    out.ensemble.stumps.push_back(Stump{static_cast<int>(i),
                                        std::pow(weights[i], 1.0 / p), offset,
                                        offset - values[i]});
  }
  out.epsilon = std::pow(capacity, 1.0 / p);
  return out;
}

}  // namespace lpcert
