#include "lpcert/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "lpcert/errors.h"
#include "lpcert/model_io.h"
#include "lpcert/stump_verifier.h"
#include "lpcert/tree_verifier.h"
#include "reference_booster.h"
#include "test_support.h"

namespace lpcert {
namespace {

using testing::BestSide;
using testing::ReferenceCleanStump;
using testing::ReferenceStump;
using testing::Rng;

Dataset RandomDataset(Rng& rng, int n, int d) {
  Dataset data;
  data.dimension = d;
  for (int i = 0; i < n; ++i) {
    Sample s;
    double score = 0.0;
    for (int j = 0; j < d; ++j) {
      s.features.push_back(rng.Uniform(0, 1));
      score += (j % 2 ? -1.0 : 1.0) * s.features.back();
    }
    s.label = score + rng.Uniform(-0.3, 0.3) > 0.0 ? 1 : -1;
    data.samples.push_back(std::move(s));
  }
  return data;
}

WeightFitState RandomState(Rng& rng, int n) {
  WeightFitState state;
  for (int i = 0; i < n; ++i) {
    state.labels.push_back(rng.Label());
    state.left.push_back(rng.Int(0, 5) == 0 ? kInf : rng.Uniform(-2, 2));
    const bool both_inf = std::isinf(state.left.back());
    state.right.push_back(!both_inf && rng.Int(0, 5) == 0 ? kInf
                                                           : rng.Uniform(-2, 2));
  }
  return state;
}

TrainConfig Config(Norm norm, double eps) {
  TrainConfig c;
  c.perturbation = {norm, eps};
  return c;
}

TEST(EpsilonSchedule, LinearRamp) {
  EXPECT_DOUBLE_EQ(EpsilonSchedule(1.0, 1, 5), 0.2);
  EXPECT_EQ(EpsilonSchedule(1.0, 5, 5), 1.0);
  EXPECT_EQ(EpsilonSchedule(1.0, 9, 5), 1.0);
  EXPECT_EQ(EpsilonSchedule(0.3, 1, 1), 0.3);
  EXPECT_THROW(EpsilonSchedule(1.0, 1, 0), InputError);
}

TEST(CandidateSplits, Midpoints) {
  Dataset d{{{{0.0}, 1}, {{1.0}, -1}}, 1, ""};
  EXPECT_EQ(CandidateSplits(d, 0, 256), (std::vector<double>{0.5}));
  Dataset constant{{{{1.0}, 1}, {{1.0}, -1}, {{1.0}, 1}}, 1, ""};
  EXPECT_TRUE(CandidateSplits(constant, 0, 256).empty());
}

TEST(CandidateSplits, CapsToQuantiles) {
  Dataset d;
  d.dimension = 1;
  for (int i = 0; i < 1000; ++i) d.samples.push_back({{i * 0.37}, 1});
  const auto c = CandidateSplits(d, 0, 256);
  ASSERT_EQ(c.size(), 256u);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  EXPECT_GT(c.front(), 0.0);
  EXPECT_LT(c.back(), 999 * 0.37);
}

TEST(OptimalLeftWeight, BalancedGivesZero) {
  WeightFitState s{{0.0, 0.0}, {kInf, kInf}, {1, -1}};
  EXPECT_EQ(OptimalLeftWeight(s, 0.0, 10.0), 0.0);
}

TEST(OptimalLeftWeight, HalfLogRatio) {
  // gamma_+ = e^1 and gamma_- = e^0.
  WeightFitState s{{-1.0, 0.0}, {kInf, kInf}, {1, -1}};
  EXPECT_NEAR(OptimalLeftWeight(s, 0.0, 10.0), 0.5, 1e-15);
}

TEST(OptimalLeftWeight, OneClassClamps) {
  WeightFitState s{{0.0, 0.3}, {kInf, kInf}, {1, 1}};
  EXPECT_EQ(OptimalLeftWeight(s, 0.0, 10.0), 10.0);
  s.labels = {-1, -1};
  EXPECT_EQ(OptimalLeftWeight(s, 0.0, 10.0), -10.0);
}

TEST(SolveLeafWeights, BeatsGridSearch) {
  Rng rng(61);
  TrainConfig config;
  for (int trial = 0; trial < 50; ++trial) {
    const WeightFitState state = RandomState(rng, rng.Int(2, 12));
    const LeafWeights w = SolveLeafWeights(state, config);
    EXPECT_DOUBLE_EQ(w.loss, state.Loss(w.w_l, w.w_r));
    const double bound = config.weight_bound;
    for (int a = 0; a <= 40; ++a) {
      for (int b = 0; b <= 40; ++b) {
        const double wl = -bound + a * bound / 20;
        const double wr = -bound + b * bound / 20;
        EXPECT_LE(w.loss, state.Loss(wl, wr) + 1e-6)
            << "trial " << trial << " at (" << wl << ", " << wr << ")";
      }
    }
  }
}

TEST(SolveLeafWeights, NeverWorseThanZero) {
  Rng rng(62);
  TrainConfig config;
  for (int trial = 0; trial < 200; ++trial) {
    const WeightFitState state = RandomState(rng, rng.Int(1, 20));
    EXPECT_LE(SolveLeafWeights(state, config).loss, state.Loss(0, 0));
  }
}

TEST(WeightFitState, LossIsConvexProperty) {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    const WeightFitState state = RandomState(rng, rng.Int(1, 20));
    for (int k = 0; k < 20; ++k) {
      const double ul = rng.Uniform(-5, 5), ur = rng.Uniform(-5, 5);
      const double vl = rng.Uniform(-5, 5), vr = rng.Uniform(-5, 5);
      const double mid = state.Loss((ul + vl) / 2, (ur + vr) / 2);
      EXPECT_LE(mid, (state.Loss(ul, ur) + state.Loss(vl, vr)) / 2 + 1e-9);
    }
  }
}

TEST(StumpRoundContext, EmptyPriorCleanLeftSample) {
  Dataset d{{{{0.2}, 1}, {{0.8}, -1}}, 1, ""};
  StumpRoundContext ctx(d, StumpEnsemble{1, {}}, {Norm::P(1), 0.0}, 0.01);
  ctx.PrepareFeature(0);
  EXPECT_EQ(ctx.RobustMarginLowerBound(0, 0, 0.5, 0.7, -2.0), 0.7);
  EXPECT_EQ(ctx.RobustMarginLowerBound(1, 0, 0.5, 0.7, -2.0), 1.3);
}

TEST(StumpRoundContext, EmptyPriorCrossingBothWays) {
  Dataset d{{{{0.45}, 1}, {{0.55}, -1}}, 1, ""};
  StumpRoundContext ctx(d, StumpEnsemble{1, {}}, {Norm::P(2), 0.5}, 0.01);
  ctx.PrepareFeature(0);
  EXPECT_EQ(ctx.RobustMarginLowerBound(0, 0, 0.5, 0.7, -2.0),
            std::min(0.7, 0.7 - 2.0));
  EXPECT_EQ(ctx.RobustMarginLowerBound(1, 0, 0.5, 0.7, -2.0),
            std::min(-0.7, -(0.7 - 2.0)));
}

TEST(StumpRoundContext, BoundIsBelowExactWorstCase) {
  Rng rng(64);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 3;
    const Dataset data = RandomDataset(rng, 15, d);
    StumpEnsemble prior = testing::RandomStumps(rng, d, 3);
    for (Stump& s : prior.stumps) s.threshold = rng.Uniform(0, 1);
    for (Norm norm : {Norm::P(1), Norm::P(2), Norm::Infinity()}) {
      const PerturbationSpec spec{norm, rng.Uniform(0.05, 0.4)};
      StumpRoundContext ctx(data, prior, spec, 0.01);
      const int feature = rng.Int(0, d - 1);
      const double threshold = rng.Uniform(0, 1);
      const double wl = rng.Uniform(-1, 1), wr = rng.Uniform(-1, 1);
      ctx.PrepareFeature(feature);
      StumpEnsemble extended = prior;
      extended.stumps.push_back({feature, threshold, wl, wl + wr});
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double bound =
            ctx.RobustMarginLowerBound(i, feature, threshold, wl, wr);
        const double exact =
            VerifyStumpsExact(extended, data.samples[i], spec)
                .margin_lower_bound;
        EXPECT_LE(bound, exact + 1e-9);
        if (norm.kind() == Norm::Kind::kInf) {
          EXPECT_NEAR(bound, exact, 1e-9);
        }
      }
    }
  }
}

TEST(FitStumpRound, SeparableOneDimensionalData) {
  Dataset d;
  d.dimension = 1;
  for (int i = 0; i < 10; ++i) d.samples.push_back({{i * 0.1}, i < 5 ? -1 : 1});
  TrainConfig config = Config(Norm::P(1), 0.0);
  const StumpRoundResult r = FitStumpRound(d, StumpEnsemble{1, {}}, config, 1);
  EXPECT_DOUBLE_EQ(r.stump.threshold, 0.45);
  for (const Sample& s : d.samples) {
    EXPECT_GT(s.label * r.stump.Evaluate(s.features), 0.0);
  }
}

TEST(FitStumpRound, NoCandidatesIsTrainingError) {
  Dataset d{{{{1.0}, 1}, {{1.0}, -1}}, 1, ""};
  EXPECT_THROW(FitStumpRound(d, StumpEnsemble{1, {}}, Config(Norm::P(1), 0), 1),
               TrainingError);
}

TEST(FitStumpRound, CleanRoundMatchesStandardBooster) {
  Rng rng(65);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset data = RandomDataset(rng, 60, 4);
    TrainConfig config = Config(Norm::P(2), 0.0);
    config.candidate_cap = 16;
    config.coord_descent_iters = 50;
    StumpEnsemble ensemble{4, {}};
    std::vector<int> rows(data.size()), features{0, 1, 2, 3};
    std::iota(rows.begin(), rows.end(), 0);
    for (int round = 1; round <= 5; ++round) {
      std::vector<double> margins;
      for (const Sample& s : data.samples) {
        margins.push_back(s.label * EvaluateStumpEnsemble(ensemble, s.features));
      }
      const ReferenceStump ref = ReferenceCleanStump(
          data, margins, rows, features, config.candidate_cap,
          config.weight_bound);
      const StumpRoundResult r = FitStumpRound(data, ensemble, config, round);
      ASSERT_EQ(r.stump.feature, ref.feature) << "round " << round;
      ASSERT_EQ(r.stump.threshold, ref.threshold) << "round " << round;
      EXPECT_NEAR(r.stump.left_value, ref.left, 1e-4);
      EXPECT_NEAR(r.stump.right_value, ref.right, 1e-4);
      EXPECT_NEAR(r.robust_loss, ref.loss, 1e-6 * ref.loss);
      ensemble.stumps.push_back(r.stump);
    }
  }
}

TEST(FitStumpRound, ShrinkageScalesWeights) {
  Rng rng(66);
  const Dataset data = RandomDataset(rng, 40, 3);
  TrainConfig full = Config(Norm::P(1), 0.2);
  TrainConfig half = full;
  half.shrinkage = 0.5;
  const Stump a = FitStumpRound(data, StumpEnsemble{3, {}}, full, 1).stump;
  const Stump b = FitStumpRound(data, StumpEnsemble{3, {}}, half, 1).stump;
  EXPECT_EQ(a.feature, b.feature);
  EXPECT_EQ(a.threshold, b.threshold);
  EXPECT_DOUBLE_EQ(b.left_value, 0.5 * a.left_value);
  EXPECT_DOUBLE_EQ(b.right_value, 0.5 * a.right_value);
}

TEST(FitStumpEnsemble, RobustLossDescendsAtFixedRadius) {
  Rng rng(67);
  const Dataset data = RandomDataset(rng, 80, 4);
  for (Norm norm : {Norm::P(1), Norm::P(2), Norm::Infinity()}) {
    TrainConfig config = Config(norm, 0.15);
    config.rounds = 8;
    config.shrinkage = 0.5;
    StumpEnsemble ensemble{4, {}};
    for (int round = 1; round <= config.rounds; ++round) {
      const StumpRoundResult r = FitStumpRound(data, ensemble, config, round);
      EXPECT_LE(r.robust_loss, r.prior_loss * (1 + 1e-12));
      ensemble.stumps.push_back(r.stump);
    }
  }
}

TEST(FitStumpEnsemble, BoundsHoldAgainstExactVerifier) {
  Rng rng(68);
  const Dataset data = RandomDataset(rng, 30, 3);
  TrainConfig config = Config(Norm::P(1), 0.2);
  config.rounds = 4;
  config.shrinkage = 1.0;
  StumpEnsemble ensemble{3, {}};
  for (int round = 1; round <= config.rounds; ++round) {
    const StumpRoundResult r = FitStumpRound(data, ensemble, config, round);
    StumpRoundContext ctx(data, ensemble, config.perturbation,
                          config.precision);
    ctx.PrepareFeature(r.stump.feature);
    ensemble.stumps.push_back(r.stump);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double bound = ctx.RobustMarginLowerBound(
          i, r.stump.feature, r.stump.threshold, r.stump.left_value,
          r.stump.right_value - r.stump.left_value);
      EXPECT_LE(bound, VerifyLpExact(ensemble, data.samples[i], 1.0, 0.2)
                               .margin_lower_bound +
                           1e-9);
    }
  }
}

TEST(FitStumpEnsemble, Deterministic) {
  Rng rng(69);
  const Dataset data = RandomDataset(rng, 50, 4);
  TrainConfig config = Config(Norm::P(2), 0.2);
  config.rounds = 5;
  config.schedule_length = 3;
  EXPECT_EQ(SerializeModel(FitStumpEnsemble(data, config)),
            SerializeModel(FitStumpEnsemble(data, config)));
}

TEST(FitStumpEnsemble, ZeroRoundsGivesEmptyModel) {
  Rng rng(70);
  const Dataset data = RandomDataset(rng, 10, 2);
  TrainConfig config = Config(Norm::P(1), 0.1);
  config.rounds = 0;
  const StumpEnsemble e = FitStumpEnsemble(data, config);
  EXPECT_TRUE(e.stumps.empty());
  EXPECT_EQ(e.dimension, 2u);
}

TEST(TrainConfig, RejectsL0AndBadValues) {
  EXPECT_THROW(Config(Norm::Zero(), 1).Validate(), InputError);
  EXPECT_NO_THROW(Config(Norm::Zero(), 0).Validate());
  TrainConfig c = Config(Norm::P(1), 0.1);
  c.shrinkage = 0.0;
  EXPECT_THROW(c.Validate(), InputError);
  c = Config(Norm::P(1), 0.1);
  c.precision = 0.0;
  EXPECT_THROW(c.Validate(), InputError);
}

TEST(SampleBudget, Examples) {
  const Sample s{{0.0, 0.0}, 1};
  const PathBudget empty = SampleBudget(s, {}, 1.0, 1.0);
  EXPECT_EQ(empty.epsilon, 1.0);
  EXPECT_TRUE(empty.crossings.empty());

  const std::vector<PathStep> one{{0, 0.3, true}};
  const PathBudget b1 = SampleBudget(s, one, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(b1.epsilon, 0.7);
  EXPECT_EQ(b1.crossings, (std::vector<int>{0}));

  const std::vector<PathStep> two{{0, 0.6, true}, {1, -0.8, false}};
  const PathBudget b2 = SampleBudget(s, two, 2.0, 1.0);
  EXPECT_NEAR(b2.epsilon, 0.0, 1e-7);
  EXPECT_TRUE(b2.reachable);
  EXPECT_EQ(b2.crossings, (std::vector<int>{0, 1}));

  const std::vector<PathStep> too_far{{0, 1.5, true}};
  EXPECT_FALSE(SampleBudget(s, too_far, 1.0, 1.0).reachable);
}

// Clean greedy tree reference, built from the same split candidates.
Tree ReferenceCleanTree(const Dataset& data, const std::vector<double>& prior,
                        std::vector<int> rows, std::vector<int> allowed,
                        int depth, const TrainConfig& config,
                        double fallback) {
  if (rows.empty()) return Tree::Leaf(fallback);
  double pos = 0, neg = 0;
  for (int i : rows) {
    (data.samples[i].label > 0 ? pos : neg) += std::exp(-prior[i]);
  }
  if (pos == 0 || neg == 0) {
    return Tree::Leaf(config.shrinkage *
                      BestSide(pos, neg, config.weight_bound).first);
  }
  const ReferenceStump best = ReferenceCleanStump(
      data, prior, rows, allowed, config.candidate_cap, config.weight_bound);
  if (best.feature < 0) {
    return Tree::Leaf(config.shrinkage *
                      BestSide(pos, neg, config.weight_bound).first);
  }
  const double lv = config.shrinkage * best.left;
  const double rv = config.shrinkage * best.right;
  if (depth == config.max_depth) {
    return Tree::Split(best.feature, best.threshold, Tree::Leaf(lv),
                       Tree::Leaf(rv));
  }
  std::vector<int> left, right;
  for (int i : rows) {
    (data.samples[i].features[best.feature] >= best.threshold ? right : left)
        .push_back(i);
  }
  std::erase(allowed, best.feature);
  return Tree::Split(
      best.feature, best.threshold,
      ReferenceCleanTree(data, prior, left, allowed, depth + 1, config, lv),
      ReferenceCleanTree(data, prior, right, allowed, depth + 1, config, rv));
}

void ExpectSameTree(const Tree& a, int ia, const Tree& b, int ib) {
  const TreeNode& x = a.node(ia);
  const TreeNode& y = b.node(ib);
  ASSERT_EQ(x.is_leaf(), y.is_leaf());
  if (x.is_leaf()) {
    EXPECT_NEAR(x.value, y.value, 1e-4);
    return;
  }
  ASSERT_EQ(x.feature, y.feature);
  ASSERT_EQ(x.threshold, y.threshold);
  ExpectSameTree(a, x.left, b, y.left);
  ExpectSameTree(a, x.right, b, y.right);
}

TEST(FitTree, CleanTreeMatchesStandardGreedyTree) {
  Rng rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset data = RandomDataset(rng, 80, 4);
    TrainConfig config = Config(Norm::P(1), 0.0);
    config.max_depth = 3;
    config.candidate_cap = 12;
    config.coord_descent_iters = 50;
    config.shrinkage = 0.5;
    std::vector<double> prior(data.size());
    for (double& m : prior) m = rng.Uniform(-0.5, 0.5);
    std::vector<int> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    const Tree ours = FitTree(data, prior, config);
    const Tree ref =
        ReferenceCleanTree(data, prior, rows, {0, 1, 2, 3}, 1, config, 0.0);
    ExpectSameTree(ours, 0, ref, 0);
  }
}

TEST(FitTree, DepthOneEqualsStumpRound) {
  Rng rng(72);
  const Dataset data = RandomDataset(rng, 50, 3);
  for (const PerturbationSpec& spec :
       {PerturbationSpec{Norm::P(1), 0.0},
        PerturbationSpec{Norm::Infinity(), 0.1}}) {
    TrainConfig config;
    config.perturbation = spec;
    config.max_depth = 1;
    const Tree tree =
        FitTree(data, std::vector<double>(data.size(), 0.0), config);
    const Stump stump =
        FitStumpRound(data, StumpEnsemble{3, {}}, config, 1).stump;
    const TreeNode& root = tree.node(0);
    ASSERT_FALSE(root.is_leaf());
    EXPECT_EQ(root.feature, stump.feature);
    EXPECT_EQ(root.threshold, stump.threshold);
    EXPECT_DOUBLE_EQ(tree.node(root.left).value, stump.left_value);
    EXPECT_DOUBLE_EQ(tree.node(root.right).value, stump.right_value);
  }
}

TEST(FitTree, PathFeaturesAreNotReused) {
  Rng rng(73);
  const Dataset data = RandomDataset(rng, 120, 3);
  TrainConfig config = Config(Norm::P(2), 0.1);
  config.max_depth = 5;
  const Tree t = FitTree(data, std::vector<double>(data.size(), 0.0), config);
  EXPECT_LE(t.Depth(), 3);
  std::function<void(int, std::vector<int>)> walk = [&](int i,
                                                        std::vector<int> used) {
    const TreeNode& n = t.node(i);
    if (n.is_leaf()) return;
    EXPECT_EQ(std::count(used.begin(), used.end(), n.feature), 0);
    used.push_back(n.feature);
    walk(n.left, used);
    walk(n.right, used);
  };
  walk(0, {});
}

TEST(FitTree, EmptyDatasetIsTrainingError) {
  EXPECT_THROW(FitTree(Dataset{{}, 2, ""}, {}, Config(Norm::P(1), 0.1)),
               TrainingError);
}

TEST(FitTreeEnsemble, PriorMarginsAreSingleTreeSums) {
  Rng rng(74);
  const Dataset data = RandomDataset(rng, 60, 3);
  TrainConfig config = Config(Norm::P(2), 0.1);
  config.rounds = 3;
  config.max_depth = 2;
  config.shrinkage = 0.5;
  std::vector<double> margins;
  const TreeEnsemble e = FitTreeEnsemble(data, config, {}, &margins);
  ASSERT_EQ(e.trees.size(), 3u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double sum = 0.0;
    for (const Tree& t : e.trees) {
      sum += VerifySingleTree(t, 3, data.samples[i], config.perturbation)
                 .margin_lower_bound;
    }
    EXPECT_DOUBLE_EQ(margins[i], sum);
    // A sum of per-tree worst cases never exceeds the ensemble's.
    EXPECT_LE(margins[i],
              VerifyEnsembleMultilevel(e, data.samples[i], config.perturbation,
                                       {3, 1})
                      .margin_lower_bound +
                  1e-12);
  }
}

TEST(FitTreeEnsemble, Deterministic) {
  Rng rng(75);
  const Dataset data = RandomDataset(rng, 50, 3);
  TrainConfig config = Config(Norm::P(1), 0.2);
  config.rounds = 2;
  config.max_depth = 3;
  config.schedule_length = 2;
  EXPECT_EQ(SerializeModel(FitTreeEnsemble(data, config)),
            SerializeModel(FitTreeEnsemble(data, config)));
}

}  // namespace
}  // namespace lpcert
