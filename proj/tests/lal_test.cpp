#include <gtest/gtest.h>

#include <cmath>

#include "ntal/lal.hpp"

namespace ntal {
namespace {

LalParams small_params(std::uint64_t seed = 1) {
  LalParams p;
  p.mc_rounds = 6;
  p.candidates_per_round = 5;
  p.simulation.n_trees = 7;
  p.regressor.n_trees = 10;
  p.seed = seed;
  return p;
}

TEST(LalParams, Validation) {
  LalParams p;
  EXPECT_EQ(p.state_feature_length, 8u);
  EXPECT_NO_THROW(p.validate());
  p.state_feature_length = 7;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.mc_rounds = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.candidates_per_round = 0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(LabeledSummary, BalanceEntropy) {
  const LabeledSummary even{4, {2, 2}};
  EXPECT_NEAR(even.balance_entropy(), std::log(2.0), 1e-12);
  const LabeledSummary pure{5, {0, 5, 0}};
  EXPECT_EQ(pure.balance_entropy(), 0.0);
  const LabeledSummary none{0, {0, 0}};
  EXPECT_EQ(none.balance_entropy(), 0.0);
}

TEST(LalStateFeatures, WorkedExample) {
  const FeatureSchema schema({"x", "y"}, {"a", "b"});
  std::vector<DecisionTree> trees;
  for (int i = 0; i < 3; ++i) trees.push_back(DecisionTree::constant(0));
  trees.push_back(DecisionTree::constant(1));
  const ForestModel model(schema, trees, 0);
  const LabeledSummary labeled{6, {3, 3}};
  const std::vector<double> x{3.0, 4.0};
  const auto s = lal_state_features(model, labeled, x);
  EXPECT_DOUBLE_EQ(s[0], 0.75);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  EXPECT_NEAR(s[2], -(0.75 * std::log(0.75) + 0.25 * std::log(0.25)), 1e-12);
  EXPECT_DOUBLE_EQ(s[3], 0.1875);  // (0.75*0.25 + 0.25*0.75) / 2
  EXPECT_DOUBLE_EQ(s[4], 6.0);
  EXPECT_NEAR(s[5], std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(s[6], 0.0);
  EXPECT_DOUBLE_EQ(s[7], 5.0);
}

TEST(SimulateLalPairs, ShapeAndFiniteness) {
  const auto p = small_params();
  const auto pairs = simulate_lal_pairs(p);
  ASSERT_EQ(pairs.states.size(), p.mc_rounds * p.candidates_per_round);
  ASSERT_EQ(pairs.targets.size(), pairs.states.size());
  for (std::size_t i = 0; i < pairs.states.size(); ++i) {
    ASSERT_EQ(pairs.states[i].size(), 8u);
    for (double v : pairs.states[i]) EXPECT_TRUE(std::isfinite(v));
    EXPECT_TRUE(std::isfinite(pairs.targets[i]));
    EXPECT_GE(pairs.targets[i], -1.0);
    EXPECT_LE(pairs.targets[i], 1.0);
    EXPECT_GE(pairs.states[i][0], 0.0);
    EXPECT_LE(pairs.states[i][0], 1.0);
  }
}

TEST(TrainLalRegressor, DeterministicPerSeed) {
  const auto a = train_lal_regressor(small_params(3));
  const auto b = train_lal_regressor(small_params(3));
  EXPECT_TRUE(a.trained());
  EXPECT_EQ(a.training_pairs(), 30u);
  LalFeatures s{0.6, 0.2, 0.67, 0.24, 10, 0.69, 3.0, 1.5};
  EXPECT_EQ(a.predict(s), b.predict(s));
}

TEST(TrainLalRegressor, ConstantTargetHook) {
  auto p = small_params(4);
  p.constant_target = 0.125;
  const auto reg = train_lal_regressor(p);
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    LalFeatures s;
    for (auto& v : s) v = 5.0 * uniform01(rng);
    EXPECT_DOUBLE_EQ(reg.predict(s), 0.125);
  }
}

TEST(LalScore, UntrainedRegressorIsRejected) {
  const FeatureSchema schema({"x"}, {"a", "b"});
  const ForestModel model(schema, {DecisionTree::constant(0)}, 0);
  try {
    lal_score(LalRegressor{}, model, LabeledSummary{1, {1, 0}}, std::vector<double>{0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::untrained_regressor);
  }
}

TEST(LalScore, UncertainCandidatesScoreAtLeastConfidentOnes) {
  // Averaged over many states: contested predictions should promise more
  // error reduction than unanimous ones.
  LalParams p;
  p.mc_rounds = 30;
  p.candidates_per_round = 8;
  p.simulation.n_trees = 15;
  p.regressor.n_trees = 30;
  p.seed = 7;
  const auto reg = train_lal_regressor(p);
  double uncertain = 0, confident = 0;
  int n = 0;
  for (double size : {6.0, 12.0, 20.0})
    for (double depth : {1.0, 2.0, 3.0})
      for (double norm : {0.5, 1.5, 2.5}) {
        uncertain += reg.predict({0.5, 0.0, std::log(2.0), 0.25, size, std::log(2.0), depth, norm});
        confident += reg.predict({1.0, 1.0, 0.0, 0.0, size, std::log(2.0), depth, norm});
        ++n;
      }
  EXPECT_GE(uncertain / n, confident / n);
}

}  // namespace
}  // namespace ntal
