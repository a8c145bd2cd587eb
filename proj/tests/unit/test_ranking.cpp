// Copyright 2026 The hubrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "hubrank/ranking.hpp"
#include "oracles/dense.hpp"
#include "support/generators.hpp"
#include "support/hub_tables.hpp"

namespace hubrank {
namespace {

using testing::Gen;

ScorePair pair_of(std::vector<double> s, std::vector<double> t, TruthDirection d = TruthDirection::higher_better) {
  return {std::move(s), std::move(t), d};
}

TEST(KendallTau, PerfectAgreementAndReversal) {
  EXPECT_DOUBLE_EQ(kendall_tau(pair_of({1, 2, 3, 4}, {1, 2, 3, 4})), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(pair_of({1, 2, 3, 4}, {4, 3, 2, 1})), -1.0);
}

TEST(KendallTau, OneDiscordantPairOfThree) {
  EXPECT_NEAR(kendall_tau(pair_of({1, 2, 3}, {1, 3, 2})), 1.0 / 3.0, 1e-15);
}

TEST(KendallTau, LowerBetterNegatesTruths) {
  EXPECT_DOUBLE_EQ(kendall_tau(pair_of({1, 2, 3, 4}, {4, 3, 2, 1}, TruthDirection::lower_better)), 1.0);
}

TEST(KendallTau, ValidatesInput) {
  EXPECT_THROW(kendall_tau(pair_of({1}, {1})), InputError);
  EXPECT_THROW(kendall_tau(pair_of({1, 2}, {1})), InputError);
  EXPECT_THROW(kendall_tau(pair_of({1, std::nan("")}, {1, 2})), InputError);
}

// Values from the reference weighted-tau implementation, frozen.
TEST(WeightedTau, MatchesReferenceOnSmallVectors) {
  EXPECT_NEAR(weighted_tau(pair_of({1, 2, 3}, {1, 3, 2})), 0.18181818181818177, 1e-14);
  EXPECT_NEAR(weighted_tau(pair_of({1, 1, 2, 3, 3, 4}, {2, 1, 1, 3, 4, 4})), 0.7704467900010168, 1e-14);
  EXPECT_NEAR(weighted_tau(pair_of({5, 1, 4, 4, 2, 0, 3}, {2, 2, 7, 1, 0, 3, 3})), 0.08338335398813254, 1e-14);
}

TEST(WeightedTau, MatchesReferenceOnEveryHubTable) {
  for (const auto& t : testing::hub_tables()) {
    const double w = weighted_tau(pair_of(t.scores, t.truths, t.direction));
    EXPECT_NEAR(w, t.reference_tau_w, 1e-12) << t.dataset;
  }
}

TEST(WeightedTau, AircraftRow) {
  const auto& t = testing::hub_tables().front();
  ASSERT_EQ(t.dataset, "Aircraft");
  EXPECT_NEAR(weighted_tau(pair_of(t.scores, t.truths)), 0.59, 0.015);
}

TEST(WeightedTau, QnliRowIsPerfect) {
  EXPECT_NEAR(weighted_tau(pair_of({-0.565, -0.603, -0.613, -0.618}, {92.8, 90.8, 89.2, 88.2})), 1.0, 0.005);
}

TEST(WeightedTau, DspritesUsesLowerBetter) {
  const std::vector<double> mse{0.037, 0.031, 0.028, 0.028, 0.034, 0.039, 0.035, 0.036, 0.045, 0.044, 0.037, 0.035};
  const std::vector<double> s{1.05, 1.53, 1.64, 1.63, 1.31, 1.35, 1.25, 1.34, 1.18, 1.22, 1.18, 1.39};
  EXPECT_NEAR(weighted_tau(pair_of(s, mse, TruthDirection::lower_better)), 0.79, 0.015);
  EXPECT_LT(weighted_tau(pair_of(s, mse, TruthDirection::higher_better)), 0.0);
}

TEST(WeightedTau, FullyTiedScoresAreUndefined) {
  EXPECT_THROW(weighted_tau(pair_of({1, 1, 1}, {1, 2, 3})), DomainError);
}

class TauProperty : public ::testing::TestWithParam<int> {};

std::vector<double> draw(Gen& g, std::size_t m, bool ties) {
  std::vector<double> v(m);
  for (auto& x : v) x = ties ? static_cast<double>(g.integer(0, 4)) : g.normal();
  return v;
}

bool has_spread(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [&](double x) { return x != v[0]; });
}

TEST_P(TauProperty, BoundedAndMatchesPairLoop) {
  Gen g(8000 + GetParam());
  const std::size_t m = static_cast<std::size_t>(g.integer(2, 20));
  const bool ties = GetParam() % 2 == 0;
  const auto s = draw(g, m, ties);
  const auto t = draw(g, m, ties);
  const double tau = kendall_tau(pair_of(s, t));
  EXPECT_NEAR(tau, oracle::loop_kendall_tau(s, t), 1e-15);
  EXPECT_GE(tau, -1.0);
  EXPECT_LE(tau, 1.0);
  if (has_spread(s) && has_spread(t)) {
    const double w = weighted_tau(pair_of(s, t));
    EXPECT_GE(w, -1.0 - 1e-12);
    EXPECT_LE(w, 1.0 + 1e-12);
  }
}

TEST_P(TauProperty, InvariantUnderIncreasingTransforms) {
  Gen g(8100 + GetParam());
  const std::size_t m = static_cast<std::size_t>(g.integer(2, 20));
  const auto s = draw(g, m, GetParam() % 3 == 0);
  const auto t = draw(g, m, GetParam() % 3 == 1);
  if (!has_spread(s) || !has_spread(t)) GTEST_SKIP();
  std::vector<double> s2, t2;
  for (double x : s) s2.push_back(std::exp(3.0 * x) - 7.0);
  for (double x : t) t2.push_back(std::atan(x) * 100.0 + 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(pair_of(s, t)), kendall_tau(pair_of(s2, t2)));
  EXPECT_NEAR(weighted_tau(pair_of(s, t)), weighted_tau(pair_of(s2, t2)), 1e-14);
}

TEST_P(TauProperty, AntisymmetricWithoutTies) {
  Gen g(8200 + GetParam());
  const std::size_t m = static_cast<std::size_t>(g.integer(2, 20));
  const auto s = draw(g, m, false);
  const auto t = draw(g, m, false);
  std::vector<double> neg;
  for (double x : t) neg.push_back(-x);
  EXPECT_NEAR(kendall_tau(pair_of(s, neg)), -kendall_tau(pair_of(s, t)), 1e-15);
  EXPECT_NEAR(kendall_tau(pair_of(s, t, TruthDirection::lower_better)), -kendall_tau(pair_of(s, t)), 1e-15);
}

TEST_P(TauProperty, JointPermutationInvariant) {
  Gen g(8300 + GetParam());
  const std::size_t m = static_cast<std::size_t>(g.integer(2, 20));
  const auto s = draw(g, m, GetParam() % 2 == 0);
  const auto t = draw(g, m, GetParam() % 2 == 0);
  if (!has_spread(s) || !has_spread(t)) GTEST_SKIP();
  const auto p = g.permutation(m);
  std::vector<double> ps, pt;
  for (std::size_t i : p) {
    ps.push_back(s[i]);
    pt.push_back(t[i]);
  }
  EXPECT_NEAR(kendall_tau(pair_of(s, t)), kendall_tau(pair_of(ps, pt)), 1e-15);
  EXPECT_NEAR(weighted_tau(pair_of(s, t)), weighted_tau(pair_of(ps, pt)), 1e-14);
}

INSTANTIATE_TEST_SUITE_P(Seeds, TauProperty, ::testing::Range(0, 40));

TEST(RankHub, SingleModel) {
  const RankReport r = rank_hub({{"only", 0.5}}, std::vector<double>{80.0});
  EXPECT_EQ(r.ordering, std::vector<std::string>{"only"});
  EXPECT_FALSE(r.tau.has_value());
  EXPECT_FALSE(r.tau_w.has_value());
}

TEST(RankHub, Cifar10FourthModelRanksFirst) {
  const auto& tables = testing::hub_tables();
  const auto it = std::find_if(tables.begin(), tables.end(), [](const auto& t) { return t.dataset == "CIFAR10"; });
  ASSERT_NE(it, tables.end());
  std::vector<ScoredModel> models;
  for (std::size_t i = 0; i < it->scores.size(); ++i) models.push_back({"m" + std::to_string(i), it->scores[i]});
  const RankReport r = rank_hub(models, it->truths);
  EXPECT_EQ(r.ordering.front(), "m3");
  EXPECT_DOUBLE_EQ(r.ordered_scores.front(), 0.469);
  ASSERT_TRUE(r.tau_w.has_value());
  EXPECT_NEAR(*r.tau_w, 0.82, 0.015);
}

TEST(RankHub, EqualScoresOrderByIdAndFlagTauW) {
  const RankReport r = rank_hub({{"c", 1.0}, {"a", 1.0}, {"b", 1.0}}, std::vector<double>{1, 2, 3});
  EXPECT_EQ(r.ordering, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_FALSE(r.tau_w.has_value());
  ASSERT_TRUE(r.tau_w_error.has_value());
  EXPECT_DOUBLE_EQ(*r.tau, 0.0);
}

TEST(RankHub, DuplicateIdsRejected) {
  EXPECT_THROW(rank_hub({{"a", 1.0}, {"a", 2.0}}), InputError);
  EXPECT_THROW(rank_hub({}), InputError);
}

TEST(RankHub, StableAcrossRepeats) {
  Gen g(9);
  std::vector<ScoredModel> models;
  for (int i = 0; i < 30; ++i) models.push_back({"model-" + std::to_string(i), static_cast<double>(g.integer(0, 5))});
  EXPECT_EQ(rank_hub(models).ordering, rank_hub(models).ordering);
  auto shuffled = models;
  std::shuffle(shuffled.begin(), shuffled.end(), g.engine());
  EXPECT_EQ(rank_hub(models).ordering, rank_hub(shuffled).ordering);
}

TEST(SelectTopK, FigureTenHub) {
  const RankReport r = rank_hub(
      {{"KeyPoint", 0.914}, {"MoCo", 0.934}, {"DeepLab", 0.913}, {"ImageNet Sup.", 0.947}, {"MaskRCNN", 0.936}});
  EXPECT_EQ(select_top_k(r), (std::vector<std::string>{"ImageNet Sup.", "MaskRCNN", "MoCo"}));
  EXPECT_EQ(select_top_k(r, 1), std::vector<std::string>{"ImageNet Sup."});
  EXPECT_EQ(select_top_k(r, 5).size(), 5u);
  EXPECT_THROW(select_top_k(r, 0), InputError);
  EXPECT_THROW(select_top_k(r, 6), InputError);
}

TEST(TruthDirection, NamesRoundTrip) {
  EXPECT_EQ(parse_truth_direction("lower_better"), TruthDirection::lower_better);
  EXPECT_EQ(parse_truth_direction(to_string(TruthDirection::higher_better)), TruthDirection::higher_better);
  EXPECT_THROW(parse_truth_direction("sideways"), InputError);
}

}  // namespace
}  // namespace hubrank
