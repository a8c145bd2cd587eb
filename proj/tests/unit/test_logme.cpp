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

#include <cstdlib>

#include <gtest/gtest.h>

#include "hubrank/logme.hpp"
#include "support/generators.hpp"
#include "support/quality_toys.hpp"

namespace hubrank {
namespace {

using testing::Gen;

TEST(TaskLabels, OneHotColumnsAreZeroOne) {
  const TaskLabels t = TaskLabels::classification({0, 2, 1, 0}, 3);
  EXPECT_EQ(t.dims(), 3);
  EXPECT_EQ(t.column(0), (VectorXd(4) << 1, 0, 0, 1).finished());
  EXPECT_EQ(t.column(1), (VectorXd(4) << 0, 0, 1, 0).finished());
  EXPECT_EQ(t.column(2), (VectorXd(4) << 0, 1, 0, 0).finished());
}

TEST(TaskLabels, ValidatesClassification) {
  EXPECT_THROW(TaskLabels::classification({0, 3}, 3), InputError);
  EXPECT_THROW(TaskLabels::classification({0, -1}, 3), InputError);
  EXPECT_THROW(TaskLabels::classification({1, 1, 1}, 3), InputError);
  EXPECT_THROW(TaskLabels::classification({0, 1}, 1), InputError);
  EXPECT_EQ(TaskLabels::classification({0, 4, 1}).dims(), 5);
}

TEST(TaskLabels, KindNamesRoundTrip) {
  EXPECT_EQ(parse_task_kind("regression"), TaskKind::regression);
  EXPECT_EQ(parse_task_kind(to_string(TaskKind::classification)), TaskKind::classification);
  EXPECT_THROW(parse_task_kind("ranking"), InputError);
}

TEST(ComputeLogMe, AverageOfPerDimensionEvidence) {
  Gen g(21);
  const auto c = testing::cluster_instance(g, 120, 6, 4);
  const FeatureMatrix f(c.features);
  const LogMeReport r = compute_logme(f, TaskLabels::classification(c.labels, 4));
  ASSERT_EQ(r.per_dimension.size(), 4u);
  double sum = 0;
  for (const auto& d : r.per_dimension) sum += d.solution.normalized_evidence;
  EXPECT_NEAR(r.logme, sum / 4, 1e-12);
  EXPECT_EQ(r.samples, 120);
  EXPECT_EQ(r.dims, 6);
  EXPECT_EQ(r.label_dims, 4);
  EXPECT_EQ(r.backend, Backend::fixed_point);
}

TEST(ComputeLogMe, DimensionsMatchDirectEvidenceRuns) {
  Gen g(22);
  const auto c = testing::cluster_instance(g, 90, 5, 3);
  const FeatureMatrix f(c.features);
  const TaskLabels labels = TaskLabels::classification(c.labels, 3);
  const LogMeReport r = compute_logme(f, labels);
  const SvdFactors svd = decompose(f);
  for (int k = 0; k < 3; ++k) {
    const EvidenceSolution direct = maximize_evidence_fixed_point(svd, LabelVector(labels.column(k)));
    ASSERT_NE(r.find(k), nullptr);
    EXPECT_DOUBLE_EQ(r.find(k)->normalized_evidence, direct.normalized_evidence);
  }
}

TEST(ComputeLogMe, AbsentClassesAreSkipped) {
  Gen g(23);
  const auto c = testing::cluster_instance(g, 60, 4, 3);
  const LogMeReport r = compute_logme(FeatureMatrix(c.features), TaskLabels::classification(c.labels, 5));
  ASSERT_EQ(r.skipped.size(), 2u);
  EXPECT_EQ(r.skipped[0].index, 3);
  EXPECT_EQ(r.skipped[0].reason, "class absent from sample");
  EXPECT_EQ(r.per_dimension.size(), 3u);
  const LogMeReport three = compute_logme(FeatureMatrix(c.features), TaskLabels::classification(c.labels, 3));
  EXPECT_NEAR(r.logme, three.logme, 1e-12);
}

TEST(ComputeLogMe, ConstantRegressionColumnsAreSkipped) {
  Gen g(24);
  const auto inst = testing::linear_instance(g, 80, 5);
  MatrixXd targets(80, 2);
  targets.col(0) = inst.labels;
  targets.col(1).setConstant(3.0);
  const LogMeReport r = compute_logme(FeatureMatrix(inst.features), TaskLabels::regression(targets));
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].reason, "constant target column");
}

TEST(ComputeLogMe, NoUsableDimensionIsAnError) {
  Gen g(25);
  const FeatureMatrix f(g.matrix(30, 3));
  try {
    compute_logme(f, TaskLabels::regression(MatrixXd::Ones(30, 2)));
    FAIL() << "expected DegenerateLabelsError";
  } catch (const DegenerateLabelsError& e) {
    EXPECT_STREQ(e.what(), "no usable label dimension");
  }
}

TEST(ComputeLogMe, SampleCountMismatchIsInputError) {
  Gen g(26);
  EXPECT_THROW(compute_logme(FeatureMatrix(g.matrix(10, 3)), TaskLabels::classification({0, 1, 0}, 2)), InputError);
}

TEST(ComputeLogMe, DuplicatedFeaturesGiveSameScore) {
  Gen g(27);
  const auto c = testing::cluster_instance(g, 150, 8, 3);
  MatrixXd dup(150, 16);
  dup << c.features, c.features;
  const TaskLabels labels = TaskLabels::classification(c.labels, 3);
  EXPECT_NEAR(compute_logme(FeatureMatrix(c.features), labels).logme, compute_logme(FeatureMatrix(dup), labels).logme,
              1e-8);
}

TEST(ComputeLogMe, BackendsAgree) {
  Gen g(28);
  const auto c = testing::cluster_instance(g, 200, 12, 5);
  const FeatureMatrix f(c.features);
  const TaskLabels labels = TaskLabels::classification(c.labels, 5);
  const double fp = compute_logme(f, labels, Backend::fixed_point).logme;
  EXPECT_NEAR(compute_logme(f, labels, Backend::naive).logme, fp, 1e-6);
  EXPECT_NEAR(compute_logme(f, labels, Backend::mackay).logme, fp, 1e-6);
}

class RelabelProperty : public ::testing::TestWithParam<int> {};

TEST_P(RelabelProperty, PermutingClassIdsKeepsScore) {
  Gen g(7000 + GetParam());
  const int classes = static_cast<int>(g.integer(2, 6));
  const auto c = testing::cluster_instance(g, g.integer(40, 200), g.integer(2, 12), classes, g.uniform(0.5, 3));
  const auto perm = g.permutation(static_cast<std::size_t>(classes));
  std::vector<int> relabeled;
  for (int k : c.labels) relabeled.push_back(static_cast<int>(perm[static_cast<std::size_t>(k)]));
  const FeatureMatrix f(c.features);
  EXPECT_NEAR(compute_logme(f, TaskLabels::classification(c.labels, classes)).logme,
              compute_logme(f, TaskLabels::classification(relabeled, classes)).logme, 1e-10);
}

TEST_P(RelabelProperty, RegressionScoreIsMeanOfOneDimensionalScores) {
  Gen g(7100 + GetParam());
  const Index n = g.integer(30, 150);
  const MatrixXd f = g.matrix(n, g.integer(1, 10));
  const int dims = static_cast<int>(g.integer(1, 5));
  MatrixXd targets(n, dims);
  for (int k = 0; k < dims; ++k) targets.col(k) = f * g.vector(f.cols()) + g.vector(n, g.log_uniform(0.1, 3));
  const FeatureMatrix fm(f);
  double mean = 0;
  for (int k = 0; k < dims; ++k)
    mean += compute_logme_regression_1d(fm, LabelVector(targets.col(k))).normalized_evidence / dims;
  EXPECT_NEAR(compute_logme(fm, TaskLabels::regression(targets)).logme, mean, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RelabelProperty, ::testing::Range(0, 20));

TEST(ComputeLogMe, IdenticalTargetColumnsEqualOneDimensionalValue) {
  Gen g(29);
  const auto inst = testing::linear_instance(g, 70, 4);
  MatrixXd targets(70, 3);
  targets << inst.labels, inst.labels, inst.labels;
  const FeatureMatrix f(inst.features);
  EXPECT_NEAR(compute_logme(f, TaskLabels::regression(targets)).logme,
              compute_logme_regression_1d(f, LabelVector(inst.labels)).normalized_evidence, 1e-12);
}

TEST(ComputeLogMe, FourTargetRegressionAveragesDimensions) {
  Gen g(30);
  const MatrixXd f = g.matrix(200, 16);
  const MatrixXd targets = f * g.matrix(16, 4) + g.matrix(200, 4, 0.3);
  const LogMeReport r = compute_logme(FeatureMatrix(f), TaskLabels::regression(targets));
  double sum = 0;
  for (const auto& d : r.per_dimension) sum += d.solution.normalized_evidence;
  EXPECT_NEAR(r.logme, sum / 4, 1e-12);
}

TEST(ComputeLogMe, TokenRowsAreOrdinarySamples) {
  // Sequence tagging flattened upstream: each token is a row.
  Gen g(31);
  const auto c = testing::cluster_instance(g, 7 * 23, 10, 4);
  const LogMeReport r = compute_logme(FeatureMatrix(c.features), TaskLabels::classification(c.labels, 4));
  EXPECT_EQ(r.samples, 161);
  EXPECT_TRUE(std::isfinite(r.logme));
}

TEST(ComputeLogMe, ResultIndependentOfThreadCount) {
  Gen g(32);
  const auto c = testing::cluster_instance(g, 120, 6, 6);
  const FeatureMatrix f(c.features);
  const TaskLabels labels = TaskLabels::classification(c.labels, 6);
  ::setenv("HUBRANK_THREADS", "1", 1);
  const double serial = compute_logme(f, labels).logme;
  ::setenv("HUBRANK_THREADS", "4", 1);
  const double parallel = compute_logme(f, labels).logme;
  ::unsetenv("HUBRANK_THREADS");
  EXPECT_DOUBLE_EQ(serial, parallel);
}

TEST(FeatureQuality, ClusterNoiseLowersScore) {
  const auto ladder = testing::cluster_ladder(41, {0.0, 0.5, 1.0, 2.0});
  EXPECT_TRUE(testing::strictly_decreasing(ladder.logme))
      << ladder.logme[0] << " " << ladder.logme[1] << " " << ladder.logme[2] << " " << ladder.logme[3];
}

TEST(FeatureQuality, RegressionNoiseLowersScore) {
  const auto ladder = testing::regression_ladder(42, {0.0, 0.1, 0.3, 1.0});
  EXPECT_TRUE(testing::strictly_decreasing(ladder.logme))
      << ladder.logme[0] << " " << ladder.logme[1] << " " << ladder.logme[2] << " " << ladder.logme[3];
}

TEST(Intercept, AppendsOnesColumn) {
  const FeatureMatrix f(MatrixXd::Constant(3, 2, 5.0));
  const FeatureMatrix b = with_intercept(f);
  EXPECT_EQ(b.dims(), 3);
  EXPECT_EQ(b.data().col(2), VectorXd::Ones(3));
}

}  // namespace
}  // namespace hubrank
