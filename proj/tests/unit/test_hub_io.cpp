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

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "hubrank/hub_io.hpp"
#include "support/generators.hpp"
#include "support/temp_dir.hpp"

namespace hubrank::io {
namespace {

using hubrank::testing::Gen;
using hubrank::testing::TempDir;

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

void write_bytes(const fs::path& p, const Bytes& b) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

Bytes header(std::uint64_t rows, std::uint64_t cols, std::uint32_t type = 1, std::uint32_t version = 1) {
  Bytes b{'P', 'T', 'M', 'F'};
  detail::put(b, version);
  detail::put(b, rows);
  detail::put(b, cols);
  detail::put(b, type);
  return b;
}

std::size_t offset_of(const auto& call) {
  try {
    call();
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no FormatError";
  return FormatError::npos;
}

TEST(FeatureFile, RoundTripIsBitExact) {
  TempDir dir;
  Gen g(1);
  for (int rep = 0; rep < 10; ++rep) {
    MatrixXd m = g.matrix(g.integer(1, 40), g.integer(1, 40), g.log_uniform(1e-200, 1e200));
    m(0, 0) = -0.0;
    if (m.size() > 1) m(m.rows() - 1, m.cols() - 1) = std::numeric_limits<double>::denorm_min();
    write_feature_file(dir / "f.ptmf", FeatureMatrix(m));
    const FeatureMatrix back = read_feature_file(dir / "f.ptmf");
    ASSERT_EQ(back.samples(), m.rows());
    ASSERT_EQ(back.dims(), m.cols());
    EXPECT_EQ(std::memcmp(back.data().data(), m.data(), sizeof(double) * static_cast<std::size_t>(m.size())), 0);
  }
}

TEST(FeatureFile, LayoutIsDocumented) {
  Bytes b;
  MatrixXd m(2, 1);
  m << 1.0, -2.0;
  encode_matrix(b, m);
  ASSERT_EQ(b.size(), kFeatureHeaderSize + 16);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "PTMF");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[16], 1);
  EXPECT_EQ(b[24], 1);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[kFeatureHeaderSize + 8 + i]) << (8 * i);
  EXPECT_EQ(std::bit_cast<double>(bits), -2.0);
}

TEST(FeatureFile, Float32IsUpcastRowMajor) {
  TempDir dir;
  Bytes b = header(2, 2, 2);
  for (float v : {1.5f, -2.25f, 3.0f, 0.1f}) detail::put(b, std::bit_cast<std::uint32_t>(v));
  write_bytes(dir / "f32.ptmf", b);
  const MatrixXd m = read_matrix_file(dir / "f32.ptmf");
  EXPECT_EQ(m(0, 1), -2.25);
  EXPECT_EQ(m(1, 0), 3.0);
  EXPECT_EQ(m(1, 1), static_cast<double>(0.1f));
}

TEST(FeatureFile, BadMagicAtOffsetZero) {
  TempDir dir;
  Bytes b = header(1, 1);
  b[0] = 'X';
  detail::put<std::uint64_t>(b, 0);
  write_bytes(dir / "bad.ptmf", b);
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "bad.ptmf"); }), 0u);
}

TEST(FeatureFile, EmptyShapesRejected) {
  TempDir dir;
  write_bytes(dir / "a.ptmf", header(0, 5));
  write_bytes(dir / "b.ptmf", header(5, 0));
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "a.ptmf"); }), 8u);
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "b.ptmf"); }), 8u);
  EXPECT_THROW(write_matrix_file(dir / "c.ptmf", MatrixXd(0, 3)), InputError);
}

TEST(FeatureFile, TruncationAndOverflow) {
  TempDir dir;
  Bytes b = header(2, 2);
  detail::put<std::uint64_t>(b, 0);
  write_bytes(dir / "short.ptmf", b);
  EXPECT_THROW(read_feature_file(dir / "short.ptmf"), FormatError);

  Bytes partial = header(2, 2);
  partial.resize(12);
  write_bytes(dir / "hdr.ptmf", partial);
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "hdr.ptmf"); }), 8u);

  write_bytes(dir / "huge.ptmf", header(std::uint64_t{1} << 62, std::uint64_t{1} << 62));
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "huge.ptmf"); }), 8u);
}

TEST(FeatureFile, VersionTypeAndTrailingBytes) {
  TempDir dir;
  write_bytes(dir / "v.ptmf", header(1, 1, 1, 7));
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "v.ptmf"); }), 4u);
  Bytes t = header(1, 1, 9);
  detail::put<std::uint64_t>(t, 0);
  write_bytes(dir / "t.ptmf", t);
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "t.ptmf"); }), 24u);
  Bytes extra = header(1, 1);
  detail::put<std::uint64_t>(extra, 0);
  extra.push_back(0);
  write_bytes(dir / "x.ptmf", extra);
  EXPECT_EQ(offset_of([&] { read_feature_file(dir / "x.ptmf"); }), 36u);
}

TEST(FeatureFile, NonFiniteValuesRejected) {
  TempDir dir;
  Bytes b = header(1, 2);
  detail::put(b, std::bit_cast<std::uint64_t>(1.0));
  detail::put(b, std::bit_cast<std::uint64_t>(std::numeric_limits<double>::quiet_NaN()));
  write_bytes(dir / "nan.ptmf", b);
  EXPECT_THROW(read_feature_file(dir / "nan.ptmf"), FormatError);
}

TEST(FeatureFile, MissingFile) { EXPECT_THROW(read_feature_file("/nonexistent/x.ptmf"), InputError); }

TEST(ClassCsv, ParsesIndices) {
  EXPECT_EQ(parse_class_csv("0,2,1,0"), (std::vector<int>{0, 2, 1, 0}));
  EXPECT_EQ(parse_class_csv("0\n2\n1\n"), (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(parse_class_csv(" 3 , 1,\r\n0 "), (std::vector<int>{3, 1, 0}));
}

TEST(ClassCsv, RejectsGarbage) {
  EXPECT_THROW(parse_class_csv(""), FormatError);
  EXPECT_THROW(parse_class_csv("0,,1"), FormatError);
  EXPECT_THROW(parse_class_csv(",1"), FormatError);
  EXPECT_THROW(parse_class_csv("0,1x"), FormatError);
  EXPECT_THROW(parse_class_csv("0,-1"), FormatError);
  EXPECT_THROW(parse_class_csv("0,1.5"), FormatError);
  EXPECT_EQ(offset_of([] { parse_class_csv("0,1,a"); }), 4u);
}

TEST(ReadLabels, ClassificationWithDeclaredClasses) {
  TempDir dir;
  write_text(dir / "y.csv", "0,2,1,0");
  const TaskLabels l = read_labels(dir / "y.csv", TaskKind::classification, 3);
  EXPECT_EQ(l.class_indices(), (std::vector<int>{0, 2, 1, 0}));
  EXPECT_EQ(l.dims(), 3);
  EXPECT_EQ(read_labels(dir / "y.csv", TaskKind::classification, 5).dims(), 5);
  EXPECT_THROW(read_labels(dir / "y.csv", TaskKind::classification, 2), InputError);
}

TEST(ReadLabels, RegressionFromMatrix) {
  TempDir dir;
  Gen g(2);
  const MatrixXd t = g.matrix(7, 2);
  write_matrix_file(dir / "y.ptmf", t);
  const TaskLabels l = read_labels(dir / "y.ptmf", TaskKind::regression);
  EXPECT_EQ(l.kind(), TaskKind::regression);
  EXPECT_EQ(l.targets(), t);
}

TEST(ClassCsv, WriteThenRead) {
  TempDir dir;
  const std::vector<int> c{4, 0, 0, 3, 1};
  write_class_csv(dir / "c.csv", c);
  EXPECT_EQ(read_labels(dir / "c.csv", TaskKind::classification).class_indices(), c);
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_feature_file(dir / "a.ptmf", FeatureMatrix(MatrixXd::Ones(3, 2)));
    write_text(dir / "y.csv", "0,1,0");
  }
  HubManifest read(const std::string& text) {
    write_text(dir / "hub.json", text);
    return read_manifest(dir / "hub.json");
  }
  TempDir dir;
};

TEST_F(ManifestTest, FullManifest) {
  const HubManifest m = read(R"({"dataset": "toy", "task": "classification", "truth_direction": "lower_better",
    "labels": "y.csv", "num_classes": 2,
    "models": [{"id": "a", "features": "a.ptmf", "truth": 0.5}, {"id": "b", "score": -1.25, "truth": 0.7}]})");
  EXPECT_EQ(m.dataset, "toy");
  EXPECT_EQ(m.truth_direction, TruthDirection::lower_better);
  ASSERT_EQ(m.models.size(), 2u);
  EXPECT_EQ(*m.models[0].feature_file, dir / "a.ptmf");
  EXPECT_EQ(*m.models[1].score, -1.25);
  EXPECT_EQ(*m.labels_file, dir / "y.csv");
  EXPECT_EQ(m.num_classes, 2);
  EXPECT_TRUE(m.has_truths());
}

TEST_F(ManifestTest, SchemaViolations) {
  EXPECT_THROW(read(R"({"models": [{"id": "a", "score": 1}, {"id": "a", "score": 2}]})"), FormatError);
  EXPECT_THROW(read(R"({"models": []})"), FormatError);
  EXPECT_THROW(read(R"({"models": [{"id": "a"}]})"), FormatError);
  EXPECT_THROW(read(R"({"models": [{"id": "", "score": 1}]})"), FormatError);
  EXPECT_THROW(read(R"({"models": [{"id": "a", "score": "high"}]})"), FormatError);
  EXPECT_THROW(read(R"({"modles": [{"id": "a", "score": 1}]})"), FormatError);
  EXPECT_THROW(read(R"({"models": [{"id": "a", "score": 1, "extra": 0}]})"), FormatError);
  EXPECT_THROW(read(R"({"task": "clustering", "models": [{"id": "a", "score": 1}]})"), FormatError);
  EXPECT_THROW(read(R"({"models": [{"id": "a", "features": "a.ptmf"}]})"), FormatError);
  EXPECT_THROW(read(R"({"models": [{"id": "a", "score": 1})"), FormatError);
  EXPECT_THROW(read(R"({"models": [{"id": "a", "score": 1}]} trailing)"), FormatError);
}

TEST_F(ManifestTest, MissingFiles) {
  EXPECT_THROW(read(R"({"labels": "y.csv", "models": [{"id": "a", "features": "gone.ptmf"}]})"), InputError);
  EXPECT_THROW(read(R"({"labels": "gone.csv", "models": [{"id": "a", "features": "a.ptmf"}]})"), InputError);
}

TEST_F(ManifestTest, PartialTruths) {
  const HubManifest m = read(R"({"models": [{"id": "a", "score": 1, "truth": 2}, {"id": "b", "score": 3}]})");
  EXPECT_FALSE(m.has_truths());
}

PredictiveHead sample_head(Gen& g, bool skip_one) {
  auto c = hubrank::testing::cluster_instance(g, 80, 6, 4);
  if (skip_one)
    for (auto& l : c.labels)
      if (l == 3) l = 0;
  const FeatureMatrix f(c.features);
  const SvdFactors svd = decompose(f);
  const LogMeReport rep = compute_logme(f, svd, TaskLabels::classification(c.labels, 4));
  return make_predictive_head(svd, rep, "model-x", content_hash(f));
}

TEST(HeadFile, RoundTripPreservesPredictions) {
  TempDir dir;
  Gen g(3);
  for (bool skip : {false, true}) {
    const PredictiveHead h = sample_head(g, skip);
    write_head(dir / "h.ptmh", h);
    const PredictiveHead back = read_head(dir / "h.ptmh", h.feature_hash);
    EXPECT_EQ(back.model_id, "model-x");
    EXPECT_EQ(back.samples, 80);
    EXPECT_EQ(back.weights, h.weights);
    EXPECT_EQ(back.right, h.right);
    EXPECT_EQ(back.evaluated, h.evaluated);
    for (int c = 0; c < 4; ++c) {
      if (!h.evaluated[static_cast<std::size_t>(c)]) {
        EXPECT_THROW(predictive_distribution(back, c, VectorXd::Ones(6)), InputError);
        continue;
      }
      for (int rep = 0; rep < 5; ++rep) {
        const VectorXd f = g.vector(6);
        const auto a = predictive_distribution(h, c, f), b = predictive_distribution(back, c, f);
        EXPECT_NEAR(a.mean, b.mean, 1e-12);
        EXPECT_NEAR(a.variance, b.variance, 1e-12);
      }
    }
    EXPECT_EQ(encode_head(back), encode_head(h));
  }
}

TEST(HeadFile, HashMismatchRejected) {
  TempDir dir;
  Gen g(4);
  write_head(dir / "h.ptmh", sample_head(g, false));
  EXPECT_THROW(read_head(dir / "h.ptmh", std::string(64, '0')), InputError);
}

TEST(HeadFile, CorruptionRejected) {
  Gen g(5);
  const Bytes good = encode_head(sample_head(g, false));
  Bytes bad_magic = good;
  bad_magic[3] = 'F';
  EXPECT_EQ(offset_of([&] { decode_head(bad_magic); }), 0u);
  for (std::size_t cut : {std::size_t{6}, std::size_t{20}, good.size() / 2, good.size() - 1}) {
    Bytes t(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(decode_head(t), FormatError) << cut;
  }
  Bytes trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(decode_head(trailing), FormatError);
}

}  // namespace
}  // namespace hubrank::io
