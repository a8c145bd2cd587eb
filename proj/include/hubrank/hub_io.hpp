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

#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hubrank/content_hash.hpp"
#include "hubrank/errors.hpp"
#include "hubrank/features.hpp"
#include "hubrank/logme.hpp"
#include "hubrank/predictive.hpp"
#include "hubrank/ranking.hpp"

namespace hubrank::io {

namespace fs = std::filesystem;

// PTMF layout (little-endian):
//   0  magic "PTMF"
//   4  u32 version (1)
//   8  u64 rows
//  16  u64 cols
//  24  u32 element type: 1 = float64, 2 = float32 (widened on read)
//  28  rows * cols elements, row-major
inline constexpr char kFeatureMagic[4] = {'P', 'T', 'M', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderSize = 28;
enum class ElementType : std::uint32_t { float64 = 1, float32 = 2 };

// Head dump: "PTMH", u32 version, u64 JSON byte length, the JSON header, then three PTMF
// blocks: right singular vectors (D x r), singular values (r x 1), weights (D x C).
inline constexpr char kHeadMagic[4] = {'P', 'T', 'M', 'H'};
inline constexpr std::uint32_t kHeadVersion = 1;

using Bytes = std::vector<unsigned char>;

namespace detail {

template <class T>
void put(Bytes& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffu));
}

/// Bounds-checked little-endian reader; errors report the offending byte offset.
class Reader {
 public:
  Reader(const Bytes& data, std::size_t offset = 0) : data_(data), pos_(offset) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  template <class T>
  T get(const char* what) {
    if (remaining() < sizeof(T)) throw FormatError(std::string("truncated ") + what, pos_);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  void expect_magic(const char (&magic)[4]) {
    if (remaining() < 4 || std::memcmp(data_.data() + pos_, magic, 4) != 0)
      throw FormatError(std::string("bad magic, expected \"") + std::string(magic, 4) + "\"", pos_);
    pos_ += 4;
  }

  const unsigned char* take(std::size_t n, const char* what) {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, data_.size());
    const unsigned char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  const Bytes& data_;
  std::size_t pos_;
};

inline Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const fs::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace detail

inline void encode_matrix(Bytes& out, const MatrixXd& m) {
  out.insert(out.end(), kFeatureMagic, kFeatureMagic + 4);
  detail::put<std::uint32_t>(out, kFeatureVersion);
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(ElementType::float64));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) detail::put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(i, j)));
}

/// Decodes one PTMF block at the reader position. Empty shapes are only accepted when
/// `allow_empty` is set (used for rank-0 blocks inside head dumps).
inline MatrixXd decode_matrix(detail::Reader& in, bool allow_empty = false) {
  const std::size_t start = in.offset();
  in.expect_magic(kFeatureMagic);
  const std::size_t version_at = in.offset();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kFeatureVersion)
    throw FormatError("unsupported PTMF version " + std::to_string(version), version_at);
  const std::size_t dims_at = in.offset();
  const auto rows = in.get<std::uint64_t>("row count");
  const auto cols = in.get<std::uint64_t>("column count");
  if (!allow_empty && (rows == 0 || cols == 0))
    throw FormatError("invalid dimensions " + std::to_string(rows) + "x" + std::to_string(cols), dims_at);
  const std::size_t type_at = in.offset();
  const auto type = in.get<std::uint32_t>("element type");
  std::size_t width = 0;
  if (type == static_cast<std::uint32_t>(ElementType::float64)) width = 8;
  else if (type == static_cast<std::uint32_t>(ElementType::float32)) width = 4;
  else throw FormatError("unknown element type " + std::to_string(type), type_at);

  constexpr auto kMaxIndex = static_cast<std::uint64_t>(std::numeric_limits<Index>::max());
  if (rows > kMaxIndex || cols > kMaxIndex || (cols != 0 && rows > kMaxIndex / cols) ||
      (cols != 0 && rows * cols > std::numeric_limits<std::size_t>::max() / width))
    throw FormatError("dimension overflow " + std::to_string(rows) + "x" + std::to_string(cols), dims_at);
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  if (in.remaining() < count * width)
    throw FormatError("truncated data: block at offset " + std::to_string(start) + " needs " +
                          std::to_string(count * width) + " bytes, " + std::to_string(in.remaining()) +
                          " available",
                      in.offset() + in.remaining());
  const unsigned char* p = in.take(count * width, "data");

  MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < width; ++b) bits |= static_cast<std::uint64_t>(p[k * width + b]) << (8 * b);
    const double v = width == 8 ? std::bit_cast<double>(bits)
                                : static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)));
    m(static_cast<Index>(k / cols), static_cast<Index>(k % cols)) = v;
  }
  return m;
}

inline MatrixXd read_matrix_file(const fs::path& path) {
  const Bytes bytes = detail::read_file(path);
  detail::Reader in(bytes);
  MatrixXd m = decode_matrix(in);
  if (in.remaining() != 0) throw FormatError("trailing bytes after matrix data in '" + path.string() + "'", in.offset());
  return m;
}

inline void write_matrix_file(const fs::path& path, const MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InputError("refusing to write an empty matrix");
  Bytes bytes;
  encode_matrix(bytes, m);
  detail::write_file(path, bytes);
}

inline FeatureMatrix read_feature_file(const fs::path& path) {
  MatrixXd m = read_matrix_file(path);
  try {
    return FeatureMatrix(std::move(m));
  } catch (const InputError& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

inline void write_feature_file(const fs::path& path, const FeatureMatrix& f) { write_matrix_file(path, f.data()); }

/// Class indices separated by commas and/or whitespace, e.g. "0,2,1,0".
inline std::vector<int> parse_class_csv(std::string_view text) {
  std::vector<int> out;
  std::size_t i = 0;
  bool expect_value = true;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == ',') {
      if (expect_value) throw FormatError("empty field in class label CSV", i);
      expect_value = true;
      ++i;
      continue;
    }
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), v);
    const std::size_t consumed = static_cast<std::size_t>(ptr - (text.data() + i));
    if (ec != std::errc() || consumed == 0) throw FormatError("expected a class index", i);
    if (v < 0) throw FormatError("negative class index", i);
    i += consumed;
    if (i < text.size() && !is_space(text[i]) && text[i] != ',')
      throw FormatError("unexpected character '" + std::string(1, text[i]) + "' in class label CSV", i);
    out.push_back(v);
    expect_value = false;
  }
  if (out.empty()) throw FormatError("no class labels found", 0);
  return out;
}

/// Classification labels come from CSV; regression targets from an n x C PTMF matrix.
inline TaskLabels read_labels(const fs::path& path, TaskKind kind, std::optional<int> num_classes = std::nullopt) {
  if (kind == TaskKind::regression) return TaskLabels::regression(read_matrix_file(path));
  const Bytes bytes = detail::read_file(path);
  std::vector<int> idx = parse_class_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  return num_classes ? TaskLabels::classification(std::move(idx), *num_classes)
                     : TaskLabels::classification(std::move(idx));
}

inline void write_class_csv(const fs::path& path, const std::vector<int>& classes) {
  std::string text;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) text += ',';
    text += std::to_string(classes[i]);
  }
  text += '\n';
  detail::write_file(path, Bytes(text.begin(), text.end()));
}

struct ManifestModel {
  std::string id;
  std::optional<fs::path> feature_file;
  /// Precomputed transferability score, used instead of features when present.
  std::optional<double> score;
  std::optional<double> truth;
};

struct HubManifest {
  std::string dataset;
  TaskKind task = TaskKind::classification;
  TruthDirection truth_direction = TruthDirection::higher_better;
  std::optional<fs::path> labels_file;
  std::optional<int> num_classes;
  std::vector<ManifestModel> models;

  bool has_truths() const {
    for (const auto& m : models)
      if (!m.truth) return false;
    return !models.empty();
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace detail

/// JSON manifest; relative paths resolve against the manifest's directory.
inline HubManifest read_manifest(const fs::path& path) {
  const Bytes bytes = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw FormatError("manifest must be a JSON object");
  detail::reject_unknown(j, {"dataset", "task", "truth_direction", "labels", "num_classes", "models"}, "manifest");

  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  HubManifest m;
  try {
    m.dataset = j.value("dataset", std::string());
    m.task = parse_task_kind(j.value("task", std::string("classification")));
    m.truth_direction = parse_truth_direction(j.value("truth_direction", std::string("higher_better")));
    if (j.contains("labels")) m.labels_file = resolve(j.at("labels").get<std::string>());
    if (j.contains("num_classes")) m.num_classes = j.at("num_classes").get<int>();
    if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty())
      throw FormatError("manifest needs a non-empty 'models' array");
    std::set<std::string> ids;
    for (const auto& e : j.at("models")) {
      if (!e.is_object()) throw FormatError("manifest model entries must be objects");
      detail::reject_unknown(e, {"id", "features", "score", "truth"}, "manifest model entry");
      ManifestModel mm;
      mm.id = e.at("id").get<std::string>();
      if (mm.id.empty()) throw FormatError("manifest model id is empty");
      if (!ids.insert(mm.id).second) throw FormatError("duplicate model id '" + mm.id + "' in manifest");
      if (e.contains("features")) mm.feature_file = resolve(e.at("features").get<std::string>());
      if (e.contains("score")) mm.score = e.at("score").get<double>();
      if (e.contains("truth")) mm.truth = e.at("truth").get<double>();
      if (!mm.feature_file && !mm.score)
        throw FormatError("model '" + mm.id + "' needs either 'features' or 'score'");
      m.models.push_back(std::move(mm));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest schema violation: ") + e.what());
  } catch (const InputError& e) {
    throw FormatError(std::string("manifest schema violation: ") + e.what());
  }

  bool needs_labels = false;
  for (const auto& mm : m.models) {
    if (mm.feature_file && !mm.score) {
      needs_labels = true;
      if (!fs::exists(*mm.feature_file))
        throw InputError("feature file '" + mm.feature_file->string() + "' for model '" + mm.id + "' does not exist");
    }
  }
  if (needs_labels && !m.labels_file) throw FormatError("manifest with feature files needs 'labels'");
  if (m.labels_file && !fs::exists(*m.labels_file))
    throw InputError("labels file '" + m.labels_file->string() + "' does not exist");
  return m;
}

namespace detail {

inline nlohmann::json nullable(const std::vector<double>& v, const std::vector<bool>& mask) {
  nlohmann::json a = nlohmann::json::array();
  for (std::size_t i = 0; i < v.size(); ++i) a.push_back(mask[i] ? nlohmann::json(v[i]) : nlohmann::json(nullptr));
  return a;
}

}  // namespace detail

inline Bytes encode_head(const PredictiveHead& h) {
  nlohmann::json j;
  j["model_id"] = h.model_id;
  j["feature_hash"] = h.feature_hash;
  j["samples"] = h.samples;
  j["feature_dim"] = h.feature_dim();
  j["rank"] = h.singular_values.size();
  j["classes"] = h.classes();
  j["alpha"] = detail::nullable(h.alpha, h.evaluated);
  j["beta"] = detail::nullable(h.beta, h.evaluated);
  j["evaluated"] = h.evaluated;
  const std::string text = j.dump();

  Bytes out(kHeadMagic, kHeadMagic + 4);
  detail::put<std::uint32_t>(out, kHeadVersion);
  detail::put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  encode_matrix(out, h.right);
  encode_matrix(out, MatrixXd(h.singular_values));
  encode_matrix(out, h.weights);
  return out;
}

inline PredictiveHead decode_head(const Bytes& bytes) {
  detail::Reader in(bytes);
  in.expect_magic(kHeadMagic);
  const std::size_t version_at = in.offset();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kHeadVersion) throw FormatError("unsupported head version " + std::to_string(version), version_at);
  const auto len = in.get<std::uint64_t>("header length");
  const std::size_t json_at = in.offset();
  if (len > in.remaining()) throw FormatError("truncated head header", json_at);
  const unsigned char* p = in.take(static_cast<std::size_t>(len), "head header");

  PredictiveHead h;
  try {
    const auto j = nlohmann::json::parse(p, p + len);
    detail::reject_unknown(j, {"model_id", "feature_hash", "samples", "feature_dim", "rank", "classes", "alpha",
                               "beta", "evaluated"},
                           "head header");
    h.model_id = j.at("model_id").get<std::string>();
    h.feature_hash = j.at("feature_hash").get<std::string>();
    h.samples = j.at("samples").get<Index>();
    h.evaluated = j.at("evaluated").get<std::vector<bool>>();
    const auto& a = j.at("alpha");
    const auto& b = j.at("beta");
    if (a.size() != h.evaluated.size() || b.size() != h.evaluated.size())
      throw FormatError("head alpha/beta/evaluated lengths differ", json_at);
    for (std::size_t i = 0; i < h.evaluated.size(); ++i) {
      h.alpha.push_back(a[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : a[i].get<double>());
      h.beta.push_back(b[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : b[i].get<double>());
      if (h.evaluated[i] && !(h.alpha[i] > 0 && h.beta[i] > 0))
        throw FormatError("head precisions must be positive for evaluated classes", json_at);
    }
    h.right = decode_matrix(in, true);
    const MatrixXd sigma = decode_matrix(in, true);
    if (sigma.cols() != 1) throw FormatError("singular values must be a single column", in.offset());
    h.singular_values = sigma.col(0);
    h.weights = decode_matrix(in);
    const Index d = j.at("feature_dim").get<Index>();
    const Index r = j.at("rank").get<Index>();
    const int c = j.at("classes").get<int>();
    if (h.weights.rows() != d || h.weights.cols() != c || h.right.rows() != d || h.right.cols() != r ||
        h.singular_values.size() != r ||
        static_cast<int>(h.evaluated.size()) != c)
      throw FormatError("head blocks do not match the header shapes", json_at);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("head header schema violation: ") + e.what(), json_at);
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after head dump", in.offset());
  return h;
}

inline void write_head(const fs::path& path, const PredictiveHead& h) { detail::write_file(path, encode_head(h)); }

/// Reads a head; when `expected_hash` is given it must equal the head's recorded feature hash.
inline PredictiveHead read_head(const fs::path& path, std::optional<std::string> expected_hash = std::nullopt) {
  PredictiveHead h = decode_head(detail::read_file(path));
  if (expected_hash && *expected_hash != h.feature_hash)
    throw InputError("head '" + path.string() + "' was fit on features with hash " + h.feature_hash +
                     ", not " + *expected_hash);
  return h;
}

}  // namespace hubrank::io
