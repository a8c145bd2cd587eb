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

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hubrank/errors.hpp"
#include "hubrank/evidence.hpp"
#include "hubrank/features.hpp"
#include "hubrank/parallel.hpp"
#include "hubrank/svd.hpp"

namespace hubrank {

enum class TaskKind { classification, regression };

inline std::string_view to_string(TaskKind k) {
  return k == TaskKind::classification ? "classification" : "regression";
}

inline TaskKind parse_task_kind(std::string_view s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "regression") return TaskKind::regression;
  throw InputError("unknown task kind '" + std::string(s) + "'");
}

/// Downstream labels: class indices in [0, C), or an n x C matrix of regression targets.
/// Every task is evaluated as C independent scalar regressions; class indices become
/// {0, 1} one-hot columns.
class TaskLabels {
 public:
  static TaskLabels classification(std::vector<int> indices, int num_classes) {
    if (num_classes < 2) throw InputError("classification needs at least two classes");
    if (indices.empty()) throw InputError("no class labels");
    std::set<int> seen;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const int c = indices[i];
      if (c < 0 || c >= num_classes)
        throw InputError("class index " + std::to_string(c) + " at sample " + std::to_string(i) +
                         " is outside [0, " + std::to_string(num_classes) + ")");
      seen.insert(c);
    }
    if (seen.size() < 2) throw InputError("classification labels contain fewer than two distinct classes");
    TaskLabels out;
    out.kind_ = TaskKind::classification;
    out.indices_ = std::move(indices);
    out.num_dims_ = num_classes;
    return out;
  }

  /// Class count inferred as max index + 1.
  static TaskLabels classification(std::vector<int> indices) {
    int c = 0;
    for (int v : indices) c = std::max(c, v + 1);
    return classification(std::move(indices), c);
  }

  static TaskLabels regression(MatrixXd targets) {
    if (targets.rows() < 1 || targets.cols() < 1) throw InputError("regression targets are empty");
    if (!detail::all_finite(targets)) throw InputError("regression targets contain non-finite entries");
    TaskLabels out;
    out.kind_ = TaskKind::regression;
    out.num_dims_ = static_cast<int>(targets.cols());
    out.targets_ = std::move(targets);
    return out;
  }

  TaskKind kind() const noexcept { return kind_; }
  int dims() const noexcept { return num_dims_; }
  Index samples() const noexcept {
    return kind_ == TaskKind::classification ? static_cast<Index>(indices_.size()) : targets_.rows();
  }
  const std::vector<int>& class_indices() const noexcept { return indices_; }
  const MatrixXd& targets() const noexcept { return targets_; }

  VectorXd column(int c) const {
    if (c < 0 || c >= num_dims_) throw InputError("label dimension " + std::to_string(c) + " out of range");
    if (kind_ == TaskKind::regression) return targets_.col(c);
    VectorXd col = VectorXd::Zero(static_cast<Index>(indices_.size()));
    for (std::size_t i = 0; i < indices_.size(); ++i)
      if (indices_[i] == c) col(static_cast<Index>(i)) = 1.0;
    return col;
  }

 private:
  TaskKind kind_ = TaskKind::classification;
  std::vector<int> indices_;
  MatrixXd targets_;
  int num_dims_ = 0;
};

struct DimensionResult {
  int index = 0;
  EvidenceSolution solution;
};

struct SkippedDimension {
  int index = 0;
  std::string reason;
};

struct LogMeReport {
  std::vector<DimensionResult> per_dimension;
  std::vector<SkippedDimension> skipped;
  double logme = 0.0;
  Backend backend = Backend::fixed_point;
  Index samples = 0;
  Index dims = 0;
  int label_dims = 0;

  const EvidenceSolution* find(int dimension) const {
    for (const auto& d : per_dimension)
      if (d.index == dimension) return &d.solution;
    return nullptr;
  }
};

namespace detail {

inline std::optional<std::string> skip_reason(const TaskLabels& labels, const VectorXd& col) {
  if ((col.array() == col(0)).all()) {
    if (labels.kind() == TaskKind::regression) return "constant target column";
    return col(0) == 0.0 ? "class absent from sample" : "class covers every sample";
  }
  return std::nullopt;
}

}  // namespace detail

/// LogME of one feature matrix: the per-sample maximum log evidence, averaged over label
/// dimensions. The SVD is shared by every dimension; dimensions run in parallel.
inline LogMeReport compute_logme(const FeatureMatrix& features, const SvdFactors& svd,
                                 const TaskLabels& labels, Backend backend = Backend::fixed_point,
                                 const EvidenceOptions& opt = {}) {
  if (labels.samples() != features.samples())
    throw InputError("labels have " + std::to_string(labels.samples()) + " samples but features have " +
                     std::to_string(features.samples()));
  const int c = labels.dims();
  std::vector<std::optional<EvidenceSolution>> solved(static_cast<std::size_t>(c));
  std::vector<std::optional<std::string>> reasons(static_cast<std::size_t>(c));

  parallel_for(static_cast<std::size_t>(c), [&](std::size_t k) {
    const VectorXd col = labels.column(static_cast<int>(k));
    if (auto why = detail::skip_reason(labels, col)) {
      reasons[k] = std::move(why);
      return;
    }
    solved[k] = maximize_evidence(features, svd, LabelVector(col), backend, opt);
  });

  LogMeReport report;
  report.backend = backend;
  report.samples = features.samples();
  report.dims = features.dims();
  report.label_dims = c;
  double sum = 0.0;
  for (int k = 0; k < c; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (solved[idx]) {
      sum += solved[idx]->normalized_evidence;
      report.per_dimension.push_back({k, std::move(*solved[idx])});
    } else {
      report.skipped.push_back({k, *reasons[idx]});
    }
  }
  if (report.per_dimension.empty()) throw DegenerateLabelsError("no usable label dimension");
  report.logme = sum / static_cast<double>(report.per_dimension.size());
  return report;
}

inline LogMeReport compute_logme(const FeatureMatrix& features, const TaskLabels& labels,
                                 Backend backend = Backend::fixed_point, const EvidenceOptions& opt = {}) {
  if (labels.samples() != features.samples())
    throw InputError("labels have " + std::to_string(labels.samples()) + " samples but features have " +
                     std::to_string(features.samples()));
  return compute_logme(features, decompose(features), labels, backend, opt);
}

/// Single-target regression path; identical to one dimension of compute_logme.
inline EvidenceSolution compute_logme_regression_1d(const FeatureMatrix& features, const LabelVector& y,
                                                    Backend backend = Backend::fixed_point,
                                                    const EvidenceOptions& opt = {}) {
  const SvdFactors svd = decompose(features);
  return maximize_evidence(features, svd, y, backend, opt);
}

}  // namespace hubrank
