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

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hubrank/content_hash.hpp"
#include "hubrank/errors.hpp"
#include "hubrank/features.hpp"
#include "hubrank/logme.hpp"
#include "hubrank/svd.hpp"

namespace hubrank {

/// Posterior predictive weights of one model for every label dimension, with the covariance
/// kept in factored form:
///   A_c^-1 = V diag(1 / (alpha_c + beta_c sigma^2)) V^T + (I - V V^T) / alpha_c.
/// Dimensions skipped by LogME carry m = 0 and are not queryable.
struct PredictiveHead {
  std::string model_id;
  std::string feature_hash;
  Index samples = 0;
  MatrixXd weights;  // D x C
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<bool> evaluated;
  MatrixXd right;  // D x r
  VectorXd singular_values;

  Index feature_dim() const noexcept { return weights.rows(); }
  int classes() const noexcept { return static_cast<int>(weights.cols()); }

  void require_class(int c) const {
    if (c < 0 || c >= classes())
      throw InputError("class " + std::to_string(c) + " out of range for head '" + model_id + "'");
    if (!evaluated[static_cast<std::size_t>(c)])
      throw InputError("class " + std::to_string(c) + " was skipped when head '" + model_id + "' was fit");
  }

  void require_query(const VectorXd& f) const {
    if (f.size() != feature_dim())
      throw InputError("query has " + std::to_string(f.size()) + " dimensions, head '" + model_id +
                       "' expects " + std::to_string(feature_dim()));
  }

  /// A_c x
  VectorXd apply_precision(int c, const VectorXd& x) const {
    require_class(c);
    require_query(x);
    const double a = alpha[static_cast<std::size_t>(c)], b = beta[static_cast<std::size_t>(c)];
    const VectorXd proj = right.transpose() * x;
    return a * x + b * (right * (singular_values.array().square() * proj.array()).matrix());
  }

  /// A_c^-1 x
  VectorXd apply_inverse(int c, const VectorXd& x) const {
    require_class(c);
    require_query(x);
    const double a = alpha[static_cast<std::size_t>(c)], b = beta[static_cast<std::size_t>(c)];
    const VectorXd proj = right.transpose() * x;
    const VectorXd lam = a + b * singular_values.array().square();
    return right * (proj.array() / lam.array()).matrix() + (x - right * proj) / a;
  }
};

inline PredictiveHead make_predictive_head(const SvdFactors& svd, const LogMeReport& report,
                                           std::string model_id, std::string feature_hash = {}) {
  if (report.dims != svd.dims || report.samples != svd.samples)
    throw InputError("LogME report and SVD factors come from different feature matrices");
  PredictiveHead h;
  h.model_id = std::move(model_id);
  h.feature_hash = std::move(feature_hash);
  h.samples = svd.samples;
  h.weights = MatrixXd::Zero(svd.dims, report.label_dims);
  const auto c = static_cast<std::size_t>(report.label_dims);
  h.alpha.assign(c, std::numeric_limits<double>::quiet_NaN());
  h.beta.assign(c, std::numeric_limits<double>::quiet_NaN());
  h.evaluated.assign(c, false);
  for (const auto& d : report.per_dimension) {
    const auto k = static_cast<std::size_t>(d.index);
    h.weights.col(d.index) = d.solution.m;
    h.alpha[k] = d.solution.alpha;
    h.beta[k] = d.solution.beta;
    h.evaluated[k] = true;
  }
  h.right = svd.right;
  h.singular_values = svd.singular_values;
  return h;
}

struct PredictiveMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// y' | f ~ N(f^T m_c, f^T A_c^-1 f + 1 / beta_c)
inline PredictiveMoments predictive_distribution(const PredictiveHead& head, int c, const VectorXd& f) {
  head.require_class(c);
  head.require_query(f);
  PredictiveMoments out;
  out.mean = f.dot(head.weights.col(c));
  out.variance = f.dot(head.apply_inverse(c, f)) + 1.0 / head.beta[static_cast<std::size_t>(c)];
  return out;
}

/// Average predictive mean of K frozen teachers on each training sample: n x C.
struct EnsembleTarget {
  std::vector<std::string> teacher_ids;
  MatrixXd targets;

  Index samples() const noexcept { return targets.rows(); }
  int classes() const noexcept { return static_cast<int>(targets.cols()); }
};

inline EnsembleTarget ensemble_target(std::span<const PredictiveHead> heads,
                                      std::span<const MatrixXd> teacher_features) {
  if (heads.empty()) throw InputError("ensemble needs at least one teacher");
  if (heads.size() != teacher_features.size())
    throw InputError("got " + std::to_string(heads.size()) + " heads but " +
                     std::to_string(teacher_features.size()) + " feature matrices");
  const Index n = teacher_features[0].rows();
  const int c = heads[0].classes();
  EnsembleTarget out;
  out.targets = MatrixXd::Zero(n, c);
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const auto& h = heads[k];
    const auto& f = teacher_features[k];
    if (f.rows() != n) throw InputError("teacher feature matrices disagree on sample count");
    if (f.cols() != h.feature_dim())
      throw InputError("teacher '" + h.model_id + "' features have " + std::to_string(f.cols()) +
                       " dimensions, head expects " + std::to_string(h.feature_dim()));
    if (h.classes() != c) throw InputError("teacher heads disagree on label dimensionality");
    if (!h.feature_hash.empty() && h.feature_hash != content_hash(f))
      throw InputError("features passed for teacher '" + h.model_id + "' are not the ones its head was fit on");
    out.targets.noalias() += f * h.weights;
    out.teacher_ids.push_back(h.model_id);
  }
  out.targets /= static_cast<double>(heads.size());
  if (!detail::all_finite(out.targets)) throw InputError("ensemble targets are not finite");
  return out;
}

/// (1/n) sum_i (1/C) sum_c (target_ic - f_t,i^T m_t,c)^2
inline double b_tuning_loss(const EnsembleTarget& target, const MatrixXd& student_features,
                            const PredictiveHead& student_head) {
  if (student_features.rows() != target.samples())
    throw InputError("student features and ensemble targets disagree on sample count");
  if (student_features.cols() != student_head.feature_dim())
    throw InputError("student features do not match the student head dimension");
  if (student_head.classes() != target.classes())
    throw InputError("student head and ensemble targets disagree on label dimensionality");
  const MatrixXd diff = target.targets - student_features * student_head.weights;
  return diff.squaredNorm() / static_cast<double>(diff.rows() * diff.cols());
}

/// Feature-space distillation baseline with learnable W_k (D_k x D_t):
/// (1/n) sum_i (1/K) sum_k || phi_k(x_i) - W_k phi_t(x_i) ||_2  (unsquared norm).
inline double kd_loss(std::span<const MatrixXd> teacher_features, const MatrixXd& student_features,
                      std::span<const MatrixXd> transforms) {
  if (teacher_features.empty()) throw InputError("distillation needs at least one teacher");
  if (teacher_features.size() != transforms.size())
    throw InputError("need one transform per teacher");
  const Index n = student_features.rows();
  double total = 0.0;
  for (std::size_t k = 0; k < teacher_features.size(); ++k) {
    const auto& phi = teacher_features[k];
    const auto& w = transforms[k];
    if (phi.rows() != n) throw InputError("teacher and student features disagree on sample count");
    if (w.rows() != phi.cols() || w.cols() != student_features.cols())
      throw InputError("transform " + std::to_string(k) + " must be " + std::to_string(phi.cols()) + "x" +
                       std::to_string(student_features.cols()));
    const MatrixXd r = phi - student_features * w.transpose();
    total += r.rowwise().norm().sum();
  }
  return total / (static_cast<double>(n) * static_cast<double>(teacher_features.size()));
}

}  // namespace hubrank
