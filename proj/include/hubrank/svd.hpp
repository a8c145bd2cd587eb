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

#include <algorithm>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hubrank/errors.hpp"
#include "hubrank/features.hpp"

namespace hubrank {

/// Relative cutoff for the numerical rank: sigma_i counts when
/// sigma_i > sigma_1 * max(n, D) * kRankTolerance.
inline constexpr double kRankTolerance = 1e-12;

/// Thin SVD of a feature matrix truncated to its numerical rank r:
/// F ~= left * diag(singular_values) * right^T with left n x r and right D x r.
struct SvdFactors {
  MatrixXd left;
  VectorXd singular_values;
  MatrixXd right;
  Index samples = 0;
  Index dims = 0;

  Index rank() const noexcept { return singular_values.size(); }
};

/// Label energy split into the part inside the column space of F (z_head = U_r^T y)
/// and the residual energy outside it.
struct ProjectedLabels {
  VectorXd z_head;
  double residual_energy = 0.0;
  double total_energy = 0.0;
};

namespace detail {

inline Index numerical_rank(const VectorXd& sigma, Index n, Index d) {
  if (sigma.size() == 0 || !(sigma(0) > 0.0)) return 0;
  const double cutoff = sigma(0) * static_cast<double>(std::max(n, d)) * kRankTolerance;
  Index r = 0;
  while (r < sigma.size() && sigma(r) > cutoff) ++r;
  return r;
}

}  // namespace detail

namespace detail {

struct RawSvd {
  MatrixXd u;
  VectorXd sigma;
  MatrixXd v;
};

/// Thin SVD of a matrix with at least as many rows as columns: Householder QR first, then
/// divide-and-conquer SVD of the small triangular factor.
inline RawSvd tall_svd(const MatrixXd& a) {
  const Index n = a.rows();
  const Index d = a.cols();
  RawSvd out;
  if (n <= d + d / 4) {
    Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.u = svd.matrixU();
    out.sigma = svd.singularValues();
    out.v = svd.matrixV();
    return out;
  }
  const Eigen::HouseholderQR<MatrixXd> qr(a);
  const MatrixXd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<MatrixXd> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = MatrixXd::Zero(n, d);
  out.u.topRows(d) = svd.matrixU();
  out.u.applyOnTheLeft(qr.householderQ());
  out.sigma = svd.singularValues();
  out.v = svd.matrixV();
  return out;
}

}  // namespace detail

/// Thin SVD of F with the numerically null part dropped. Wide matrices are handled through
/// their transpose, so the cost is O(max(n, D) min(n, D)^2).
inline SvdFactors decompose(const FeatureMatrix& features) {
  const MatrixXd& f = features.data();
  const Index n = f.rows();
  const Index d = f.cols();

  detail::RawSvd raw;
  if (n >= d) {
    raw = detail::tall_svd(f);
  } else {
    raw = detail::tall_svd(f.transpose());
    std::swap(raw.u, raw.v);
  }

  const Index r = detail::numerical_rank(raw.sigma, n, d);
  SvdFactors out;
  out.samples = n;
  out.dims = d;
  out.singular_values = raw.sigma.head(r);
  out.left = raw.u.leftCols(r);
  out.right = raw.v.leftCols(r);
  return out;
}

inline ProjectedLabels project_labels(const SvdFactors& svd, const LabelVector& labels) {
  const VectorXd& y = labels.values();
  if (y.size() != svd.samples)
    throw InputError("label length " + std::to_string(y.size()) + " does not match " +
                     std::to_string(svd.samples) + " feature rows");
  ProjectedLabels p;
  p.z_head = svd.left.transpose() * y;
  p.total_energy = y.squaredNorm();
  const double delta = p.total_energy - p.z_head.squaredNorm();
  if (delta < -1e-9 * p.total_energy)
    throw std::logic_error("projected label energy exceeds total energy; left vectors are not orthonormal");
  p.residual_energy = std::max(delta, 0.0);
  return p;
}

}  // namespace hubrank
