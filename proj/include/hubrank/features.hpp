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
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "hubrank/errors.hpp"

namespace hubrank {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline bool all_finite(const Eigen::Ref<const MatrixXd>& m) {
  return m.array().isFinite().all();
}

}  // namespace detail

/// Stacked features of one pre-trained model on one dataset: n samples by D dimensions.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(MatrixXd data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw InputError("feature matrix must have at least one row and one column, got " +
                       std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
    if (!detail::all_finite(data_))
      throw InputError("feature matrix contains non-finite entries");
  }

  const MatrixXd& data() const noexcept { return data_; }
  Index samples() const noexcept { return data_.rows(); }
  Index dims() const noexcept { return data_.cols(); }

 private:
  MatrixXd data_;
};

/// One scalar regression target per sample.
class LabelVector {
 public:
  LabelVector() = default;
  explicit LabelVector(VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) throw InputError("label vector is empty");
    if (!detail::all_finite(values_)) throw InputError("label vector contains non-finite entries");
  }

  const VectorXd& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }

  bool is_constant() const noexcept {
    return (values_.array() == values_(0)).all();
  }

 private:
  VectorXd values_;
};

/// Appends a constant column of ones so the linear model gains an intercept.
inline FeatureMatrix with_intercept(const FeatureMatrix& f) {
  MatrixXd out(f.samples(), f.dims() + 1);
  out.leftCols(f.dims()) = f.data();
  out.col(f.dims()).setOnes();
  return FeatureMatrix(std::move(out));
}

}  // namespace hubrank
