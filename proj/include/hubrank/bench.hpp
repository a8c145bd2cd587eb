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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hubrank/errors.hpp"
#include "hubrank/evidence.hpp"
#include "hubrank/logme.hpp"

namespace hubrank::bench {

/// Synthetic classification problem: Gaussian features, labels from argmax of a random linear
/// teacher plus noise, so every class column carries signal.
struct BenchSpec {
  Index samples = 1000;
  Index dims = 128;
  int classes = 10;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::vector<Backend> backends{Backend::naive, Backend::mackay, Backend::fixed_point};
  double agreement_tolerance = 1e-6;
};

struct BackendTiming {
  Backend backend = Backend::fixed_point;
  double logme = 0.0;
  std::vector<double> seconds;

  double mean_seconds() const {
    double s = 0;
    for (double v : seconds) s += v;
    return seconds.empty() ? 0.0 : s / static_cast<double>(seconds.size());
  }
  double min_seconds() const { return seconds.empty() ? 0.0 : *std::min_element(seconds.begin(), seconds.end()); }
};

struct BenchResult {
  BenchSpec spec;
  double max_disagreement = 0.0;
  std::vector<BackendTiming> timings;
};

class AgreementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::pair<FeatureMatrix, TaskLabels> synthetic_problem(const BenchSpec& spec) {
  if (spec.samples < 2 || spec.dims < 1 || spec.classes < 2) throw InputError("benchmark needs n >= 2, d >= 1, c >= 2");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd f(spec.samples, spec.dims);
  for (Index j = 0; j < f.cols(); ++j)
    for (Index i = 0; i < f.rows(); ++i) f(i, j) = nd(rng);
  MatrixXd w(spec.dims, spec.classes);
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i) w(i, j) = nd(rng);
  const MatrixXd scores = f * w / std::sqrt(static_cast<double>(spec.dims));
  std::vector<int> labels(static_cast<std::size_t>(spec.samples));
  for (Index i = 0; i < f.rows(); ++i) {
    Index arg = 0;
    (scores.row(i).array() + 0.5 * nd(rng)).maxCoeff(&arg);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return {FeatureMatrix(std::move(f)), TaskLabels::classification(std::move(labels), spec.classes)};
}

/// Wall-clock LogME per backend, SVD included. All backends must agree on the first repeat,
/// otherwise AgreementError is thrown and no timings are reported.
inline BenchResult run_benchmark(const BenchSpec& spec) {
  if (spec.repeats < 1) throw InputError("repeats must be >= 1");
  if (spec.backends.empty()) throw InputError("no backends selected");
  const auto [features, labels] = synthetic_problem(spec);
  BenchResult out;
  out.spec = spec;
  for (Backend b : spec.backends) out.timings.push_back({b, 0.0, {}});
  for (int rep = 0; rep < spec.repeats; ++rep) {
    for (auto& t : out.timings) {
      const auto start = std::chrono::steady_clock::now();
      const LogMeReport r = compute_logme(features, labels, t.backend);
      const auto stop = std::chrono::steady_clock::now();
      t.seconds.push_back(std::chrono::duration<double>(stop - start).count());
      t.logme = r.logme;
    }
    if (rep == 0) {
      for (const auto& a : out.timings)
        for (const auto& b : out.timings) out.max_disagreement = std::max(out.max_disagreement, std::abs(a.logme - b.logme));
      if (out.max_disagreement > spec.agreement_tolerance)
        throw AgreementError("backends disagree on LogME by " + std::to_string(out.max_disagreement));
    }
  }
  return out;
}

}  // namespace hubrank::bench
